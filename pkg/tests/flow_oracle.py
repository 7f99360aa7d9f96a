"""Independent reference computation of the 48 flow features.

Deliberately written with plain Python loops and the statistics module so
it shares no code with the package implementation.  The conventions
(population statistics, microsecond durations, zero for empty sets and
zero-duration rates, nominal header sizes) are re-stated here from the
documented contract.
"""

import numpy as np

ORACLE_HEADER_BYTES = {6: 40, 17: 28, 1: 28}


def _stats(values):
    if not values:
        return {"min": 0.0, "max": 0.0, "mean": 0.0, "std": 0.0}
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return {
        "min": float(min(values)),
        "max": float(max(values)),
        "mean": float(mean),
        "std": float(var**0.5),
    }


def _iats(ts):
    ts = sorted(ts)
    return [ts[i + 1] - ts[i] for i in range(len(ts) - 1)]


def oracle_features(fwd, bwd, protocol, activity_timeout_s=5.0):
    """fwd/bwd: lists of (ts_us, length). Returns dict name -> value."""
    all_pkts = sorted(fwd + bwd, key=lambda p: p[0])
    all_ts = [p[0] for p in all_pkts]
    all_len = [p[1] for p in all_pkts]
    fwd_ts = [p[0] for p in fwd]
    fwd_len = [p[1] for p in fwd]
    bwd_ts = [p[0] for p in bwd]
    bwd_len = [p[1] for p in bwd]

    duration = float(max(all_ts) - min(all_ts))
    dur_s = duration / 1_000_000.0

    def rate(count):
        if duration == 0:
            return 0.0
        return count / dur_s

    fl = _stats(fwd_len)
    bl = _stats(bwd_len)
    pl = _stats(all_len)
    fi = _stats(_iats(all_ts))
    ff = _stats(_iats(fwd_ts))
    bb = _stats(_iats(bwd_ts))

    header = ORACLE_HEADER_BYTES[protocol]

    # active runs / idle gaps
    timeout_us = activity_timeout_s * 1_000_000.0
    active = []
    idle = []
    run_start = all_ts[0]
    prev = all_ts[0]
    for t in all_ts[1:]:
        if t - prev > timeout_us:
            active.append(prev - run_start)
            idle.append(t - prev)
            run_start = t
        prev = t
    active.append(prev - run_start)
    act = _stats(active)
    idl = _stats(idle)

    total_bytes = float(sum(all_len))
    return {
        "Protocol": float(protocol),
        "Flow duration": duration,
        "total Fwd Packet": float(len(fwd)),
        "total Bwd packets": float(len(bwd)),
        "total Length of Fwd Packet": float(sum(fwd_len)),
        "total Length of Bwd Packet": float(sum(bwd_len)),
        "Fwd Packet Length Min": fl["min"],
        "Fwd Packet Length Max": fl["max"],
        "Fwd Packet Length Mean": fl["mean"],
        "Fwd Packet Length Std": fl["std"],
        "Bwd Packet Length Min": bl["min"],
        "Bwd Packet Length Max": bl["max"],
        "Bwd Packet Length Mean": bl["mean"],
        "Bwd Packet Length Std": bl["std"],
        "Flow Bytes/s": rate(total_bytes),
        "Flow Packets/s": rate(float(len(all_pkts))),
        "Flow IAT Mean": fi["mean"],
        "Flow IAT Std": fi["std"],
        "Flow IAT Max": fi["max"],
        "Flow IAT Min": fi["min"],
        "Fwd IAT Min": ff["min"],
        "Fwd IAT Max": ff["max"],
        "Fwd IAT Mean": ff["mean"],
        "Fwd IAT Std": ff["std"],
        "Fwd IAT Total": float(max(fwd_ts) - min(fwd_ts)) if fwd_ts else 0.0,
        "Bwd IAT Min": bb["min"],
        "Bwd IAT Max": bb["max"],
        "Bwd IAT Mean": bb["mean"],
        "Bwd IAT Std": bb["std"],
        "Bwd IAT Total": float(max(bwd_ts) - min(bwd_ts)) if bwd_ts else 0.0,
        "Fwd Header Length": float(header * len(fwd)),
        "Bwd Header Length": float(header * len(bwd)),
        "FWD Packets/s": rate(float(len(fwd))),
        "Bwd Packets/s": rate(float(len(bwd))),
        "Packet Length Min": pl["min"],
        "Packet Length Max": pl["max"],
        "Packet Length Mean": pl["mean"],
        "Packet Length Std": pl["std"],
        "Packet Length Variance": pl["std"] ** 2,
        "Average Packet Size": total_bytes / len(all_pkts),
        "Active Min": act["min"],
        "Active Mean": act["mean"],
        "Active Max": act["max"],
        "Active Std": act["std"],
        "Idle Min": idl["min"],
        "Idle Mean": idl["mean"],
        "Idle Max": idl["max"],
        "Idle Std": idl["std"],
    }


def random_flow(rng):
    """Random FlowRecord-shaped packet lists exercising degenerate cases."""
    protocol = int(rng.choice([1, 6, 17]))
    n_fwd = int(rng.integers(1, 21))
    n_bwd = int(rng.integers(0, 21))
    base = int(rng.integers(0, 10_000_000))
    # occasional multi-second gaps so idle periods appear
    gaps = rng.choice([1, 1000, 80_000, 7_000_000], size=n_fwd + n_bwd)
    ts = base + np.cumsum(rng.integers(0, 5000, size=n_fwd + n_bwd) + gaps)
    lengths = rng.integers(40, 1500, size=n_fwd + n_bwd)
    order = rng.permutation(n_fwd + n_bwd)
    fwd = [(int(ts[i]), int(lengths[i])) for i in sorted(order[:n_fwd])]
    bwd = [(int(ts[i]), int(lengths[i])) for i in sorted(order[n_fwd:])]
    return fwd, bwd, protocol
