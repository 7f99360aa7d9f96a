"""Bidirectional flow assembly and statistical feature extraction.

Packets are grouped by their bidirectional 5-tuple; the first packet of a
flow fixes the forward direction.  A silence longer than the flow timeout
splits a key into a new flow.  Each completed flow is summarized into the
48-value feature vector listed in ``FEATURE_NAMES``.

Conventions used throughout (they must match the test oracles exactly):
durations and inter-arrival times are microseconds, rates are per second,
sizes are bytes, spread statistics are population statistics (divide by n),
zero-duration flows report 0 for all per-second rates, and statistics over
an empty set are 0.  Header sizes are nominal per protocol since simulated
packets carry no real headers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, OrderingError
from .records import PROTO_ICMP, PROTO_TCP, PROTO_UDP

FEATURE_NAMES = (
    "Protocol",
    "Flow duration",
    "total Fwd Packet",
    "total Bwd packets",
    "total Length of Fwd Packet",
    "total Length of Bwd Packet",
    "Fwd Packet Length Min",
    "Fwd Packet Length Max",
    "Fwd Packet Length Mean",
    "Fwd Packet Length Std",
    "Bwd Packet Length Min",
    "Bwd Packet Length Max",
    "Bwd Packet Length Mean",
    "Bwd Packet Length Std",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd IAT Min",
    "Fwd IAT Max",
    "Fwd IAT Mean",
    "Fwd IAT Std",
    "Fwd IAT Total",
    "Bwd IAT Min",
    "Bwd IAT Max",
    "Bwd IAT Mean",
    "Bwd IAT Std",
    "Bwd IAT Total",
    "Fwd Header Length",
    "Bwd Header Length",
    "FWD Packets/s",
    "Bwd Packets/s",
    "Packet Length Min",
    "Packet Length Max",
    "Packet Length Mean",
    "Packet Length Std",
    "Packet Length Variance",
    "Average Packet Size",
    "Active Min",
    "Active Mean",
    "Active Max",
    "Active Std",
    "Idle Min",
    "Idle Mean",
    "Idle Max",
    "Idle Std",
)

N_FEATURES = len(FEATURE_NAMES)

# Nominal IP + transport header bytes per protocol code.
HEADER_BYTES = {PROTO_TCP: 40, PROTO_UDP: 28, PROTO_ICMP: 28}

DEFAULT_FLOW_TIMEOUT_S = 120.0
DEFAULT_ACTIVITY_TIMEOUT_S = 5.0


@dataclass
class FlowRecord:
    """All packets of one bidirectional flow, split by direction.

    The 5-tuple is stored in forward orientation (direction of the first
    packet).  ``fwd``/``bwd`` hold (ts_us, length) pairs in arrival order.
    """

    src_addr: str
    dst_addr: str
    src_port: int
    dst_port: int
    protocol: int
    switch_id: int
    in_port: int
    fwd: list = field(default_factory=list)
    bwd: list = field(default_factory=list)

    @property
    def n_packets(self):
        return len(self.fwd) + len(self.bwd)

    @property
    def first_ts(self):
        return min(p[0] for p in self.fwd + self.bwd)

    @property
    def last_ts(self):
        return max(p[0] for p in self.fwd + self.bwd)

    @property
    def provenance(self):
        return f"s{self.switch_id}:p{self.in_port}"


@dataclass
class FeatureVector:
    """The 48 extracted statistics plus label and provenance."""

    values: np.ndarray
    label: str | None = None
    provenance: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (N_FEATURES,):
            raise DataValidationError(
                f"feature vector must have {N_FEATURES} values, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataValidationError("feature vector contains non-finite values")


@dataclass
class AssemblyResult:
    flows: list
    rejected: int = 0


def _canonical_key(rec):
    a = (rec.src_addr, rec.src_port)
    b = (rec.dst_addr, rec.dst_port)
    return (min(a, b), max(a, b), rec.protocol)


def assemble_flows(records, flow_timeout_s=DEFAULT_FLOW_TIMEOUT_S) -> AssemblyResult:
    """Group a ts-sorted packet stream into bidirectional flows.

    Malformed records are rejected row by row and counted; an out-of-order
    stream raises OrderingError.
    """
    timeout_us = int(round(flow_timeout_s * 1e6))
    open_flows = {}
    done = []
    rejected = 0
    last_ts = None
    for rec in records:
        if last_ts is not None and rec.ts_us < last_ts:
            raise OrderingError(f"records not sorted: ts {rec.ts_us} after {last_ts}")
        last_ts = rec.ts_us
        try:
            rec.validate()
        except DataValidationError:
            rejected += 1
            continue
        key = _canonical_key(rec)
        flow = open_flows.get(key)
        if flow is not None and rec.ts_us - flow.last_ts > timeout_us:
            done.append(flow)
            flow = None
        if flow is None:
            flow = FlowRecord(
                src_addr=rec.src_addr,
                dst_addr=rec.dst_addr,
                src_port=rec.src_port,
                dst_port=rec.dst_port,
                protocol=rec.protocol,
                switch_id=rec.switch_id,
                in_port=rec.in_port,
            )
            open_flows[key] = flow
        forward = (rec.src_addr, rec.src_port) == (flow.src_addr, flow.src_port)
        (flow.fwd if forward else flow.bwd).append((rec.ts_us, rec.length))
    done.extend(open_flows.values())
    done.sort(key=lambda f: f.first_ts)
    return AssemblyResult(flows=done, rejected=rejected)


def _spread(values):
    """(min, max, mean, population std) with zeros for an empty set."""
    if len(values) == 0:
        return 0.0, 0.0, 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.min()), float(arr.max()), float(arr.mean()), float(arr.std())


def _gaps(ts):
    if len(ts) < 2:
        return np.array([], dtype=np.float64)
    arr = np.asarray(sorted(ts), dtype=np.float64)
    return np.diff(arr)


def _activity_periods(ts_sorted, activity_timeout_us):
    """Split the packet train into active runs and idle gaps."""
    active = []
    idle = []
    run_start = ts_sorted[0]
    prev = ts_sorted[0]
    for t in ts_sorted[1:]:
        gap = t - prev
        if gap > activity_timeout_us:
            active.append(prev - run_start)
            idle.append(gap)
            run_start = t
        prev = t
    active.append(prev - run_start)
    return active, idle


def extract_features(flow: FlowRecord, activity_timeout_s=DEFAULT_ACTIVITY_TIMEOUT_S,
                     label=None) -> FeatureVector:
    """Compute the 48 flow statistics for one assembled flow."""
    if flow.n_packets == 0:
        raise DataValidationError("cannot extract features from an empty flow")
    fwd_ts = [p[0] for p in flow.fwd]
    fwd_len = [p[1] for p in flow.fwd]
    bwd_ts = [p[0] for p in flow.bwd]
    bwd_len = [p[1] for p in flow.bwd]
    all_ts = sorted(fwd_ts + bwd_ts)
    all_len = fwd_len + bwd_len

    duration_us = float(all_ts[-1] - all_ts[0])
    duration_s = duration_us / 1e6
    total_bytes = float(sum(all_len))
    n_total = len(all_len)

    f_min, f_max, f_mean, f_std = _spread(fwd_len)
    b_min, b_max, b_mean, b_std = _spread(bwd_len)
    p_min, p_max, p_mean, p_std = _spread(all_len)

    flow_iat = _gaps(all_ts)
    fwd_iat = _gaps(fwd_ts)
    bwd_iat = _gaps(bwd_ts)
    fi_min, fi_max, fi_mean, fi_std = _spread(flow_iat)
    ff_min, ff_max, ff_mean, ff_std = _spread(fwd_iat)
    bb_min, bb_max, bb_mean, bb_std = _spread(bwd_iat)

    header = HEADER_BYTES[flow.protocol]

    def per_second(count):
        return count / duration_s if duration_us > 0 else 0.0

    timeout_us = activity_timeout_s * 1e6
    active, idle = _activity_periods(all_ts, timeout_us)
    a_min, a_max, a_mean, a_std = _spread(active)
    i_min, i_max, i_mean, i_std = _spread(idle)

    fwd_iat_total = float(max(fwd_ts) - min(fwd_ts)) if fwd_ts else 0.0
    bwd_iat_total = float(max(bwd_ts) - min(bwd_ts)) if bwd_ts else 0.0

    values = np.array(
        [
            float(flow.protocol),
            duration_us,
            float(len(fwd_len)),
            float(len(bwd_len)),
            float(sum(fwd_len)),
            float(sum(bwd_len)),
            f_min,
            f_max,
            f_mean,
            f_std,
            b_min,
            b_max,
            b_mean,
            b_std,
            per_second(total_bytes),
            per_second(float(n_total)),
            fi_mean,
            fi_std,
            fi_max,
            fi_min,
            ff_min,
            ff_max,
            ff_mean,
            ff_std,
            fwd_iat_total,
            bb_min,
            bb_max,
            bb_mean,
            bb_std,
            bwd_iat_total,
            float(header * len(fwd_len)),
            float(header * len(bwd_len)),
            per_second(float(len(fwd_len))),
            per_second(float(len(bwd_len))),
            p_min,
            p_max,
            p_mean,
            p_std,
            p_std * p_std,
            total_bytes / n_total,
            a_min,
            a_mean,
            a_max,
            a_std,
            i_min,
            i_mean,
            i_max,
            i_std,
        ]
    )
    return FeatureVector(values=values, label=label, provenance=flow.provenance)


def extract_all(flows, activity_timeout_s=DEFAULT_ACTIVITY_TIMEOUT_S, labeler=None):
    """Extract features for every flow; ``labeler(flow) -> str`` labels them."""
    out = []
    for flow in flows:
        label = labeler(flow) if labeler is not None else None
        out.append(extract_features(flow, activity_timeout_s, label=label))
    return out


def write_feature_csv(vectors, path, header_comment=None):
    """Write feature vectors with the exact column names plus label and
    provenance columns."""
    import csv

    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_NAMES) + ["label", "provenance"])
        for vec in vectors:
            row = [repr(float(v)) for v in vec.values]
            writer.writerow(row + [vec.label or "", vec.provenance or ""])
    return path
