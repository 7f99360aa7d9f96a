"""Command-line pipeline: simulate, detect, extract, train, evaluate,
mitigate.

Configuration is a flat key=value text file (``#`` comments allowed) plus
repeatable ``--set key=value`` overrides; every artifact carries a header
comment with the effective config hash and the run seed.  All randomness
derives from the single ``--seed`` flag.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import classifier as clf
from . import metrics as evalkit
from . import mitigation
from . import portwatch
from . import preprocess
from .errors import (
    ConfigurationError,
    DataValidationError,
    SdnGuardError,
    TrainingDivergedError,
)
from .flows import assemble_flows, extract_all, write_feature_csv
from .records import read_packet_records
from .simnet import (
    AttackSpec,
    SimOptions,
    Simulation,
    attacker_addresses,
    default_topology,
    emit_packet_records,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

DEFAULTS = {
    "topology.n_switches": 4,
    "topology.hosts_per_switch": 4,
    "topology.attacker_profile": "",
    "topology.flow_table_capacity": 2000,
    "topology.buffer_capacity": 1000,
    "topology.controller_capacity": 5000.0,
    "sim.window_s": 1.0,
    "sim.duration_s": 60.0,
    "sim.fresh_key_prob": 0.01,
    "sim.pool_size": 20,
    "sim.rate_scale": 1.0,
    "attack.enabled": True,
    "attack.host": "host1",
    "attack.intensity_bps": 20e6,
    "attack.on_s": 1.0,
    "attack.off_s": 5.0,
    "attack.start_s": 0.0,
    "attack.end_s": "",
    "attack.packet_bytes": 60,
    "coarse.quantile": 0.01,
    "coarse.debounce": 1,
    "coarse.calibration_duration_s": 60.0,
    "flows.flow_timeout_s": 120.0,
    "flows.activity_timeout_s": 5.0,
    "prep.train_fraction": 0.7,
    "prep.exclude_classes": "U2R",
    "model.level": 3,
    "model.conv_channels": "32,64",
    "model.dropout_rates": "0.2,0.3",
    "model.lstm_units": 128,
    "model.learning_rate": 0.01,
    "model.l2": 1e-4,
    "model.batch_size": 8,
    "model.epochs": 50,
    "model.wavelet": "DB4",
    "model.dump_branches": "",
    "mitigation.t_lim_s": 60.0,
    "crossval.k": 10,
}


def load_config(path=None, overrides=()):
    values = dict(DEFAULTS)
    if path:
        text = Path(path).read_text()
        for line_no, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{line_no}: expected key = value")
            values[key.strip()] = raw.strip()
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set {item!r}: expected key=value")
        values[key.strip()] = raw.strip()
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return values


def config_hash(values, seed):
    canon = json.dumps({**{k: str(v) for k, v in values.items()}, "seed": seed},
                       sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _get(values, key, kind):
    raw = values[key]
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if raw == "" and kind is not str:
        return None
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"config key {key} has invalid value {raw!r}") from None


def _pair(values, key, kind):
    raw = str(values[key])
    parts = [p for p in raw.split(",") if p.strip()]
    return tuple(kind(p) for p in parts)


def build_simulation(cfg, seed, capture):
    profile = str(cfg["topology.attacker_profile"]).strip() or None
    topo = default_topology(
        n_switches=_get(cfg, "topology.n_switches", int),
        hosts_per_switch=_get(cfg, "topology.hosts_per_switch", int),
        attacker_profile=profile,
        flow_table_capacity=_get(cfg, "topology.flow_table_capacity", int),
        buffer_capacity=_get(cfg, "topology.buffer_capacity", int),
    )
    topo.controller_capacity = _get(cfg, "topology.controller_capacity", float)
    options = SimOptions(
        window_s=_get(cfg, "sim.window_s", float),
        capture=capture,
        fresh_key_prob=_get(cfg, "sim.fresh_key_prob", float),
        pool_size=_get(cfg, "sim.pool_size", int),
        rate_scale=_get(cfg, "sim.rate_scale", float),
    )
    sim = Simulation(topo, seed=seed, options=options)
    if _get(cfg, "attack.enabled", bool):
        sim.inject_attack(attack_spec(cfg))
    return sim, topo


def attack_spec(cfg):
    end = _get(cfg, "attack.end_s", float)
    return AttackSpec(
        attacker_host=str(cfg["attack.host"]),
        intensity_bps=_get(cfg, "attack.intensity_bps", float),
        on_s=_get(cfg, "attack.on_s", float),
        off_s=_get(cfg, "attack.off_s", float),
        start_s=_get(cfg, "attack.start_s", float),
        end_s=end,
        packet_bytes=_get(cfg, "attack.packet_bytes", int),
    )


def classifier_config(cfg, classes):
    return clf.ClassifierConfig(
        level=_get(cfg, "model.level", int),
        conv_channels=_pair(cfg, "model.conv_channels", int),
        dropout_rates=_pair(cfg, "model.dropout_rates", float),
        lstm_units=_get(cfg, "model.lstm_units", int),
        classes=tuple(classes),
        learning_rate=_get(cfg, "model.learning_rate", float),
        l2=_get(cfg, "model.l2", float),
        batch_size=_get(cfg, "model.batch_size", int),
        epochs=_get(cfg, "model.epochs", int),
        wavelet=str(cfg["model.wavelet"]),
    )


def _stamp(cfg, seed):
    return f"config_hash={config_hash(cfg, seed)} seed={seed}"


def _attack_window_indices(cfg, n_windows):
    """Window indices fully inside an attack on-phase (window-aligned)."""
    on = _get(cfg, "attack.on_s", float)
    off = _get(cfg, "attack.off_s", float)
    start = _get(cfg, "attack.start_s", float)
    window = _get(cfg, "sim.window_s", float)
    period = on + off
    out = set()
    for idx in range(n_windows):
        t = idx * window
        phase = (t - start) % period
        if t >= start and phase < on and phase + window <= on + 1e-9:
            out.add(idx)
    return out


# -- subcommand handlers ----------------------------------------------------


def cmd_simulate(cfg, seed, out):
    sim, _ = build_simulation(cfg, seed, capture=True)
    result = sim.run(_get(cfg, "sim.duration_s", float))
    stamp = _stamp(cfg, seed)
    emit_packet_records(result.records, out / "packets.csv", header_comment=stamp)
    windows = portwatch.from_simulation(result)
    verdicts = ["unjudged"] * len(windows)
    _write_plain_window_csv(windows, verdicts, out / "window_stats.csv", stamp)
    return {"windows": len(windows), "records": len(result.records)}


def _write_plain_window_csv(windows, verdicts, path, stamp):
    import csv

    with open(path, "w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["window_index", "switch_id", "num_flow_in", "num_flow_out",
             "num_packet_in", "rate_packet_in", "rate_flow_io", "verdict"]
        )
        for stats, verdict in zip(windows, verdicts):
            ratios = portwatch.compute_ratios(stats)
            fmt = lambda v: "saturated" if v is None else repr(v)
            writer.writerow(
                [stats.window_index, stats.switch_id, stats.num_flow_in,
                 stats.num_flow_out, stats.num_packet_in,
                 fmt(ratios.rate_packet_in), fmt(ratios.rate_flow_io), str(verdict)]
            )


def cmd_calibrate(cfg, seed, out):
    calib_cfg = dict(cfg)
    calib_cfg["attack.enabled"] = "false"
    sim, _ = build_simulation(calib_cfg, seed, capture=False)
    result = sim.run(_get(cfg, "coarse.calibration_duration_s", float))
    windows = portwatch.from_simulation(result)
    detector = portwatch.PortRatioDetector(
        quantile=_get(cfg, "coarse.quantile", float)
    ).fit(windows)
    detector.thresholds_.to_file(out / "thresholds.txt", header_comment=_stamp(cfg, seed))
    return {
        "normal_windows": len(windows),
        "packet_in_threshold": detector.thresholds_.packet_in_threshold,
        "flow_io_threshold": detector.thresholds_.flow_io_threshold,
    }


def _coarse_run(cfg, seed, out, stamp):
    """Calibrate (seed+1 normal run), run the attack scenario, judge windows."""
    summary = cmd_calibrate(cfg, seed + 1, out)
    thresholds = portwatch.Thresholds.from_file(out / "thresholds.txt")
    sim, topo = build_simulation(cfg, seed, capture=False)
    result = sim.run(_get(cfg, "sim.duration_s", float))
    windows = portwatch.from_simulation(result)
    detector = portwatch.PortRatioDetector(
        quantile=_get(cfg, "coarse.quantile", float),
        debounce=_get(cfg, "coarse.debounce", int),
    )
    detector.thresholds_ = thresholds
    verdicts = detector.predict(windows)
    portwatch.write_window_csv(windows, verdicts, out / "coarse_windows.csv", stamp)

    victim_switch, victim_port = topo.attachments[str(cfg["attack.host"])]
    n_windows = max(w.window_index for w in windows) + 1 if windows else 0
    attack_on = _attack_window_indices(cfg, n_windows)
    hits = misses = 0
    false_by_switch = {}
    windows_by_switch = {}
    flagged = [
        (w, v) for w, v in zip(windows, verdicts) if v is portwatch.Verdict.ABNORMAL
    ]
    for w, v in zip(windows, verdicts):
        windows_by_switch[w.switch_id] = windows_by_switch.get(w.switch_id, 0) + 1
        is_attack_window = w.switch_id == victim_switch and w.window_index in attack_on
        if is_attack_window:
            if v is portwatch.Verdict.ABNORMAL:
                hits += 1
            else:
                misses += 1
        elif v is portwatch.Verdict.ABNORMAL and w.switch_id != victim_switch:
            false_by_switch[w.switch_id] = false_by_switch.get(w.switch_id, 0) + 1
    recall = hits / (hits + misses) if (hits + misses) else None
    false_rates = {
        str(sid): false_by_switch.get(sid, 0) / windows_by_switch[sid]
        for sid in sorted(windows_by_switch)
        if sid != victim_switch
    }
    attributions = sorted(
        {(w.switch_id, w.top_port()) for w, _ in flagged if w.top_port() is not None}
    )
    summary.update(
        {
            "victim_switch": victim_switch,
            "victim_port": victim_port,
            "attack_windows": hits + misses,
            "coarse_recall": recall,
            "false_flag_rates": false_rates,
            "flagged_windows": len(flagged),
            "attributions": [list(a) for a in attributions],
        }
    )
    return summary, windows, verdicts, attack_on


def cmd_coarse(cfg, seed, out):
    stamp = _stamp(cfg, seed)
    summary, _, _, _ = _coarse_run(cfg, seed, out, stamp)
    return summary


def cmd_extract(cfg, seed, out, packets_path):
    stamp = _stamp(cfg, seed)
    records = read_packet_records(packets_path)
    assembly = assemble_flows(records, _get(cfg, "flows.flow_timeout_s", float))
    _, topo = build_simulation(cfg, seed, capture=False)
    attackers = attacker_addresses(topo)
    vectors = extract_all(
        assembly.flows,
        activity_timeout_s=_get(cfg, "flows.activity_timeout_s", float),
        labeler=lambda f: "attack" if f.src_addr in attackers else "normal",
    )
    write_feature_csv(vectors, out / "features.csv", header_comment=stamp)
    return {
        "flows": len(assembly.flows),
        "rejected_records": assembly.rejected,
        "attack_flows": sum(1 for v in vectors if v.label == "attack"),
    }


def cmd_prep(cfg, seed, out, features_path):
    stamp = _stamp(cfg, seed)
    exclude = tuple(
        c.strip() for c in str(cfg["prep.exclude_classes"]).split(",") if c.strip()
    )
    ds = preprocess.load_feature_csv(features_path, exclude_classes=exclude)
    cleaned, report = preprocess.clean(ds)
    train, test = preprocess.split(
        cleaned, train_fraction=_get(cfg, "prep.train_fraction", float), seed=seed
    )
    train_n, stats = preprocess.normalize(train)
    test_n = preprocess.apply_normalization(test, stats)
    _write_dataset(train_n, out / "train.csv", stamp)
    _write_dataset(test_n, out / "test.csv", stamp)
    preprocess.write_stats_sidecar(stats, out / "normalization.csv", header_comment=stamp)
    return {
        "rows": len(ds),
        "train_rows": len(train_n),
        "test_rows": len(test_n),
        "dropped_columns": report.dropped_columns,
        "imputed": report.imputed,
        "class_counts": cleaned.class_counts(),
    }


def _write_dataset(ds, path, stamp):
    import csv

    with open(path, "w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["label", "provenance"])
        prov = ds.provenance or [""] * len(ds)
        for row, label, p in zip(ds.X, ds.labels, prov):
            writer.writerow([repr(float(v)) for v in row] + [label, p])


def _load_dataset(path):
    return preprocess.load_feature_csv(path)


def cmd_train(cfg, seed, out, train_path, test_path=None):
    stamp = _stamp(cfg, seed)
    train = _load_dataset(train_path)
    classes = sorted(set(train.labels.tolist()))
    config = classifier_config(cfg, classes)
    dump = str(cfg["model.dump_branches"]).strip()
    if dump:
        from .wavelets import write_branch_csv

        write_branch_csv(
            train.X, config.level, out / dump, wavelet=config.wavelet,
            header_comment=stamp,
        )
    model = clf.build_model(config, seed=seed)
    test = _load_dataset(test_path) if test_path else None
    history = clf.train_model(
        model,
        train.X,
        train.labels,
        seed=seed + 1,
        X_val=test.X if test is not None else None,
        y_val=test.labels if test is not None else None,
    )
    clf.save_model(model, out / "model.ckpt", meta=stamp)
    evalkit.write_loss_curve_csv(
        history.losses,
        out / "loss_curve.csv",
        val_accuracy=history.val_accuracy or None,
        header_comment=stamp,
    )
    summary = {
        "epochs": len(history.losses),
        "final_loss": history.losses[-1],
        "loss_stabilized": history.stabilized(),
        "classes": classes,
    }
    if test is not None:
        pred = clf.predict_model(model, test.X)
        cm = evalkit.confusion(test.labels.tolist(), pred.tolist(), classes)
        evalkit.write_confusion_csv(cm, out / "confusion.csv", stamp)
        summary["test_accuracy"] = evalkit.multiclass_accuracy(cm)
        if "normal" in classes or "Normal" in classes:
            normal = "normal" if "normal" in classes else "Normal"
            bm = evalkit.binary_metrics(cm, normal)
            evalkit.write_metrics_csv(
                [("multifreq", Path(str(train_path)).stem, bm)],
                out / "metrics.csv",
                stamp,
            )
            summary["binary"] = bm.as_dict()
    return summary


def cmd_crossval(cfg, seed, out, train_path):
    train = _load_dataset(train_path)
    classes = sorted(set(train.labels.tolist()))
    config = classifier_config(cfg, classes)
    results, mean, std = clf.cross_validate(
        train.X, train.labels, config, k=_get(cfg, "crossval.k", int), seed=seed
    )
    with open(out / "crossval.csv", "w") as fh:
        fh.write(f"# {_stamp(cfg, seed)}\n")
        fh.write("fold,accuracy,n_validation\n")
        for r in results:
            fh.write(f"{r.fold},{r.accuracy!r},{r.n_validation}\n")
    return {"folds": len(results), "mean_accuracy": mean, "std_accuracy": std}


def cmd_eval(cfg, seed, out, model_path, test_path):
    stamp = _stamp(cfg, seed)
    model = clf.load_model(model_path)
    test = _load_dataset(test_path)
    probs = clf.predict_proba_model(model, test.X)
    preds = clf.predict_model(model, test.X)
    clf.write_predictions_csv(
        test.provenance or [""] * len(test), preds, probs, out / "predictions.csv", stamp
    )
    classes = list(model.config.classes)
    cm = evalkit.confusion(test.labels.tolist(), preds.tolist(), classes)
    evalkit.write_confusion_csv(cm, out / "confusion.csv", stamp)
    summary = {"accuracy": evalkit.multiclass_accuracy(cm)}
    for normal in ("normal", "Normal"):
        if normal in classes:
            bm = evalkit.binary_metrics(cm, normal)
            evalkit.write_metrics_csv(
                [("multifreq", Path(str(test_path)).stem, bm)], out / "metrics.csv", stamp
            )
            summary["binary"] = bm.as_dict()
            break
    return summary


def cmd_mitigate_demo(cfg, seed, out):
    stamp = _stamp(cfg, seed)
    duration = _get(cfg, "sim.duration_s", float)
    baseline_sim, topo = build_simulation(cfg, seed, capture=False)
    baseline = baseline_sim.run(duration)

    victim = topo.attachments[str(cfg["attack.host"])]
    rules = mitigation.derive_rules(
        [victim], now_us=0, t_lim_s=_get(cfg, "mitigation.t_lim_s", float)
    )
    ruled_sim, _ = build_simulation(cfg, seed, capture=False)
    mitigation.apply_rules(ruled_sim, rules)
    ruled = ruled_sim.run(duration)
    mitigation.write_rules_csv(rules, out / "rules.csv", stamp)

    def packet_in_total(result, sid):
        return sum(w.num_packet_in for w in result.window_stats if w.switch_id == sid)

    unchanged = all(
        baseline.port_counters[key] == ruled.port_counters[key]
        for key in baseline.port_counters
        if key != victim
    )
    return {
        "victim": list(victim),
        "rules": len(rules),
        "baseline_packet_in": packet_in_total(baseline, victim[0]),
        "ruled_packet_in": packet_in_total(ruled, victim[0]),
        "other_ports_unchanged": unchanged,
    }


def cmd_e2e(cfg, seed, out):
    """Full hierarchy: coarse detection gates fine detection, which gates
    mitigation."""
    stamp = _stamp(cfg, seed)
    summary = {}

    coarse_summary, windows, verdicts, _ = _coarse_run(cfg, seed, out, stamp)
    summary["coarse"] = coarse_summary

    flagged_switches = sorted(
        {
            w.switch_id
            for w, v in zip(windows, verdicts)
            if v is portwatch.Verdict.ABNORMAL
        }
    )
    summary["fine_detection_invoked"] = bool(flagged_switches)
    if flagged_switches:
        # capture traffic and train/evaluate the fine detector on it
        capture_cfg = dict(cfg)
        sim, topo = build_simulation(capture_cfg, seed + 2, capture=True)
        result = sim.run(_get(cfg, "sim.duration_s", float))
        emit_packet_records(result.records, out / "packets.csv", header_comment=stamp)
        extract_summary = cmd_extract(cfg, seed, out, out / "packets.csv")
        prep_summary = cmd_prep(cfg, seed, out, out / "features.csv")
        train_summary = cmd_train(
            cfg, seed, out, out / "train.csv", out / "test.csv"
        )
        summary["extract"] = extract_summary
        summary["prep"] = prep_summary
        summary["fine"] = train_summary

        # fine detection over the flagged switches' flows only
        model = clf.load_model(out / "model.ckpt")
        test = _load_dataset(out / "test.csv")
        gate = [
            i
            for i, prov in enumerate(test.provenance or [])
            if prov and mitigation.parse_provenance(prov)[0] in flagged_switches
        ]
        attributions = []
        if gate:
            preds = clf.predict_model(model, test.X[gate])
            for local_i, pred in zip(gate, preds):
                if pred != "normal":
                    attributions.append(
                        mitigation.parse_provenance(test.provenance[local_i])
                    )
        coarse_attr = [tuple(a) for a in coarse_summary["attributions"]]
        all_attr = sorted(set(attributions) | set(coarse_attr))
        rules = mitigation.derive_rules(
            all_attr,
            now_us=0,
            t_lim_s=_get(cfg, "mitigation.t_lim_s", float),
        )
        mitigation.write_rules_csv(rules, out / "rules.csv", stamp)
        summary["mitigation"] = {"rules": len(rules), "targets": [list(a) for a in all_attr]}

        ruled_sim, _ = build_simulation(cfg, seed, capture=False)
        mitigation.apply_rules(ruled_sim, rules)
        ruled = ruled_sim.run(_get(cfg, "sim.duration_s", float))
        victim_id = coarse_summary["victim_switch"]
        packet_in_during_rules = sum(
            w.num_packet_in for w in ruled.window_stats if w.switch_id == victim_id
        )
        summary["mitigation"]["victim_packet_in_after_rules"] = packet_in_during_rules
    return summary


# -- entry point ------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdnguard",
        description="Hierarchical abnormal-traffic detection lab for SDNs",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, required=True, help="run seed")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="run the simulator, emit packets and window stats")
    sub.add_parser("calibrate", help="calibrate coarse thresholds on normal traffic")
    sub.add_parser("coarse", help="run the coarse detection scenario")
    p = sub.add_parser("extract", help="packet CSV -> flow feature CSV")
    p.add_argument("packets", help="packet-record CSV path")
    p = sub.add_parser("prep", help="clean, split, normalize a feature CSV")
    p.add_argument("features", help="feature CSV path")
    p = sub.add_parser("train", help="train the classifier on a prepared dataset")
    p.add_argument("train_csv")
    p.add_argument("test_csv", nargs="?", default=None)
    p = sub.add_parser("crossval", help="k-fold cross-validation")
    p.add_argument("train_csv")
    p = sub.add_parser("eval", help="evaluate a checkpoint on a prepared dataset")
    p.add_argument("model")
    p.add_argument("test_csv")
    sub.add_parser("e2e", help="full pipeline: coarse gates fine gates mitigation")
    sub.add_parser("mitigate-demo", help="baseline-vs-ruled replay comparison")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.overrides)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            summary = cmd_simulate(cfg, args.seed, out)
        elif args.command == "calibrate":
            summary = cmd_calibrate(cfg, args.seed, out)
        elif args.command == "coarse":
            summary = cmd_coarse(cfg, args.seed, out)
        elif args.command == "extract":
            summary = cmd_extract(cfg, args.seed, out, args.packets)
        elif args.command == "prep":
            summary = cmd_prep(cfg, args.seed, out, args.features)
        elif args.command == "train":
            summary = cmd_train(cfg, args.seed, out, args.train_csv, args.test_csv)
        elif args.command == "crossval":
            summary = cmd_crossval(cfg, args.seed, out, args.train_csv)
        elif args.command == "eval":
            summary = cmd_eval(cfg, args.seed, out, args.model, args.test_csv)
        elif args.command == "mitigate-demo":
            summary = cmd_mitigate_demo(cfg, args.seed, out)
        else:
            summary = cmd_e2e(cfg, args.seed, out)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigurationError, DataValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SdnGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    summary_path = Path(args.out) / "summary.json"
    payload = {
        "command": args.command,
        "seed": args.seed,
        "config_hash": config_hash(cfg, args.seed),
        "result": summary,
    }
    summary_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
