"""Acceptance suite: one test per release criterion, each with a pinned
tolerance and a runtime budget.  A summary line per criterion is printed in
the terminal summary (see conftest.py)."""

import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import record_criterion
from flow_oracle import oracle_features, random_flow
from sdnguard.classifier import (
    ClassifierConfig,
    build_model,
    predict_model,
    train_model,
    _backward_full,
    _forward_full,
)
from sdnguard.flows import FEATURE_NAMES, FlowRecord, assemble_flows, extract_all, extract_features
from sdnguard.metrics import ConfusionMatrix, binary_metrics, confusion, multiclass_accuracy, per_class_recall
from sdnguard.nn import (
    LSTM,
    Conv2D,
    Dense,
    Dropout,
    MaxPool2D,
    Softmax,
    check_array_gradient,
    mse_loss,
)
from sdnguard.portwatch import PortRatioDetector, Verdict, from_simulation
from sdnguard.preprocess import (
    Dataset,
    apply_normalization,
    clean,
    load_feature_csv,
    normalize,
    split,
)
from sdnguard.simnet import AttackSpec, SimOptions, Simulation, attacker_addresses, default_topology
from sdnguard.wavelets import decompose, filter_bank

from test_wavelets import naive_branches


@contextmanager
def criterion(number, description, budget_s):
    start = time.time()
    state = {"note": ""}
    try:
        yield state
    except BaseException:
        record_criterion(number, description, False, time.time() - start, state["note"])
        raise
    elapsed = time.time() - start
    passed = elapsed < budget_s
    record_criterion(number, description, passed, elapsed, state["note"])
    assert passed, f"criterion {number} exceeded its {budget_s}s budget ({elapsed:.1f}s)"


GOLDEN_CLASSES = [
    "Normal", "DDoS", "DoS", "Probe", "Brute-Force-Attack", "Web-Attack", "BotNet",
]
GOLDEN_COUNTS = np.array(
    [
        [20473, 12, 23, 16, 3, 0, 0],
        [15, 36552, 7, 6, 2, 0, 1],
        [21, 5, 16046, 13, 0, 0, 0],
        [16, 10, 8, 29402, 2, 0, 1],
        [2, 2, 1, 0, 415, 1, 1],
        [0, 1, 0, 1, 0, 56, 0],
        [0, 1, 0, 1, 0, 1, 46],
    ]
)


def test_criterion_1_metrics_golden_values():
    with criterion(1, "evaluation metrics reproduce the reference matrix", 1.0):
        cm = ConfusionMatrix(classes=GOLDEN_CLASSES, counts=GOLDEN_COUNTS)
        assert abs(multiclass_accuracy(cm) - 0.9983) < 1e-4
        recall = per_class_recall(cm)
        assert abs(recall["DDoS"] - 0.9992) < 1e-4
        assert abs(recall["BotNet"] - 0.9388) < 1e-4
        bm = binary_metrics(cm, "Normal")
        assert abs(bm.fpr - 0.0026) < 1e-4
        assert abs(bm.precision - 0.9993) < 1e-4


def test_criterion_2_wavelet_oracle_equivalence():
    with criterion(2, "decomposition matches the brute-force oracle", 10.0):
        fb = filter_bank("DB4")
        rng = np.random.default_rng(2024)
        worst = 0.0
        for level in (1, 2, 3, 4):
            for _ in range(100):
                x = rng.normal(size=48)
                got = decompose(x, level, fb).as_matrix()
                want = np.stack(naive_branches(x, level, fb.lowpass, fb.highpass))
                worst = max(worst, float(np.max(np.abs(got - want))))
        assert worst < 1e-9

        # constant input: every detail branch is annihilated
        for level in (1, 2, 3, 4):
            bs = decompose(np.ones(48), level, fb)
            for detail in bs.branches[:-1]:
                assert np.max(np.abs(detail)) < 1e-10

        # shift equivariance and linearity
        x, y = rng.normal(size=48), rng.normal(size=48)
        for shift in (1, 7, 23):
            lhs = decompose(np.roll(x, shift), 3, fb).as_matrix()
            rhs = np.roll(decompose(x, 3, fb).as_matrix(), shift, axis=1)
            assert np.max(np.abs(lhs - rhs)) < 1e-9
        lin_lhs = decompose(2.0 * x - 0.5 * y, 3, fb).as_matrix()
        lin_rhs = 2.0 * decompose(x, 3, fb).as_matrix() - 0.5 * decompose(y, 3, fb).as_matrix()
        assert np.max(np.abs(lin_lhs - lin_rhs)) < 1e-9


def _layer_fd_error(layer, params, x, train=False, seed=None):
    rng = np.random.default_rng(seed) if seed is not None else None
    y, cache = layer.forward(params, x, train=train, rng=rng)
    probe = np.random.default_rng(99).normal(size=y.shape)
    dx, grads = layer.backward(params, cache, probe)

    def f():
        local_rng = np.random.default_rng(seed) if seed is not None else None
        out, _ = layer.forward(params, x, train=train, rng=local_rng)
        return float(np.sum(out * probe))

    worst = check_array_gradient(f, x, dx)
    for name, analytic in grads.items():
        worst = max(worst, check_array_gradient(f, params[name], analytic))
    return worst


def test_criterion_3_gradient_verification():
    with criterion(3, "finite differences confirm every gradient", 120.0) as state:
        rng = np.random.default_rng(3)
        worst = 0.0

        dense = Dense(5, 4)
        worst = max(worst, _layer_fd_error(dense, dense.init_params(rng), rng.normal(size=(3, 5))))

        conv = Conv2D(2, 3)
        worst = max(worst, _layer_fd_error(conv, conv.init_params(rng), rng.normal(size=(2, 4, 4, 2))))
        conv_lin = Conv2D(1, 2, use_relu=False)
        worst = max(
            worst, _layer_fd_error(conv_lin, conv_lin.init_params(rng), rng.normal(size=(1, 5, 3, 1)))
        )

        pool = MaxPool2D(2)
        worst = max(worst, _layer_fd_error(pool, {}, rng.normal(size=(2, 4, 6, 3))))

        drop = Dropout(0.3)
        worst = max(worst, _layer_fd_error(drop, {}, rng.normal(size=(3, 7)), train=True, seed=7))

        lstm = LSTM(3, 4)
        worst = max(worst, _layer_fd_error(lstm, lstm.init_params(rng), rng.normal(size=(2, 3, 3))))

        softmax = Softmax()
        worst = max(worst, _layer_fd_error(softmax, {}, rng.normal(size=(3, 5))))

        # loss gradient
        pred = rng.normal(size=(4, 3))
        target = rng.normal(size=(4, 3))
        _, grad = mse_loss(pred, target)
        worst = max(
            worst,
            check_array_gradient(lambda: mse_loss(pred, target)[0], pred, grad, eps=1e-6),
        )

        # composed default-size model: all branches, aggregation, projection
        cfg = ClassifierConfig(level=3, classes=("a", "b"))
        model = build_model(cfg, seed=11)
        from sdnguard.wavelets import decompose_matrix

        X = np.random.default_rng(13).random((2, 48))
        xdec = decompose_matrix(X, cfg.level)
        target = np.array([[1.0, 0.0], [0.0, 1.0]])

        def loss_fn():
            probs, _ = _forward_full(model, xdec, train=False)
            return mse_loss(probs, target)[0]

        probs, cache = _forward_full(model, xdec, train=False)
        _, dprobs = mse_loss(probs, target)
        grads = _backward_full(model, cache, dprobs)
        coord_rng = np.random.default_rng(17)
        for layer_key in (
            "branch0.conv1", "branch1.conv2", "branch2.lstm", "branch3.lstm", "projection",
        ):
            for pname, analytic in grads[layer_key].items():
                arr = model.params[layer_key][pname]
                coords = coord_rng.choice(arr.size, size=min(10, arr.size), replace=False)
                err = check_array_gradient(loss_fn, arr, analytic, coords=coords)
                worst = max(worst, err)
        state["note"] = f"max relative error {worst:.2e}"
        assert worst < 1e-4


def test_criterion_4_flow_feature_oracle():
    with criterion(4, "1000 random flows match the naive feature oracle", 30.0) as state:
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(1000):
            fwd, bwd, proto = random_flow(rng)
            flow = FlowRecord("h1", "h2", 10, 20, proto, 1, 3, fwd=fwd, bwd=bwd)
            got = extract_features(flow).values
            want = oracle_features(fwd, bwd, proto)
            for i, name in enumerate(FEATURE_NAMES):
                denom = max(1.0, abs(got[i]), abs(want[name]))
                worst = max(worst, abs(got[i] - want[name]) / denom)
        state["note"] = f"max relative error {worst:.2e}"
        assert worst < 1e-9


def test_criterion_5_coarse_detection_scenario():
    with criterion(5, "one-hour flood scenario: recall/false-flag/localization", 120.0) as state:
        # calibrate on normal-only traffic
        calibration = Simulation(default_topology(), seed=501).run(600.0)
        detector = PortRatioDetector(quantile=0.01).fit(from_simulation(calibration))

        sim = Simulation(default_topology(), seed=502)
        sim.inject_attack(
            AttackSpec(attacker_host="host1", intensity_bps=20e6, on_s=1.0, off_s=5.0)
        )
        result = sim.run(3600.0)
        windows = from_simulation(result)
        judge_start = time.time()
        verdicts = detector.predict(windows)
        per_window_ms = (time.time() - judge_start) / len(windows) * 1e3

        attack_on = {i for i in range(3600) if i % 6 == 0}
        assert len(attack_on) == 600
        hits = misses = 0
        false_by_switch = {2: 0, 3: 0, 4: 0}
        flagged_by_burst = {}
        for w, v in zip(windows, verdicts):
            if w.switch_id == 1 and w.window_index in attack_on:
                if v is Verdict.ABNORMAL:
                    hits += 1
                    flagged_by_burst.setdefault(w.window_index, set()).add(w.switch_id)
                else:
                    misses += 1
            elif w.switch_id != 1:
                if v is Verdict.ABNORMAL:
                    false_by_switch[w.switch_id] += 1
                    if w.window_index in attack_on:
                        flagged_by_burst.setdefault(w.window_index, set()).add(w.switch_id)

        recall = hits / 600.0
        worst_false = max(count / 3600.0 for count in false_by_switch.values())
        state["note"] = (
            f"recall {recall:.4f}, worst false-flag rate {worst_false:.4f}, "
            f"verdict latency {per_window_ms:.3f} ms/window"
        )
        assert recall >= 0.99
        assert worst_false <= 0.01
        # every detected burst localizes to the attacked switch alone
        assert len(flagged_by_burst) == 600
        for burst, switches in flagged_by_burst.items():
            assert switches == {1}, f"burst at window {burst} flagged {switches}"


def _criterion6_dataset():
    topo = default_topology(attacker_profile="ssh")
    sim = Simulation(topo, seed=606, options=SimOptions(capture=True))
    sim.inject_attack(
        AttackSpec(attacker_host="host1", intensity_bps=48_000, on_s=1.0, off_s=5.0)
    )
    result = sim.run(48.0)
    assembly = assemble_flows(result.records, flow_timeout_s=2.0)
    attackers = attacker_addresses(topo)
    vectors = extract_all(
        assembly.flows,
        labeler=lambda f: "attack" if f.src_addr in attackers else "normal",
    )
    X = np.array([v.values for v in vectors])
    labels = np.array([v.label for v in vectors], dtype=object)
    return Dataset(X=X, feature_names=list(FEATURE_NAMES), labels=labels)


def test_criterion_6_end_to_end_learning_sanity():
    with criterion(6, "classifier learns simulated attack-vs-normal traffic", 600.0) as state:
        ds = _criterion6_dataset()
        assert len(ds) >= 2000
        train, test = split(ds, seed=1)
        train_n, stats = normalize(train)
        test_n = apply_normalization(test, stats)

        cfg = ClassifierConfig(
            level=3,
            classes=("attack", "normal"),
            batch_size=8,
            epochs=50,  # within the 100-epoch allowance
        )
        model = build_model(cfg, seed=2)
        history = train_model(model, train_n.X, train_n.labels, seed=3)
        assert len(history.losses) <= 100
        pred = predict_model(model, test_n.X)
        accuracy = float(np.mean(pred == test_n.labels))
        tail = float(np.mean(history.losses[-10:]))
        best = float(np.min(history.losses))
        state["note"] = f"holdout accuracy {accuracy:.4f}, tail/min {tail / best:.3f}"
        assert accuracy >= 0.95
        assert history.stabilized(tail=10, tolerance=0.05)


def test_criterion_7_mitigation_replay():
    with criterion(7, "handling rules silence PacketIn without side effects", 60.0) as state:
        spec = AttackSpec(attacker_host="host1", intensity_bps=20e6, on_s=1.0, off_s=5.0)
        options = SimOptions(fresh_key_prob=0.0)

        baseline_sim = Simulation(default_topology(), seed=701, options=options)
        baseline_sim.inject_attack(spec)
        baseline = baseline_sim.run(24.0)

        ruled_sim = Simulation(default_topology(), seed=701, options=options)
        ruled_sim.inject_attack(spec)
        ruled_sim.install_handling_rule(1, 1, issued_us=0, expiry_us=24_000_000)
        ruled = ruled_sim.run(24.0)

        attack_on = {0, 6, 12, 18}
        base_burst_pkt_in = sum(
            w.num_packet_in
            for w in baseline.window_stats
            if w.switch_id == 1 and w.window_index in attack_on
        )
        ruled_burst_pkt_in = sum(
            w.num_packet_in
            for w in ruled.window_stats
            if w.switch_id == 1 and w.window_index in attack_on
        )
        state["note"] = f"burst PacketIn {base_burst_pkt_in} -> {ruled_burst_pkt_in}"
        assert base_burst_pkt_in > 100_000
        assert ruled_burst_pkt_in == 0
        for key in baseline.port_counters:
            if key == (1, 1):
                continue
            assert baseline.port_counters[key] == ruled.port_counters[key], key


def _find_external_dataset():
    env = os.environ.get("SDNGUARD_INSDN_CSV")
    if env and Path(env).exists():
        return Path(env)
    default = Path(__file__).resolve().parent.parent / "data" / "insdn.csv"
    if default.exists():
        return default
    return None


def test_criterion_8_external_dataset_soft_check():
    path = _find_external_dataset()
    if path is None:
        record_criterion(
            8,
            "external-dataset soft check",
            None,
            0.0,
            "dataset not present; full-scale results are out of desk-scale scope",
        )
        pytest.skip("no external dataset available; soft check skipped")
    with criterion(8, "external-dataset 10% subsample soft check", 3600.0) as state:
        ds = load_feature_csv(path, exclude_classes=("U2R",))
        subsample, _ = split(ds, train_fraction=0.1, seed=8)
        cleaned, _ = clean(subsample)
        train, test = split(cleaned, seed=9)
        train_n, stats = normalize(train)
        test_n = apply_normalization(test, stats)
        classes = sorted(set(train_n.labels.tolist()))
        cfg = ClassifierConfig(level=3, classes=tuple(classes), batch_size=8, epochs=30)
        model = build_model(cfg, seed=10)
        train_model(model, train_n.X, train_n.labels, seed=11)
        pred = predict_model(model, test_n.X)
        cm = confusion(test_n.labels.tolist(), pred.tolist(), classes)
        normal = "Normal" if "Normal" in classes else "normal"
        bm = binary_metrics(cm, normal)
        state["note"] = f"binary accuracy {bm.accuracy:.4f}"
        assert bm.accuracy >= 0.97
