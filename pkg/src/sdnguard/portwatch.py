"""Windowed per-switch port statistics and the coarse abnormality test.

Two ratios summarize each closed window: the inflow-forwarding ratio
(flows in over PacketIn messages) and the normal forwarding ratio (flows
out over flows in).  Both collapse during a new-flow flood, so a window is
judged abnormal when both fall strictly below calibrated thresholds.
Zero-denominator windows carry an explicit saturated marker and are never
judged abnormal.  Thresholds come from a lower empirical quantile of
normal-traffic windows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from sklearn.base import BaseEstimator

from .errors import (
    CalibrationError,
    ConfigurationError,
    DataValidationError,
    WindowAssignmentError,
)
from .simnet import EVENT_FLOW_IN, EVENT_FLOW_OUT, EVENT_PACKET_IN


class Verdict(Enum):
    NORMAL = "Normal"
    ABNORMAL = "Abnormal"

    def __str__(self):
        return self.value


@dataclass
class PortWindowStats:
    """Counters for one switch over one closed window."""

    switch_id: int
    window_index: int
    window_length_s: float
    num_flow_in: int = 0
    num_flow_out: int = 0
    num_packet_in: int = 0
    port_flow_in: dict = field(default_factory=dict)
    port_packet_in: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.window_length_s <= 0:
            raise DataValidationError("window length must be > 0")
        for count in (self.num_flow_in, self.num_flow_out, self.num_packet_in):
            if count < 0:
                raise DataValidationError("window counters must be >= 0")

    @property
    def start_us(self):
        return int(round(self.window_index * self.window_length_s * 1e6))

    @property
    def end_us(self):
        return self.start_us + int(round(self.window_length_s * 1e6))

    def top_port(self):
        source = self.port_packet_in if self.port_packet_in else self.port_flow_in
        if not source:
            return None
        return max(sorted(source), key=lambda p: source[p])


def from_simulation(result):
    """Convert simulator window rows into PortWindowStats."""
    out = []
    for w in result.window_stats:
        out.append(
            PortWindowStats(
                switch_id=w.switch_id,
                window_index=w.window_index,
                window_length_s=w.window_s,
                num_flow_in=w.num_flow_in,
                num_flow_out=w.num_flow_out,
                num_packet_in=w.num_packet_in,
                port_flow_in=dict(w.port_flow_in),
                port_packet_in=dict(w.port_packet_in),
            )
        )
    return out


def accumulate(window: PortWindowStats, event) -> PortWindowStats:
    """Fold one counter event into a window; exactly one counter moves."""
    if not (window.start_us <= event.ts_us < window.end_us):
        raise WindowAssignmentError(
            f"event at {event.ts_us} outside window "
            f"[{window.start_us}, {window.end_us})"
        )
    if event.switch_id != window.switch_id:
        raise WindowAssignmentError(
            f"event for switch {event.switch_id} fed to switch {window.switch_id}"
        )
    updated = replace(
        window,
        port_flow_in=dict(window.port_flow_in),
        port_packet_in=dict(window.port_packet_in),
    )
    if event.kind == EVENT_FLOW_IN:
        updated.num_flow_in += 1
        updated.port_flow_in[event.port] = updated.port_flow_in.get(event.port, 0) + 1
    elif event.kind == EVENT_FLOW_OUT:
        updated.num_flow_out += 1
    elif event.kind == EVENT_PACKET_IN:
        updated.num_packet_in += 1
        updated.port_packet_in[event.port] = (
            updated.port_packet_in.get(event.port, 0) + 1
        )
    else:
        raise DataValidationError(f"unknown event kind {event.kind!r}")
    return updated


def replay_events(events, switch_id, window_length_s, n_windows):
    """Accumulate an event stream into per-window stats for one switch."""
    windows = [
        PortWindowStats(switch_id, i, window_length_s) for i in range(n_windows)
    ]
    span_us = int(round(window_length_s * 1e6))
    for event in events:
        if event.switch_id != switch_id:
            continue
        idx = event.ts_us // span_us
        if idx >= n_windows:
            raise WindowAssignmentError(f"event at {event.ts_us} beyond final window")
        windows[idx] = accumulate(windows[idx], event)
    return windows


@dataclass
class RatioPair:
    """The two detection ratios; None marks a zero-denominator sentinel."""

    rate_packet_in: float | None
    rate_flow_io: float | None

    @property
    def saturated(self):
        return self.rate_packet_in is None or self.rate_flow_io is None


def compute_ratios(stats: PortWindowStats) -> RatioPair:
    rate_packet_in = (
        stats.num_flow_in / stats.num_packet_in if stats.num_packet_in > 0 else None
    )
    rate_flow_io = (
        stats.num_flow_out / stats.num_flow_in if stats.num_flow_in > 0 else None
    )
    return RatioPair(rate_packet_in=rate_packet_in, rate_flow_io=rate_flow_io)


@dataclass
class Thresholds:
    packet_in_threshold: float
    flow_io_threshold: float
    quantile: float = 0.01
    sample_count: int = 0
    excluded_packet_in: int = 0
    excluded_flow_io: int = 0

    def __post_init__(self):
        if self.packet_in_threshold <= 0 or self.flow_io_threshold <= 0:
            raise ConfigurationError("thresholds must be > 0")

    def to_file(self, path, header_comment=None):
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write(f"packet_in_threshold = {self.packet_in_threshold!r}\n")
            fh.write(f"flow_io_threshold = {self.flow_io_threshold!r}\n")
            fh.write(f"quantile = {self.quantile!r}\n")
            fh.write(f"sample_count = {self.sample_count}\n")
            fh.write(f"excluded_packet_in = {self.excluded_packet_in}\n")
            fh.write(f"excluded_flow_io = {self.excluded_flow_io}\n")
        return path

    @classmethod
    def from_file(cls, path):
        values = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, raw = line.partition("=")
                values[key.strip()] = raw.strip()
        try:
            return cls(
                packet_in_threshold=float(values["packet_in_threshold"]),
                flow_io_threshold=float(values["flow_io_threshold"]),
                quantile=float(values.get("quantile", 0.01)),
                sample_count=int(values.get("sample_count", 0)),
                excluded_packet_in=int(values.get("excluded_packet_in", 0)),
                excluded_flow_io=int(values.get("excluded_flow_io", 0)),
            )
        except KeyError as exc:
            raise ConfigurationError(f"{path}: missing threshold key {exc}") from None


def _lower_quantile(values, quantile):
    ordered = sorted(values)
    idx = min(int(math.floor(quantile * len(ordered))), len(ordered) - 1)
    return ordered[idx]


def calibrate_thresholds(normal_windows, quantile=0.01) -> Thresholds:
    """Thresholds from the lower ``quantile`` of each ratio over normal
    windows; saturated ratios are excluded and counted."""
    if not 0 < quantile < 0.5:
        raise CalibrationError(f"quantile must be in (0, 0.5), got {quantile}")
    pairs = list(normal_windows)
    if len(pairs) < 30:
        raise CalibrationError(
            f"need at least 30 normal windows to calibrate, got {len(pairs)}"
        )
    packet_in = [p.rate_packet_in for p in pairs if p.rate_packet_in is not None]
    flow_io = [p.rate_flow_io for p in pairs if p.rate_flow_io is not None]
    if not packet_in or not flow_io:
        raise CalibrationError("all windows saturated; cannot calibrate")
    return Thresholds(
        packet_in_threshold=float(_lower_quantile(packet_in, quantile)),
        flow_io_threshold=float(_lower_quantile(flow_io, quantile)),
        quantile=quantile,
        sample_count=len(pairs),
        excluded_packet_in=len(pairs) - len(packet_in),
        excluded_flow_io=len(pairs) - len(flow_io),
    )


def judge(ratios: RatioPair, thresholds: Thresholds) -> Verdict:
    """Abnormal only when both ratios are strictly below their thresholds;
    saturated ratios never trigger."""
    if thresholds is None:
        raise ConfigurationError("thresholds not calibrated")
    if ratios.rate_packet_in is None or ratios.rate_flow_io is None:
        return Verdict.NORMAL
    if (
        ratios.rate_packet_in < thresholds.packet_in_threshold
        and ratios.rate_flow_io < thresholds.flow_io_threshold
    ):
        return Verdict.ABNORMAL
    return Verdict.NORMAL


class PortRatioDetector(BaseEstimator):
    """Estimator wrapper: fit calibrates thresholds from normal windows,
    predict judges windows.

    ``debounce`` > 1 requires that many consecutive abnormal windows on a
    switch before a verdict flips to abnormal (off by default).
    """

    def __init__(self, quantile=0.01, debounce=1):
        self.quantile = quantile
        self.debounce = debounce

    def fit(self, windows, y=None):
        self.thresholds_ = calibrate_thresholds(
            [compute_ratios(w) for w in windows], quantile=self.quantile
        )
        return self

    def predict(self, windows):
        if not hasattr(self, "thresholds_"):
            raise ConfigurationError("detector is not calibrated; call fit first")
        raw = [judge(compute_ratios(w), self.thresholds_) for w in windows]
        if self.debounce <= 1:
            return raw
        ordered = sorted(
            range(len(windows)),
            key=lambda i: (windows[i].window_index, windows[i].switch_id),
        )
        streak = {}
        debounced = {}
        for i in ordered:
            sid = windows[i].switch_id
            streak[sid] = streak.get(sid, 0) + 1 if raw[i] is Verdict.ABNORMAL else 0
            debounced[i] = (
                Verdict.ABNORMAL if streak[sid] >= self.debounce else Verdict.NORMAL
            )
        return [debounced[i] for i in range(len(windows))]


def write_window_csv(windows, verdicts, path, header_comment=None):
    """Window-stats CSV with ratios and verdicts; saturated ratios are
    written as the literal token ``saturated``."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(
            [
                "window_index",
                "switch_id",
                "num_flow_in",
                "num_flow_out",
                "num_packet_in",
                "rate_packet_in",
                "rate_flow_io",
                "verdict",
            ]
        )
        for stats, verdict in zip(windows, verdicts):
            ratios = compute_ratios(stats)

            def fmt(value):
                return "saturated" if value is None else repr(value)

            writer.writerow(
                [
                    stats.window_index,
                    stats.switch_id,
                    stats.num_flow_in,
                    stats.num_flow_out,
                    stats.num_packet_in,
                    fmt(ratios.rate_packet_in),
                    fmt(ratios.rate_flow_io),
                    str(verdict),
                ]
            )
    return path
