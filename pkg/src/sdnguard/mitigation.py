"""Time-limited handling rules that block new traffic at an offending port.

A rule carries the attributed switch and port, suppresses PacketIn for new
flows arriving there, sends those flows to the default (discard) port, and
expires after a configurable limit.  Flows with an existing table rule keep
forwarding: only new traffic from the port is rejected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import DataValidationError

DEFAULT_LIMIT_S = 60.0
DEFAULT_PORT = "default"
ACTION_DROP = "drop"


@dataclass(frozen=True)
class HandlingRule:
    switch_id: int
    port: int
    issued_ts_us: int
    expiry_ts_us: int
    no_pkt_in: bool = True
    new_flow_destination: str = DEFAULT_PORT
    action: str = ACTION_DROP

    def __post_init__(self):
        if self.expiry_ts_us < self.issued_ts_us:
            raise DataValidationError("rule expiry precedes issue time")


def derive_rules(attributions, now_us, t_lim_s=DEFAULT_LIMIT_S):
    """One rule per implicated (switch, port).

    ``attributions`` is an iterable of (switch_id, port) pairs taken from
    abnormal verdicts or abnormal predictions' provenance.  Duplicates
    collapse to a single rule.  A missing port is an attribution error:
    the rule could not be targeted.
    """
    expiry = now_us + int(round(t_lim_s * 1e6))
    rules = []
    seen = set()
    for attribution in attributions:
        if attribution is None:
            raise DataValidationError("abnormal verdict without port attribution")
        switch_id, port = attribution
        if port is None:
            raise DataValidationError(
                f"abnormal verdict on switch {switch_id} lacks a port attribution"
            )
        key = (switch_id, port)
        if key in seen:
            continue
        seen.add(key)
        rules.append(
            HandlingRule(
                switch_id=switch_id,
                port=port,
                issued_ts_us=now_us,
                expiry_ts_us=expiry,
            )
        )
    return rules


def parse_provenance(provenance):
    """Split a ``s<switch>:p<port>`` provenance id into its parts."""
    try:
        switch_part, port_part = provenance.split(":")
        return int(switch_part.lstrip("s")), int(port_part.lstrip("p"))
    except (ValueError, AttributeError):
        raise DataValidationError(
            f"malformed provenance identifier {provenance!r}"
        ) from None


def apply_rules(sim, rules):
    """Install handling rules on a simulation (idempotent per switch/port)."""
    for rule in rules:
        sim.install_handling_rule(
            rule.switch_id, rule.port, rule.issued_ts_us, rule.expiry_ts_us
        )
    return sim


def expire_rules(sim, now_us):
    sim.expire_handling_rules(now_us)
    return sim


def write_rules_csv(rules, path, header_comment=None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["issued_ts", "switch_id", "port", "expiry_ts", "action"])
        for rule in rules:
            writer.writerow(
                [rule.issued_ts_us, rule.switch_id, rule.port, rule.expiry_ts_us, rule.action]
            )
    return path
