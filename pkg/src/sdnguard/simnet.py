"""Deterministic window-quantized simulator of an SDN data plane.

The simulated network is a set of switches with per-port counters, a flow
table and a packet buffer, plus hosts that originate flows.  Control-plane
behaviour follows the OpenFlow miss cycle: the first packet of a flow with
no matching table rule raises a table-miss, the switch sends one PacketIn
per missing flow, buffers the packet while a rule decision is pending, and
the controller grants rule installations in FIFO order at the end of each
window subject to its parsing budget and the table capacity.  Buffer
overflow and table-full rejections increment per-port drop counters.

Traffic sources:

* normal hosts emit flows as a seeded Poisson process, almost always
  reusing a per-host pool of recurring 5-tuples whose rules persist in the
  flow table (pre-installed by default so steady state holds from t=0);
  a small fraction of flows use a fresh ephemeral source port and miss.
* an attacking host emits fixed-size SYN packets at a configured bit rate
  in on/off bursts; every packet carries a unique forged destination, so
  every attack packet is a new flow and a guaranteed table miss.

Every run is a pure function of (topology, attack specs, options, seed):
normal hosts draw from per-host control streams that are consumed
identically whether or not packet records are materialized, so an
aggregate (counters-only) run and a capture run produce identical
counters, and replays with different mitigation rules see identical
offered traffic.

Time is integer microseconds; there is no wall-clock coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .records import PROTO_TCP, PacketRecord, write_packet_records

TCP_SYN = 0x02
TCP_SYNACK = 0x12
TCP_ACK = 0x10
TCP_PSHACK = 0x18

UPLINK_PORT = 0  # synthetic ingress port for reply traffic

EVENT_FLOW_IN = "flow_in"
EVENT_FLOW_OUT = "flow_out"
EVENT_PACKET_IN = "packet_in"


@dataclass(frozen=True)
class ServiceProfile:
    dst_port: int
    flow_rate: float  # new flows per second
    pkts: tuple  # packets per flow (inclusive range)
    fwd_len: tuple  # forward packet bytes (inclusive range)
    bwd_len: tuple  # reply packet bytes (inclusive range)


SERVICE_PROFILES = {
    "http": ServiceProfile(80, 6.0, (4, 12), (100, 1200), (200, 1460)),
    "https": ServiceProfile(443, 6.0, (4, 12), (100, 1200), (300, 1460)),
    "ftp": ServiceProfile(21, 3.0, (6, 20), (200, 1460), (60, 200)),
    "ssh": ServiceProfile(22, 2.0, (6, 16), (60, 400), (60, 400)),
    "email": ServiceProfile(25, 2.0, (4, 10), (200, 1000), (60, 300)),
}


@dataclass(frozen=True)
class HostSpec:
    name: str
    address: str
    role: str  # "normal" | "attacker"
    profile: str | None = None  # service profile name for normal hosts


@dataclass(frozen=True)
class SwitchSpec:
    switch_id: int
    flow_table_capacity: int = 2000
    buffer_capacity: int = 1000


@dataclass
class Topology:
    switches: list
    hosts: list
    attachments: dict  # host name -> (switch_id, port)
    controller_capacity: float = 5000.0  # PacketIn messages parsed per second

    def validate(self):
        switch_ids = [s.switch_id for s in self.switches]
        if len(set(switch_ids)) != len(switch_ids):
            raise ConfigurationError("duplicate switch ids")
        names = [h.name for h in self.hosts]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate host names")
        known = set(switch_ids)
        seen_ports = set()
        for host in self.hosts:
            if host.name not in self.attachments:
                raise ConfigurationError(f"host {host.name!r} has no attachment")
            sw, port = self.attachments[host.name]
            if sw not in known:
                raise ConfigurationError(
                    f"host {host.name!r} attached to unknown switch {sw}"
                )
            if (sw, port) in seen_ports:
                raise ConfigurationError(f"port {port} on switch {sw} attached twice")
            seen_ports.add((sw, port))
            if host.role == "normal" and host.profile not in SERVICE_PROFILES:
                raise ConfigurationError(
                    f"host {host.name!r} has unknown profile {host.profile!r}"
                )
            if host.profile is not None and host.profile not in SERVICE_PROFILES:
                raise ConfigurationError(
                    f"host {host.name!r} has unknown profile {host.profile!r}"
                )
        for name in self.attachments:
            if name not in names:
                raise ConfigurationError(f"attachment references unknown host {name!r}")
        return self

    def host_by_name(self, name):
        for host in self.hosts:
            if host.name == name:
                return host
        raise ConfigurationError(f"unknown host {name!r}")


def default_topology(n_switches=4, hosts_per_switch=4, attacker_profile=None,
                     **switch_kwargs) -> Topology:
    """Four switches with four hosts each: host1 is the attacker, the other
    hosts rotate through the service profiles.

    ``attacker_profile`` gives the attacker a normal-traffic side as well
    (a compromised host keeps its legitimate workload).
    """
    profiles = ["http", "http", "http", "https", "https", "https", "https",
                "ftp", "ftp", "ftp", "ftp", "ssh", "ssh", "email", "email"]
    switches = [SwitchSpec(switch_id=i + 1, **switch_kwargs) for i in range(n_switches)]
    hosts = []
    attachments = {}
    total = n_switches * hosts_per_switch
    for i in range(total):
        name = f"host{i + 1}"
        address = f"12.0.0.{11 + i}"
        if i == 0:
            hosts.append(HostSpec(name, address, "attacker", attacker_profile))
        else:
            profile = profiles[(i - 1) % len(profiles)]
            hosts.append(HostSpec(name, address, "normal", profile))
        attachments[name] = (i // hosts_per_switch + 1, i % hosts_per_switch + 1)
    return Topology(switches=switches, hosts=hosts, attachments=attachments)


@dataclass(frozen=True)
class AttackSpec:
    """A periodic SYN flood: ``intensity_bps`` of fixed-size packets during
    each on-phase, silent during off-phases, destinations forged uniquely
    per packet."""

    attacker_host: str
    kind: str = "syn_flood"
    intensity_bps: float = 20e6
    on_s: float = 1.0
    off_s: float = 5.0
    start_s: float = 0.0
    end_s: float | None = None
    packet_bytes: int = 60

    def validate(self):
        if self.kind != "syn_flood":
            raise ConfigurationError(f"unsupported attack kind {self.kind!r}")
        if self.intensity_bps < 0:
            raise ConfigurationError("attack intensity must be >= 0")
        if self.on_s <= 0:
            raise ConfigurationError("attack on-phase must be > 0")
        if self.off_s < 0:
            raise ConfigurationError("attack off-phase must be >= 0")
        return self


@dataclass(frozen=True)
class CounterEvent:
    ts_us: int
    switch_id: int
    port: int
    kind: str  # EVENT_FLOW_IN | EVENT_FLOW_OUT | EVENT_PACKET_IN


@dataclass
class PortCounters:
    packets_in: int = 0
    packets_out: int = 0
    flows_in: int = 0
    flows_out: int = 0
    packet_in_sent: int = 0
    dropped: int = 0

    def snapshot(self):
        return replace(self)


@dataclass
class WindowStats:
    window_index: int
    switch_id: int
    window_s: float
    num_flow_in: int = 0
    num_flow_out: int = 0
    num_packet_in: int = 0
    port_flow_in: dict = field(default_factory=dict)
    port_packet_in: dict = field(default_factory=dict)

    def top_port(self):
        """Port attribution: the port contributing the most PacketIn, falling
        back to flow arrivals when no PacketIn was seen."""
        source = self.port_packet_in if self.port_packet_in else self.port_flow_in
        if not source:
            return None
        return max(sorted(source), key=lambda p: source[p])


@dataclass
class EventBatch:
    window_stats: list = field(default_factory=list)
    records: list = field(default_factory=list)
    counter_events: list = field(default_factory=list)


@dataclass
class SimResult:
    window_stats: list
    records: list
    counter_events: list
    port_counters: dict  # (switch_id, port) -> PortCounters
    duration_s: float
    window_s: float


@dataclass
class SimOptions:
    window_s: float = 1.0
    capture: bool = False
    preinstall_normal_rules: bool = True
    fresh_key_prob: float = 0.01
    pool_size: int = 20
    rate_scale: float = 1.0


class _SwitchState:
    def __init__(self, spec: SwitchSpec):
        self.spec = spec
        self.flow_table = set()
        self.anon_rules = 0  # installed rules for one-shot forged flows
        self.buffer_occupancy = 0
        self.pending_keys = set()
        self.ports = {}

    @property
    def table_size(self):
        return len(self.flow_table) + self.anon_rules

    @property
    def table_space(self):
        return self.spec.flow_table_capacity - self.table_size

    def port(self, port) -> PortCounters:
        if port not in self.ports:
            self.ports[port] = PortCounters()
        return self.ports[port]


class _NormalSource:
    """Per-host seeded traffic generator.

    The control stream decides flow arrivals (times, keys, sizes) and is
    consumed identically in aggregate and capture runs; the detail stream
    only shapes materialized packet records.
    """

    def __init__(self, host, switch_id, port, peers, seed_seq, options):
        self.host = host
        self.switch_id = switch_id
        self.port = port
        self.profile = SERVICE_PROFILES[host.profile]
        self.rate = self.profile.flow_rate * options.rate_scale
        self.fresh_prob = options.fresh_key_prob
        control_seed, detail_seed = seed_seq.spawn(2)
        self.control = np.random.default_rng(control_seed)
        self.detail = np.random.default_rng(detail_seed)
        # recurring 5-tuples: stable source ports toward peer services
        self.pool = []
        for j in range(options.pool_size):
            peer = peers[j % len(peers)]
            self.pool.append(
                (host.address, peer.address, 49152 + j, self.profile.dst_port, PROTO_TCP)
            )

    def window_flows(self, window_start_us, window_us):
        n = int(self.control.poisson(self.rate * window_us / 1e6))
        if n == 0:
            return []
        ts = self.control.integers(0, window_us, size=n)
        fresh = self.control.random(n) < self.fresh_prob
        key_idx = self.control.integers(0, len(self.pool), size=n)
        npkts = self.control.integers(
            self.profile.pkts[0], self.profile.pkts[1] + 1, size=n
        )
        sport_fresh = self.control.integers(50000, 65536, size=n)
        flows = []
        for i in range(n):
            base = self.pool[key_idx[i]]
            if fresh[i]:
                key = (base[0], base[1], int(sport_fresh[i]), base[3], base[4])
            else:
                key = base
            flows.append(
                _FlowArrival(
                    ts_us=int(window_start_us + ts[i]),
                    source=self,
                    key=key,
                    npkts=int(npkts[i]),
                    is_pool=not bool(fresh[i]),
                )
            )
        return flows


@dataclass
class _FlowArrival:
    ts_us: int
    source: _NormalSource
    key: tuple
    npkts: int
    is_pool: bool


class _AttackSource:
    """Evenly spaced forged-destination SYN arrivals during on-phases."""

    _MULTIPLIER = 2654435761  # odd -> bijective modulo 2**30
    _SPACE = 1 << 30
    _BASE = 0x40000000  # 64.0.0.0/2: plenty of unique forgeable addresses

    def __init__(self, spec: AttackSpec, host, switch_id, port):
        self.spec = spec
        self.host = host
        self.switch_id = switch_id
        self.port = port
        self.counter = 0
        rate = spec.intensity_bps / (8.0 * spec.packet_bytes)
        self.pkts_per_us = rate / 1e6

    def segments(self, window_start_us, window_end_us):
        """On-phase intervals (clipped to the window) as (start, end) pairs."""
        period_us = int(round((self.spec.on_s + self.spec.off_s) * 1e6))
        on_us = int(round(self.spec.on_s * 1e6))
        start_us = int(round(self.spec.start_s * 1e6))
        end_us = (
            int(round(self.spec.end_s * 1e6)) if self.spec.end_s is not None else None
        )
        out = []
        if window_end_us <= start_us:
            return out
        if period_us == 0:
            return out
        k = max(0, (window_start_us - start_us) // period_us)
        while True:
            seg_start = start_us + k * period_us
            if seg_start >= window_end_us:
                break
            seg_end = seg_start + on_us
            lo = max(seg_start, window_start_us)
            hi = min(seg_end, window_end_us)
            if end_us is not None:
                hi = min(hi, end_us)
            if lo < hi:
                out.append((lo, hi))
            k += 1
        return out

    def forged_dst(self, counter):
        value = self._BASE + ((counter * self._MULTIPLIER) % self._SPACE)
        return (
            f"{(value >> 24) & 0xFF}.{(value >> 16) & 0xFF}."
            f"{(value >> 8) & 0xFF}.{value & 0xFF}"
        )

    @staticmethod
    def arrival_count(seg_len_us, n, offset_us):
        """Number of the n evenly spaced arrivals strictly before offset."""
        if offset_us <= 0:
            return 0
        lo, hi = 0, n
        while lo < hi:  # first j with ts_j >= offset
            mid = (lo + hi) // 2
            ts = ((2 * mid + 1) * seg_len_us) // (2 * n)
            if ts < offset_us:
                lo = mid + 1
            else:
                hi = mid
        return lo

    @staticmethod
    def arrival_ts(seg_start_us, seg_len_us, n, j):
        return seg_start_us + ((2 * j + 1) * seg_len_us) // (2 * n)

    def packets_in_segment(self, seg_len_us):
        return int(round(self.pkts_per_us * seg_len_us))


class Simulation:
    """Stateful simulator advanced window by window.

    The controller batch-processes pending rule requests at the close of
    each window; all other dynamics are event-exact within the window.
    """

    def __init__(self, topology: Topology, seed: int, options: SimOptions | None = None):
        self.topology = topology.validate()
        self.options = options or SimOptions()
        if self.options.window_s <= 0:
            raise ConfigurationError("window length must be > 0")
        self.seed = seed
        self.window_us = int(round(self.options.window_s * 1e6))
        self.clock_us = 0
        self.window_index = 0
        self.switches = {s.switch_id: _SwitchState(s) for s in topology.switches}
        self.attacks = []
        self._pending = []  # FIFO of (ts, seq, entry)
        self._seq = 0
        self._handling = {}  # (switch_id, port) -> (issued_us, expiry_us)
        self.sources = []
        normal_hosts = [h for h in topology.hosts if h.role == "normal"]
        for idx, host in enumerate(topology.hosts):
            if host.profile is None:
                continue  # pure attackers carry no background traffic
            sw, port = topology.attachments[host.name]
            peers = [p for p in normal_hosts if p.name != host.name]
            seq = np.random.SeedSequence(entropy=seed, spawn_key=(idx,))
            self.sources.append(_NormalSource(host, sw, port, peers, seq, self.options))
        if self.options.preinstall_normal_rules:
            for src in self.sources:
                state = self.switches[src.switch_id]
                for key in src.pool:
                    state.flow_table.add(key)

    # -- configuration -----------------------------------------------------

    def inject_attack(self, spec: AttackSpec):
        spec.validate()
        host = self.topology.host_by_name(spec.attacker_host)
        sw, port = self.topology.attachments[spec.attacker_host]
        self.attacks.append(_AttackSource(spec, host, sw, port))
        return self

    def install_handling_rule(self, switch_id, port, issued_us, expiry_us):
        if switch_id not in self.switches:
            raise ConfigurationError(f"unknown switch {switch_id}")
        ports = {p for s, p in self.topology.attachments.values() if s == switch_id}
        if port not in ports:
            raise ConfigurationError(f"switch {switch_id} has no attached port {port}")
        self._handling[(switch_id, port)] = (issued_us, expiry_us)

    def expire_handling_rules(self, now_us):
        self._handling = {
            key: window
            for key, window in self._handling.items()
            if window[1] > now_us
        }

    def _rule_active(self, switch_id, port, ts_us):
        window = self._handling.get((switch_id, port))
        return window is not None and window[0] <= ts_us < window[1]

    # -- stepping ----------------------------------------------------------

    def step(self, duration_s: float) -> EventBatch:
        """Advance the clock by ``duration_s`` (whole windows; the trailing
        partial window, if any, is processed as a shorter window)."""
        if duration_s < 0:
            raise ConfigurationError("step duration must be >= 0")
        batch = EventBatch()
        remaining_us = int(round(duration_s * 1e6))
        while remaining_us > 0:
            span = min(self.window_us, remaining_us)
            self._run_window(span, batch)
            remaining_us -= span
        batch.records.sort(key=lambda r: r.ts_us)
        batch.counter_events.sort(key=lambda e: (e.ts_us, e.switch_id, e.port, e.kind))
        return batch

    def run(self, duration_s: float) -> SimResult:
        batch = self.step(duration_s)
        counters = {
            (sid, port): pc.snapshot()
            for sid, state in sorted(self.switches.items())
            for port, pc in sorted(state.ports.items())
        }
        return SimResult(
            window_stats=batch.window_stats,
            records=batch.records,
            counter_events=batch.counter_events,
            port_counters=counters,
            duration_s=duration_s,
            window_s=self.options.window_s,
        )

    # -- window internals ----------------------------------------------------

    def _run_window(self, span_us, batch):
        start = self.clock_us
        end = start + span_us
        capture = self.options.capture
        stats = {
            sid: WindowStats(self.window_index, sid, span_us / 1e6)
            for sid in self.switches
        }

        arrivals = {sid: [] for sid in self.switches}
        for src in self.sources:
            arrivals[src.switch_id].extend(src.window_flows(start, span_us))
        for sid in arrivals:
            arrivals[sid].sort(key=lambda f: (f.ts_us, f.source.port, f.key))

        attack_plans = []
        for attack in self.attacks:
            for seg_start, seg_end in attack.segments(start, end):
                n = attack.packets_in_segment(seg_end - seg_start)
                if n > 0:
                    attack_plans.append(
                        _AttackPlan(attack, seg_start, seg_end, n, emitted=0)
                    )

        for sid in sorted(self.switches):
            plans = [p for p in attack_plans if p.attack.switch_id == sid]
            self._process_switch_window(
                sid, arrivals[sid], plans, stats[sid], batch, end, capture
            )

        self._controller_round(span_us, end, stats, batch, capture)

        for sid in sorted(stats):
            batch.window_stats.append(stats[sid])
        self.clock_us = end
        self.window_index += 1

    def _process_switch_window(self, sid, flows, plans, stats, batch, window_end, capture):
        state = self.switches[sid]
        for flow in flows:
            for plan in plans:
                self._emit_attack_until(plan, flow.ts_us, state, stats, batch, capture)
            self._process_normal_arrival(flow, state, stats, batch, capture)
        for plan in plans:
            self._emit_attack_until(plan, plan.seg_end, state, stats, batch, capture)

    def _emit_attack_until(self, plan, ts_limit, state, stats, batch, capture):
        seg_len = plan.seg_end - plan.seg_start
        offset = min(max(ts_limit - plan.seg_start, 0), seg_len)
        target = plan.attack.arrival_count(seg_len, plan.n, offset)
        if ts_limit >= plan.seg_end:
            target = plan.n
        count = target - plan.emitted
        if count <= 0:
            return
        attack = plan.attack
        port = attack.port
        pc = state.port(port)
        chunk_ts = attack.arrival_ts(plan.seg_start, seg_len, plan.n, plan.emitted)
        pc.flows_in += count
        pc.packets_in += count
        stats.num_flow_in += count
        stats.port_flow_in[port] = stats.port_flow_in.get(port, 0) + count

        if capture:
            for j in range(plan.emitted, target):
                ts = attack.arrival_ts(plan.seg_start, seg_len, plan.n, j)
                counter = attack.counter + (j - plan.emitted)
                batch.records.append(
                    PacketRecord(
                        ts_us=ts,
                        switch_id=attack.switch_id,
                        in_port=port,
                        src_addr=attack.host.address,
                        dst_addr=attack.forged_dst(counter),
                        src_port=40000 + (counter % 20000),
                        dst_port=int(80 + (counter % 1000)),
                        protocol=PROTO_TCP,
                        length=attack.spec.packet_bytes,
                        tcp_flags=TCP_SYN,
                    )
                )
                batch.counter_events.append(
                    CounterEvent(ts, attack.switch_id, port, EVENT_FLOW_IN)
                )

        if self._rule_active(attack.switch_id, port, chunk_ts):
            # handling rule active: new flows dropped, no PacketIn raised
            pc.dropped += count
        else:
            pc.packet_in_sent += count
            stats.num_packet_in += count
            stats.port_packet_in[port] = stats.port_packet_in.get(port, 0) + count
            if capture:
                for j in range(plan.emitted, target):
                    ts = attack.arrival_ts(plan.seg_start, seg_len, plan.n, j)
                    batch.counter_events.append(
                        CounterEvent(ts, attack.switch_id, port, EVENT_PACKET_IN)
                    )
            room = state.spec.buffer_capacity - state.buffer_occupancy
            buffered = min(count, room)
            if buffered > 0:
                state.buffer_occupancy += buffered
                self._enqueue(chunk_ts, _PendingAttack(attack.switch_id, port, buffered))
            pc.dropped += count - buffered

        attack.counter += count
        plan.emitted = target

    def _process_normal_arrival(self, flow, state, stats, batch, capture):
        src = flow.source
        port = src.port
        pc = state.port(port)
        pc.flows_in += 1
        pc.packets_in += flow.npkts
        stats.num_flow_in += 1
        stats.port_flow_in[port] = stats.port_flow_in.get(port, 0) + 1
        if capture:
            batch.counter_events.append(
                CounterEvent(flow.ts_us, src.switch_id, port, EVENT_FLOW_IN)
            )

        if flow.key in state.flow_table:
            pc.flows_out += 1
            pc.packets_out += flow.npkts
            stats.num_flow_out += 1
            if capture:
                batch.counter_events.append(
                    CounterEvent(flow.ts_us, src.switch_id, port, EVENT_FLOW_OUT)
                )
                self._materialize_normal_flow(flow, batch, forwarded=True)
            return

        if self._rule_active(src.switch_id, port, flow.ts_us):
            pc.dropped += flow.npkts
            if capture:
                self._materialize_normal_flow(flow, batch, forwarded=False)
            return

        if flow.key in state.pending_keys:
            # request already outstanding for this key: no second PacketIn
            pc.dropped += flow.npkts
            if capture:
                self._materialize_normal_flow(flow, batch, forwarded=False)
            return

        pc.packet_in_sent += 1
        stats.num_packet_in += 1
        stats.port_packet_in[port] = stats.port_packet_in.get(port, 0) + 1
        if capture:
            batch.counter_events.append(
                CounterEvent(flow.ts_us, src.switch_id, port, EVENT_PACKET_IN)
            )
        if state.buffer_occupancy < state.spec.buffer_capacity:
            state.buffer_occupancy += 1
            state.pending_keys.add(flow.key)
            self._enqueue(flow.ts_us, _PendingNormal(src.switch_id, port, flow))
        else:
            pc.dropped += flow.npkts
            if capture:
                self._materialize_normal_flow(flow, batch, forwarded=False)

    def _enqueue(self, ts, entry):
        self._pending.append((ts, self._seq, entry))
        self._seq += 1

    def _controller_round(self, span_us, window_end, stats, batch, capture):
        budget = int(round(self.topology.controller_capacity * span_us / 1e6))
        self._pending.sort(key=lambda item: (item[0], item[1]))
        still_pending = []
        resolve_ts = window_end - 1
        for ts, seq, entry in self._pending:
            if budget <= 0:
                still_pending.append((ts, seq, entry))
                continue
            state = self.switches[entry.switch_id]
            pc = state.port(entry.port)
            if isinstance(entry, _PendingAttack):
                grant = min(entry.count, budget)
                budget -= grant
                installed = min(grant, state.table_space)
                state.anon_rules += installed
                state.buffer_occupancy -= grant
                pc.flows_out += installed
                pc.packets_out += installed
                pc.dropped += grant - installed
                window_stats = stats.get(entry.switch_id)
                if window_stats is not None:
                    window_stats.num_flow_out += installed
                if capture and installed:
                    for _ in range(installed):
                        batch.counter_events.append(
                            CounterEvent(
                                resolve_ts, entry.switch_id, entry.port, EVENT_FLOW_OUT
                            )
                        )
                if grant < entry.count:
                    still_pending.append(
                        (ts, seq, _PendingAttack(entry.switch_id, entry.port,
                                                 entry.count - grant))
                    )
            else:
                budget -= 1
                state.buffer_occupancy -= 1
                flow = entry.flow
                state.pending_keys.discard(flow.key)
                if state.table_space > 0:
                    state.flow_table.add(flow.key)
                    pc.flows_out += 1
                    pc.packets_out += 1
                    pc.dropped += flow.npkts - 1
                    window_stats = stats.get(entry.switch_id)
                    if window_stats is not None:
                        window_stats.num_flow_out += 1
                    if capture:
                        batch.counter_events.append(
                            CounterEvent(
                                resolve_ts, entry.switch_id, entry.port, EVENT_FLOW_OUT
                            )
                        )
                        self._materialize_normal_flow(
                            flow, batch, forwarded=False, head_reply_ts=resolve_ts
                        )
                else:
                    pc.dropped += flow.npkts
                    if capture:
                        self._materialize_normal_flow(flow, batch, forwarded=False)
        self._pending = still_pending

    # -- capture details -----------------------------------------------------

    def _materialize_normal_flow(self, flow, batch, forwarded, head_reply_ts=None):
        """Emit packet records for one normal flow.

        Forward packets are arrivals and always appear; replies appear for
        forwarded traffic (all packets when the rule existed at arrival,
        just the head packet when the flow was installed mid-miss).
        """
        src = flow.source
        profile = src.profile
        detail = src.detail
        n = flow.npkts
        duration = int(detail.integers(50_000, 500_000))
        offsets = np.sort(detail.integers(0, max(duration, 1), size=n - 1)) if n > 1 else []
        fwd_ts = [flow.ts_us] + [flow.ts_us + int(o) for o in offsets]
        fwd_len = detail.integers(profile.fwd_len[0], profile.fwd_len[1] + 1, size=n)
        reply_delay = int(detail.integers(500, 5_000))
        reply_len = int(detail.integers(profile.bwd_len[0], profile.bwd_len[1] + 1))
        key = flow.key
        for i, (ts, length) in enumerate(zip(fwd_ts, fwd_len)):
            flags = TCP_SYN if i == 0 else TCP_PSHACK
            batch.records.append(
                PacketRecord(
                    ts_us=int(ts),
                    switch_id=src.switch_id,
                    in_port=src.port,
                    src_addr=key[0],
                    dst_addr=key[1],
                    src_port=key[2],
                    dst_port=key[3],
                    protocol=key[4],
                    length=int(length),
                    tcp_flags=flags,
                )
            )
        reply_base = None
        if forwarded:
            reply_base = [ts + reply_delay for ts in fwd_ts]
        elif head_reply_ts is not None:
            reply_base = [head_reply_ts + reply_delay]
        if reply_base:
            for i, ts in enumerate(reply_base):
                batch.records.append(
                    PacketRecord(
                        ts_us=int(ts),
                        switch_id=src.switch_id,
                        in_port=UPLINK_PORT,
                        src_addr=key[1],
                        dst_addr=key[0],
                        src_port=key[3],
                        dst_port=key[2],
                        protocol=key[4],
                        length=reply_len,
                        tcp_flags=TCP_SYNACK if i == 0 else TCP_ACK,
                    )
                )


@dataclass
class _AttackPlan:
    attack: _AttackSource
    seg_start: int
    seg_end: int
    n: int
    emitted: int


@dataclass(frozen=True)
class _PendingAttack:
    switch_id: int
    port: int
    count: int


@dataclass(frozen=True)
class _PendingNormal:
    switch_id: int
    port: int
    flow: _FlowArrival


def emit_packet_records(records, path, header_comment=None):
    """Write a finalized, ts-sorted event log to the packet CSV format."""
    return write_packet_records(records, path, header_comment=header_comment)


def attacker_addresses(topology: Topology):
    return {h.address for h in topology.hosts if h.role == "attacker"}
