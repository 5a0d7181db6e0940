"""Deterministic discrete-event core: queue, nodes, energy, attacker, traces.

Events are processed in (time, insertion sequence) order by a single thread;
all randomness flows through named `random.Random` streams derived from the
scenario seed, so a (config, seed) pair always reproduces the same trace bytes.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from random import Random
from typing import Dict, List, Optional, TextIO, Tuple

from .aodv import AodvNode, AodvParams, Drop, StartRetry, Tx
from .config import ScenarioConfig, Sophistication
from .medium import MediumConfig, broadcast
from .mlet import LetConfig, admit_link, annotate
from .mobility import (Kinematics, advance_waypoint, due_for_advance, initial_waypoint,
                       kinematics_at, parked_waypoint, scripted_waypoint)
from .model import (ATTACK_FID, BROADCAST, HEADER_RX_BYTES, CommonHeader, PacketKind,
                    TraceEvent, Vec2, next_uid)
from .saodv import SecurityConfig, VerifyOutcome, draw_random_values, select_channel, verify

# Event kinds, dispatched on by the main loop.
DELIVER = "DELIVER"
HELLO_TIMER = "HELLO_TIMER"
MOBILITY_UPDATE = "MOBILITY_UPDATE"
APP_SEND = "APP_SEND"
ATTACK_STEP = "ATTACK_STEP"
RETRY_TIMER = "RETRY_TIMER"
METRIC_SAMPLE = "METRIC_SAMPLE"
STOP = "STOP"

#: Kinematics used by the medium are resampled on this grid; positions in
#: between are exact, so the grid only quantizes neighbor-set changes.
MOBILITY_STEP = 0.1

# Engine-level drop reasons (protocol-level ones live in aodv).
DEAD_SENDER = "DEAD_SENDER"
LET_REJECT = "LET_REJECT"

_CONTROL_KINDS = (PacketKind.RREQ, PacketKind.RREP, PacketKind.RERR)


@dataclass(frozen=True)
class EnergyState:
    remaining: float
    alive: bool = True


def debit(state: EnergyState, kind: str, amount: float, params) -> EnergyState:
    """Charge a node for tx/rx bytes or idle seconds; dead nodes are no-ops.

    Crossing zero clamps the remaining energy to 0 and marks the node dead.
    """
    if not state.alive:
        return state
    if kind == "tx":
        cost = params.tx_per_byte * amount
    elif kind == "rx":
        cost = params.rx_per_byte * amount
    elif kind == "idle":
        cost = params.idle_per_sec * amount
    else:
        raise ValueError(f"unknown debit kind {kind!r}")
    remaining = state.remaining - cost
    if remaining <= 0.0:
        return EnergyState(0.0, False)
    return EnergyState(remaining, True)


METRICS_HEADER = "t,malicious_drops,malicious_accepts,victim_energy,cum_loss,ctrl_overhead,delivered"


class Metrics:
    """Per-interval time series plus the cumulative counters they sample."""

    def __init__(self, interval: float):
        self.interval = interval
        self.rows: List[Tuple[float, int, int, float, int, int, int]] = []
        self.window_mal_drops = 0
        self.window_mal_accepts = 0
        self.cum_loss = 0
        self.ctrl_overhead = 0
        self.delivered = 0

    def sample(self, t: float, victim_energy: float):
        self.rows.append((t, self.window_mal_drops, self.window_mal_accepts,
                          victim_energy, self.cum_loss, self.ctrl_overhead,
                          self.delivered))
        self.window_mal_drops = 0
        self.window_mal_accepts = 0

    def to_csv_text(self) -> str:
        lines = [METRICS_HEADER]
        for t, drops, accepts, energy, loss, ctrl, delivered in self.rows:
            lines.append(f"{t:.6f},{drops},{accepts},{energy:.9f},{loss},{ctrl},{delivered}")
        return "\n".join(lines) + "\n"


@dataclass
class RunReport:
    protocol: str
    seed: int
    victim: int
    events_processed: int = 0
    honest_data_sent: int = 0
    honest_data_delivered: int = 0
    honest_data_lost: int = 0
    attacker_data_sent: int = 0
    victim_malicious_accepts: int = 0
    victim_malicious_drops: int = 0
    victim_final_energy: float = 0.0
    control_tx: Counter = field(default_factory=Counter)
    drops_by_reason: Counter = field(default_factory=Counter)
    depletion_times: Dict[int, float] = field(default_factory=dict)

    def summary_lines(self) -> List[str]:
        lines = [
            f"protocol={self.protocol} seed={self.seed} events={self.events_processed}",
            (f"honest data: sent={self.honest_data_sent} "
             f"delivered={self.honest_data_delivered} lost={self.honest_data_lost}"),
            ("control tx: " + " ".join(f"{k.value}={self.control_tx.get(k, 0)}"
                                       for k in _CONTROL_KINDS)),
            (f"victim node {self.victim}: final_energy={self.victim_final_energy:.6f} J "
             f"malicious_accepts={self.victim_malicious_accepts} "
             f"malicious_drops={self.victim_malicious_drops}"),
            f"attacker data sent: {self.attacker_data_sent}",
        ]
        if self.drops_by_reason:
            parts = " ".join(f"{reason}={count}" for reason, count
                             in sorted(self.drops_by_reason.items()))
            lines.append(f"drops by reason: {parts}")
        if self.depletion_times:
            parts = " ".join(f"node{nid}@{t:.3f}" for nid, t
                             in sorted(self.depletion_times.items()))
            lines.append(f"depleted: {parts}")
        return lines


@dataclass
class RunResult:
    trace: List[TraceEvent]
    metrics: Metrics
    report: RunReport
    nodes: Dict[int, AodvNode]
    config: ScenarioConfig


@dataclass
class _Frame:
    header: CommonHeader
    body: object
    link_dst: int


class _Node:
    __slots__ = ("nid", "aodv", "waypoint", "energy", "last_sync", "mob_rng", "tag_rng")

    def __init__(self, nid, aodv, waypoint, energy, mob_rng, tag_rng):
        self.nid = nid
        self.aodv = aodv
        self.waypoint = waypoint
        self.energy = energy
        self.last_sync = 0.0
        self.mob_rng = mob_rng
        self.tag_rng = tag_rng


class Simulation:
    """One scenario run; build it from a validated config and call run()."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.sec = SecurityConfig(k=cfg.num_channels)
        self.med = MediumConfig(range_r=cfg.range_r, bitrate=cfg.bitrate,
                                prop_delay=cfg.prop_delay, loss_prob=cfg.loss_prob,
                                physical_channels=cfg.physical_channels,
                                num_channels=cfg.num_channels)
        self.let_cfg = LetConfig(threshold=cfg.let_threshold,
                                 applies_to=frozenset(cfg.mlet_applies_to))
        self.attacker_id: Optional[int] = cfg.nn if cfg.attacker.enabled else None
        self.victim = cfg.attacker.target
        self.loss_rng = Random(f"{cfg.rng_seed}/loss")
        self.attacker_rng = Random(f"{cfg.rng_seed}/attacker")
        self.uid_state = 0
        self.heap: List[Tuple[float, int, str, tuple]] = []
        self.event_seq = 0
        self.trace: List[TraceEvent] = []
        self.metrics = Metrics(cfg.metrics_interval)
        self.report = RunReport(protocol=cfg.protocol.value, seed=cfg.rng_seed,
                                victim=self.victim)
        params = AodvParams(route_lifetime=cfg.route_lifetime,
                            retry_limit=cfg.retry_limit,
                            retry_timeout=cfg.retry_timeout,
                            buffer_cap=cfg.buffer_cap,
                            rreq_cache_ttl=cfg.rreq_cache_ttl,
                            hello_interval=cfg.hello_interval,
                            hello_loss_limit=cfg.hello_loss_limit,
                            intermediate_rrep=cfg.intermediate_rrep)
        self.nodes: Dict[int, _Node] = {}
        total = cfg.nn + (1 if cfg.attacker.enabled else 0)
        for nid in range(total):
            mob_rng = Random(f"{cfg.rng_seed}/mobility/{nid}")
            tag_rng = Random(f"{cfg.rng_seed}/tags/{nid}")
            waypoint = self._initial_waypoint(nid, mob_rng)
            initial = cfg.attacker.energy if nid == self.attacker_id else cfg.energy.initial
            self.nodes[nid] = _Node(nid=nid,
                                    aodv=AodvNode(nid, params, self._alloc_uid),
                                    waypoint=waypoint,
                                    energy=EnergyState(initial, initial > 0.0),
                                    mob_rng=mob_rng, tag_rng=tag_rng)
        self.kin: Dict[int, Kinematics] = {
            nid: kinematics_at(node.waypoint, 0.0) for nid, node in self.nodes.items()}
        self._schedule_initial()

    # -- setup ---------------------------------------------------------------

    def _initial_waypoint(self, nid: int, mob_rng: Random):
        cfg = self.cfg
        if nid == self.attacker_id:
            if cfg.attacker.pos is not None:
                return parked_waypoint(cfg.attacker.pos)
        elif cfg.node_scripts is not None:
            script = cfg.node_scripts[nid]
            return scripted_waypoint(script.pos, script.target, script.speed)
        px = mob_rng.uniform(0.0, cfg.area_x)
        py = mob_rng.uniform(0.0, cfg.area_y)
        return initial_waypoint(Vec2(px, py), 0.0, cfg.pause)

    def _schedule_initial(self):
        cfg = self.cfg
        self._schedule(MOBILITY_STEP, MOBILITY_UPDATE, ())
        for nid in sorted(self.nodes):
            self._schedule(cfg.hello_interval, HELLO_TIMER, (nid,))
        for i, flow in enumerate(cfg.flows):
            self._schedule(flow.start, APP_SEND, (i,))
        if cfg.attacker.enabled:
            self._schedule(cfg.attacker.start, ATTACK_STEP, ())
        n_samples = int(math.floor(cfg.stop / cfg.metrics_interval + 1e-9))
        for j in range(1, n_samples + 1):
            self._schedule(j * cfg.metrics_interval, METRIC_SAMPLE, ())
        self._schedule(cfg.stop, STOP, ())

    def _alloc_uid(self) -> int:
        uid, self.uid_state = next_uid(self.uid_state)
        return uid

    def _schedule(self, t: float, kind: str, payload: tuple):
        heapq.heappush(self.heap, (t, self.event_seq, kind, payload))
        self.event_seq += 1

    # -- energy ----------------------------------------------------------------

    def _debit(self, node: _Node, kind: str, amount: float, t: float) -> bool:
        """Apply one debit; returns True when it kills the node."""
        was_alive = node.energy.alive
        node.energy = debit(node.energy, kind, amount, self.cfg.energy)
        if was_alive and not node.energy.alive:
            frozen = kinematics_at(node.waypoint, t).pos
            node.waypoint = parked_waypoint(frozen)
            self.kin[node.nid] = Kinematics(pos=frozen, vel=Vec2(0.0, 0.0))
            self.report.depletion_times[node.nid] = t
            return True
        return False

    def _sync_idle(self, node: _Node, t: float):
        elapsed = t - node.last_sync
        if elapsed > 0.0:
            node.last_sync = t
            self._debit(node, "idle", elapsed, t)

    # -- trace / accounting ------------------------------------------------------

    def _emit(self, event: str, t: float, source: int, neighbor: int,
              header: CommonHeader):
        self.trace.append(TraceEvent(
            event=event, time=t, source=source, destination=neighbor,
            pkt_type=header.kind.value, pkt_size=header.size, flags="---",
            fid=header.fid, src_addr=header.src, dst_addr=header.dst,
            seq_num=header.seq, pkt_id=header.uid))

    def _is_honest_data(self, header: CommonHeader) -> bool:
        return header.kind is PacketKind.DATA and header.src != self.attacker_id

    def _count_honest_loss(self):
        self.metrics.cum_loss += 1
        self.report.honest_data_lost += 1

    def _drop(self, nid: int, header: CommonHeader, neighbor: int, reason: str,
              t: float):
        self._emit("d", t, nid, neighbor, header)
        self.report.drops_by_reason[reason] += 1
        if header.kind is PacketKind.DATA:
            if header.src == self.attacker_id:
                if nid == self.victim:
                    self.metrics.window_mal_drops += 1
                    self.report.victim_malicious_drops += 1
            else:
                self._count_honest_loss()

    # -- transmission -----------------------------------------------------------

    def _attacker_tags(self) -> Tuple[float, float, int]:
        mode = self.cfg.attacker.sophistication
        k = self.cfg.num_channels
        if mode is Sophistication.NAIVE_FIXED:
            # Constant tags implying channel 1, announced on channel 2.
            return 0.5, 0.5, 2 if k >= 2 else 1
        if mode is Sophistication.NAIVE_RANDOM:
            rv1 = self.attacker_rng.random()
            rv2 = self.attacker_rng.random()
            return rv1, rv2, self.attacker_rng.randint(1, k)
        rv1, rv2 = draw_random_values(self.attacker_rng)
        return rv1, rv2, select_channel(rv1, rv2, self.sec)

    def _transmit(self, nid: int, tx: Tx, t: float):
        node = self.nodes[nid]
        if not node.energy.alive:
            self._drop(nid, tx.header, tx.link_dst, DEAD_SENDER, t)
            return
        self._sync_idle(node, t)
        header = tx.header
        if tx.forward:
            header = replace(header, prev_hop=nid, hop_count=header.hop_count + 1)
        if not tx.pretagged:
            rv1, rv2 = draw_random_values(node.tag_rng)
            header = replace(header, rv1=rv1, rv2=rv2,
                             channel=select_channel(rv1, rv2, self.sec))
        if self.cfg.protocol.uses_let and header.kind in self.let_cfg.applies_to:
            header = annotate(header, self.kin[nid], self.cfg.mlet_annex_bytes)
        self._debit(node, "tx", header.size, t)
        self._emit("f" if tx.forward else "s", t, nid, tx.link_dst, header)
        if header.kind in _CONTROL_KINDS:
            self.metrics.ctrl_overhead += 1
            self.report.control_tx[header.kind] += 1
        if self._is_honest_data(header) and not tx.forward:
            self.report.honest_data_sent += 1
        deliveries = broadcast(nid, header, t, self.kin, self.med, self.loss_rng)
        if (self._is_honest_data(header) and tx.link_dst != BROADCAST
                and all(d.receiver != tx.link_dst for d in deliveries)):
            self._count_honest_loss()  # next hop unreachable: the packet is gone
        frame = _Frame(header=header, body=tx.body, link_dst=tx.link_dst)
        for d in deliveries:
            if d.arrival_time <= self.cfg.stop:
                self._schedule(d.arrival_time, DELIVER, (d.receiver, frame))

    def _process(self, nid: int, actions, t: float):
        for action in actions:
            if isinstance(action, Tx):
                self._transmit(nid, action, t)
            elif isinstance(action, Drop):
                self._drop(nid, action.header, action.neighbor, action.reason, t)
            elif isinstance(action, StartRetry):
                self._schedule(t + self.cfg.retry_timeout, RETRY_TIMER,
                               (nid, action.dst, action.attempt, action.bid))
            else:
                raise TypeError(f"unknown action {action!r}")

    # -- reception ----------------------------------------------------------------

    def _deliver(self, receiver: int, frame: _Frame, t: float):
        node = self.nodes[receiver]
        header = frame.header
        if frame.link_dst != BROADCAST and frame.link_dst != receiver:
            return  # overheard unicast: filtered before any processing
        if not node.energy.alive:
            if self._is_honest_data(header):
                self._count_honest_loss()
            return
        self._sync_idle(node, t)
        header_cost = min(header.size, HEADER_RX_BYTES)
        if self._debit(node, "rx", header_cost, t):
            if self._is_honest_data(header):
                self._count_honest_loss()
            return
        if self.cfg.protocol.verifies:
            outcome = verify(header, self.sec, self.cfg.paper_range_check)
            if outcome is not VerifyOutcome.ACCEPT:
                # Rejected before the payload is read: header RX cost only.
                self._drop(receiver, header, header.prev_hop, outcome.value, t)
                return
        if self._debit(node, "rx", header.size - header_cost, t):
            if self._is_honest_data(header):
                self._count_honest_loss()
            return
        if (self.cfg.protocol.uses_let and header.kind in self.let_cfg.applies_to
                and header.sender_kin is not None):
            if not admit_link(header.sender_kin, self.kin[receiver],
                              self.cfg.range_r, self.let_cfg, self.cfg.let_mode):
                self._drop(receiver, header, header.prev_hop, LET_REJECT, t)
                return
        self._emit("r", t, receiver, header.prev_hop, header)
        if header.kind is PacketKind.DATA and header.dst == receiver:
            if header.src == self.attacker_id:
                if receiver == self.victim:
                    self.metrics.window_mal_accepts += 1
                    self.report.victim_malicious_accepts += 1
            else:
                self.metrics.delivered += 1
                self.report.honest_data_delivered += 1
        aodv = node.aodv
        if header.kind is PacketKind.HELLO:
            actions = aodv.handle_hello(header, t)
        elif header.kind is PacketKind.RREQ:
            actions = aodv.handle_rreq(header, frame.body, t)
        elif header.kind is PacketKind.RREP:
            actions = aodv.handle_rrep(header, frame.body, t)
        elif header.kind is PacketKind.RERR:
            actions = aodv.handle_rerr(header, frame.body, t)
        else:
            actions = aodv.handle_data(header, t)
        self._process(receiver, actions, t)

    # -- timers ----------------------------------------------------------------

    def _hello_timer(self, nid: int, t: float):
        node = self.nodes[nid]
        if not node.energy.alive:
            return  # depleted nodes stop their timers
        self._sync_idle(node, t)
        if not node.energy.alive:
            return
        self._process(nid, node.aodv.on_hello_tick(t), t)
        nxt = t + self.cfg.hello_interval
        if nxt <= self.cfg.stop:
            self._schedule(nxt, HELLO_TIMER, (nid,))

    def _mobility_update(self, t: float):
        cfg = self.cfg
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            if not node.energy.alive:
                continue
            if due_for_advance(node.waypoint, t):
                node.waypoint = advance_waypoint(node.waypoint, node.mob_rng, t,
                                                 cfg.area_x, cfg.area_y,
                                                 cfg.speed_min, cfg.speed_max,
                                                 cfg.pause)
            self.kin[nid] = kinematics_at(node.waypoint, t)
        nxt = t + MOBILITY_STEP
        if nxt <= cfg.stop:
            self._schedule(nxt, MOBILITY_UPDATE, ())

    def _app_send(self, flow_idx: int, t: float):
        flow = self.cfg.flows[flow_idx]
        node = self.nodes[flow.src]
        if not node.energy.alive:
            return
        self._sync_idle(node, t)
        if node.energy.alive:
            actions = node.aodv.originate_data(flow.dst, flow.size, flow_idx + 1, t)
            self._process(flow.src, actions, t)
        nxt = t + 1.0 / flow.rate
        if nxt <= self.cfg.stop:
            self._schedule(nxt, APP_SEND, (flow_idx,))

    def _attack_step(self, t: float):
        node = self.nodes[self.attacker_id]
        if not node.energy.alive:
            return
        self._sync_idle(node, t)
        if not node.energy.alive:
            return
        target = self.cfg.attacker.target
        route = node.aodv.valid_route(target, t)
        if route is not None:
            node.aodv.refresh_route(route, t)
            rv1, rv2, channel = self._attacker_tags()
            header = CommonHeader(uid=self._alloc_uid(), kind=PacketKind.DATA,
                                  size=self.cfg.attacker.payload, src=node.nid,
                                  dst=target, prev_hop=node.nid,
                                  seq=node.aodv.next_pkt_seq(), fid=ATTACK_FID,
                                  rv1=rv1, rv2=rv2, channel=channel)
            self.report.attacker_data_sent += 1
            self._transmit(node.nid, Tx(header=header, link_dst=route.next_hop,
                                        pretagged=True), t)
        else:
            # Re-enter discovery: the attacker runs ordinary, honestly tagged AODV.
            self._process(node.nid, node.aodv.ensure_discovery(target, t), t)
        nxt = t + 1.0 / self.cfg.attacker.rate
        if nxt <= self.cfg.stop:
            self._schedule(nxt, ATTACK_STEP, ())

    def _retry_timer(self, nid: int, dst: int, attempt: int, bid: int, t: float):
        node = self.nodes[nid]
        if not node.energy.alive:
            return
        self._sync_idle(node, t)
        if node.energy.alive:
            self._process(nid, node.aodv.on_retry(dst, attempt, bid, t), t)

    def _metric_sample(self, t: float):
        for nid in sorted(self.nodes):
            self._sync_idle(self.nodes[nid], t)
        self.metrics.sample(t, self.nodes[self.victim].energy.remaining)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            if t > cfg.stop or kind == STOP:
                break
            self.report.events_processed += 1
            if kind == DELIVER:
                self._deliver(payload[0], payload[1], t)
            elif kind == HELLO_TIMER:
                self._hello_timer(payload[0], t)
            elif kind == MOBILITY_UPDATE:
                self._mobility_update(t)
            elif kind == APP_SEND:
                self._app_send(payload[0], t)
            elif kind == ATTACK_STEP:
                self._attack_step(t)
            elif kind == RETRY_TIMER:
                self._retry_timer(payload[0], payload[1], payload[2], payload[3], t)
            elif kind == METRIC_SAMPLE:
                self._metric_sample(t)
            else:
                raise RuntimeError(f"unknown event kind {kind!r}")
        for nid in sorted(self.nodes):
            self._sync_idle(self.nodes[nid], cfg.stop)
        self.report.victim_final_energy = self.nodes[self.victim].energy.remaining
        return RunResult(trace=self.trace, metrics=self.metrics, report=self.report,
                         nodes={nid: node.aodv for nid, node in self.nodes.items()},
                         config=cfg)


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Run one validated scenario to completion."""
    return Simulation(cfg).run()


def emit_trace(event: TraceEvent, sink: TextIO):
    """Append one formatted trace line to an open text sink."""
    sink.write(event.format_line() + "\n")


def trace_to_text(events: List[TraceEvent]) -> str:
    return "".join(e.format_line() + "\n" for e in events)


def write_trace(path: str, events: List[TraceEvent]):
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            emit_trace(event, fh)


def write_metrics(path: str, metrics: Metrics):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(metrics.to_csv_text())
