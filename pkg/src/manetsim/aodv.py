"""Reactive routing state machine: on-demand discovery, forwarding, maintenance.

Each node owns one `AodvNode`.  Handlers are called by the engine's event loop
with a received header/body and return a list of actions (transmissions, drops,
retry-timer requests) for the engine to execute; they never touch the medium,
energy, or random streams themselves.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Deque, Dict, List, Optional, Tuple

from .model import (BROADCAST, CONTROL_FID, HELLO_BYTES, RERR_BYTES, RREP_BYTES,
                    RREQ_BYTES, CommonHeader, PacketKind, RerrBody, RouteEntry,
                    RrepBody, RreqBody)

# Drop reason codes (kept out of the trace format; reported separately).
NO_ROUTE = "NO_ROUTE"
NO_REVERSE_ROUTE = "NO_REVERSE_ROUTE"
BUFFER_OVERFLOW = "BUFFER_OVERFLOW"
RETRY_EXHAUSTED = "RETRY_EXHAUSTED"


@dataclass
class Tx:
    """A transmission the engine should perform on behalf of a node."""

    header: CommonHeader
    link_dst: int
    body: object = None
    forward: bool = False
    pretagged: bool = False


@dataclass
class Drop:
    """A packet discarded at this node, to be traced as a 'd' event."""

    header: CommonHeader
    reason: str
    neighbor: int


@dataclass
class StartRetry:
    """Ask the engine to schedule a discovery-retry timer.

    Carries the broadcast id it was armed for, so a stale timer left over
    from an earlier discovery toward the same destination cannot fire into
    a newer one.
    """

    dst: int
    attempt: int
    bid: int


Action = object


@dataclass(frozen=True)
class AodvParams:
    route_lifetime: float = 10.0
    retry_limit: int = 2
    retry_timeout: float = 1.0
    buffer_cap: int = 64
    rreq_cache_ttl: float = 10.0
    hello_interval: float = 1.0
    hello_loss_limit: int = 2
    intermediate_rrep: bool = False


@dataclass
class _Discovery:
    bid: int
    attempt: int


class AodvNode:
    """Routing table, discovery state, pending traffic, and neighbor monitor."""

    def __init__(self, nid: int, params: AodvParams, alloc_uid: Callable[[], int]):
        self.nid = nid
        self.params = params
        self.alloc_uid = alloc_uid
        self.routes: Dict[int, RouteEntry] = {}
        self.own_seq = 0
        self.next_broadcast_id = 0
        self.pkt_seq = 0
        self.rreq_seen: Dict[Tuple[int, int], float] = {}
        self.pending: Dict[int, Deque[CommonHeader]] = {}
        self.discovery: Dict[int, _Discovery] = {}
        self.last_hello: Dict[int, float] = {}

    # -- helpers -----------------------------------------------------------

    def next_pkt_seq(self) -> int:
        seq = self.pkt_seq
        self.pkt_seq += 1
        return seq

    def _new_header(self, kind: PacketKind, size: int, dst: int,
                    fid: int = CONTROL_FID) -> CommonHeader:
        return CommonHeader(uid=self.alloc_uid(), kind=kind, size=size,
                            src=self.nid, dst=dst, prev_hop=self.nid,
                            seq=self.next_pkt_seq(), fid=fid)

    def valid_route(self, dst: int, t: float) -> Optional[RouteEntry]:
        entry = self.routes.get(dst)
        if entry is not None and entry.valid and entry.expiry > t:
            return entry
        return None

    def refresh_route(self, entry: RouteEntry, t: float):
        entry.expiry = max(entry.expiry, t + self.params.route_lifetime)

    def _update_route(self, dest: int, next_hop: int, hop_count: int,
                      dest_seq: int, t: float):
        """Install/replace on fresher sequence number or shorter same-seq path."""
        if dest == self.nid:
            return
        entry = self.routes.get(dest)
        stale = entry is None or not entry.valid or entry.expiry <= t
        if (stale or dest_seq > entry.dest_seq
                or (dest_seq == entry.dest_seq and hop_count < entry.hop_count)):
            self.routes[dest] = RouteEntry(dest=dest, next_hop=next_hop,
                                           hop_count=hop_count, dest_seq=dest_seq,
                                           expiry=t + self.params.route_lifetime)
        elif (dest_seq == entry.dest_seq and hop_count == entry.hop_count
                and next_hop == entry.next_hop):
            self.refresh_route(entry, t)

    def _rreq_duplicate(self, orig: int, bid: int, t: float) -> bool:
        seen = self.rreq_seen.get((orig, bid))
        if seen is not None and t - seen <= self.params.rreq_cache_ttl:
            return True
        self.rreq_seen[(orig, bid)] = t
        return False

    def _flood_rreq(self, dst: int, t: float) -> Tx:
        bid = self.next_broadcast_id
        self.next_broadcast_id += 1
        self.rreq_seen[(self.nid, bid)] = t  # suppress echoes of our own flood
        known = self.routes.get(dst)
        body = RreqBody(broadcast_id=bid, orig_seq=self.own_seq, dest=dst,
                        dest_seq_known=known.dest_seq if known else None)
        header = self._new_header(PacketKind.RREQ, RREQ_BYTES, BROADCAST)
        return Tx(header=header, link_dst=BROADCAST, body=body)

    def ensure_discovery(self, dst: int, t: float) -> List[Action]:
        """Start a route discovery toward dst unless one is already in flight."""
        if dst in self.discovery:
            return []
        self.own_seq += 1
        tx = self._flood_rreq(dst, t)
        self.discovery[dst] = _Discovery(bid=tx.body.broadcast_id, attempt=1)
        return [tx, StartRetry(dst=dst, attempt=1, bid=tx.body.broadcast_id)]

    # -- application traffic -----------------------------------------------

    def originate_data(self, dst: int, size: int, fid: int, t: float) -> List[Action]:
        """Send one payload toward dst, or buffer it and discover a route."""
        route = self.valid_route(dst, t)
        header = self._new_header(PacketKind.DATA, size, dst, fid)
        if route is not None:
            self.refresh_route(route, t)
            return [Tx(header=header, link_dst=route.next_hop)]
        actions: List[Action] = []
        queue = self.pending.setdefault(dst, deque())
        if len(queue) >= self.params.buffer_cap:
            oldest = queue.popleft()
            actions.append(Drop(header=oldest, reason=BUFFER_OVERFLOW,
                                neighbor=oldest.dst))
        queue.append(header)
        actions.extend(self.ensure_discovery(dst, t))
        return actions

    def on_retry(self, dst: int, attempt: int, bid: int, t: float) -> List[Action]:
        """Discovery retry timer: re-flood, or give up and drop buffered data."""
        disc = self.discovery.get(dst)
        if disc is None or disc.attempt != attempt or disc.bid != bid:
            return []
        if self.valid_route(dst, t) is not None:
            del self.discovery[dst]
            return []
        if disc.attempt <= self.params.retry_limit:
            tx = self._flood_rreq(dst, t)
            disc.bid = tx.body.broadcast_id
            disc.attempt += 1
            return [tx, StartRetry(dst=dst, attempt=disc.attempt, bid=disc.bid)]
        del self.discovery[dst]
        drops: List[Action] = []
        for header in self.pending.pop(dst, deque()):
            drops.append(Drop(header=header, reason=RETRY_EXHAUSTED, neighbor=dst))
        return drops

    # -- packet handlers -----------------------------------------------------

    def handle_rreq(self, header: CommonHeader, body: RreqBody, t: float) -> List[Action]:
        if self._rreq_duplicate(header.src, body.broadcast_id, t):
            return []
        if header.src == self.nid:
            return []
        self._update_route(dest=header.src, next_hop=header.prev_hop,
                           hop_count=header.hop_count + 1, dest_seq=body.orig_seq, t=t)
        if body.dest == self.nid:
            self.own_seq = max(self.own_seq, body.dest_seq_known or 0)
            return self._reply(orig=header.src, dest=self.nid,
                               dest_seq=self.own_seq, hop_count=0, t=t)
        if self.params.intermediate_rrep:
            cached = self.valid_route(body.dest, t)
            wanted = body.dest_seq_known or 0
            if cached is not None and cached.dest_seq >= wanted:
                return self._reply(orig=header.src, dest=body.dest,
                                   dest_seq=cached.dest_seq,
                                   hop_count=cached.hop_count, t=t)
        return [Tx(header=header, link_dst=BROADCAST, body=body, forward=True)]

    def _reply(self, orig: int, dest: int, dest_seq: int, hop_count: int,
               t: float) -> List[Action]:
        reverse = self.valid_route(orig, t)
        if reverse is None:
            return []
        body = RrepBody(dest=dest, dest_seq=dest_seq, hop_count=hop_count, orig=orig)
        header = self._new_header(PacketKind.RREP, RREP_BYTES, orig)
        return [Tx(header=header, link_dst=reverse.next_hop, body=body)]

    def handle_rrep(self, header: CommonHeader, body: RrepBody, t: float) -> List[Action]:
        self._update_route(dest=body.dest, next_hop=header.prev_hop,
                           hop_count=body.hop_count + 1, dest_seq=body.dest_seq, t=t)
        if body.orig == self.nid:
            return self._flush_pending(body.dest, t)
        reverse = self.valid_route(body.orig, t)
        if reverse is None:
            return [Drop(header=header, reason=NO_REVERSE_ROUTE, neighbor=header.prev_hop)]
        forwarded = replace(body, hop_count=body.hop_count + 1)
        return [Tx(header=header, link_dst=reverse.next_hop, body=forwarded, forward=True)]

    def _flush_pending(self, dst: int, t: float) -> List[Action]:
        self.discovery.pop(dst, None)
        actions: List[Action] = []
        queue = self.pending.pop(dst, None)
        if not queue:
            return actions
        for header in queue:  # FIFO release order
            route = self.valid_route(dst, t)
            if route is None:
                actions.append(Drop(header=header, reason=NO_ROUTE, neighbor=dst))
                continue
            self.refresh_route(route, t)
            actions.append(Tx(header=header, link_dst=route.next_hop))
        return actions

    def handle_data(self, header: CommonHeader, t: float) -> List[Action]:
        if header.dst == self.nid:
            return []  # delivered; the engine records the reception
        route = self.valid_route(header.dst, t)
        if route is not None:
            self.refresh_route(route, t)
            return [Tx(header=header, link_dst=route.next_hop, forward=True)]
        known = self.routes.get(header.dst)
        bumped = (known.dest_seq + 1) if known else 0
        rerr = self._new_header(PacketKind.RERR, RERR_BYTES, header.prev_hop)
        body = RerrBody(unreachable=((header.dst, bumped),))
        return [Drop(header=header, reason=NO_ROUTE, neighbor=header.prev_hop),
                Tx(header=rerr, link_dst=header.prev_hop, body=body)]

    def handle_rerr(self, header: CommonHeader, body: RerrBody, t: float) -> List[Action]:
        for dest, seq in body.unreachable:
            entry = self.routes.get(dest)
            if entry is not None and entry.valid and entry.next_hop == header.prev_hop:
                entry.valid = False
                entry.dest_seq = max(entry.dest_seq, seq)
        return []

    def handle_hello(self, header: CommonHeader, t: float) -> List[Action]:
        self.last_hello[header.src] = t
        return []

    # -- periodic maintenance ------------------------------------------------

    def detect_breaks(self, t: float) -> List[Action]:
        """Invalidate routes through silent neighbors; announce them once."""
        limit = self.params.hello_loss_limit * self.params.hello_interval
        lost = {n for n, last in self.last_hello.items() if t - last > limit}
        if not lost:
            return []
        for n in lost:
            del self.last_hello[n]
        invalidated: List[Tuple[int, int]] = []
        for dest in sorted(self.routes):
            entry = self.routes[dest]
            if entry.valid and entry.next_hop in lost:
                entry.valid = False
                entry.dest_seq += 1
                invalidated.append((dest, entry.dest_seq))
        if not invalidated:
            return []
        header = self._new_header(PacketKind.RERR, RERR_BYTES, BROADCAST)
        return [Tx(header=header, link_dst=BROADCAST,
                   body=RerrBody(unreachable=tuple(invalidated)))]

    def on_hello_tick(self, t: float) -> List[Action]:
        actions = self.detect_breaks(t)
        hello = self._new_header(PacketKind.HELLO, HELLO_BYTES, BROADCAST)
        actions.append(Tx(header=hello, link_dst=BROADCAST))
        return actions
