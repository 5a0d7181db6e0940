"""Trace analysis: strict parsing and per-interval time series (drop/receive counts)."""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple

from .model import PacketKind, TraceEvent


def parse_trace_text(text: str) -> List[TraceEvent]:
    """Parse a whole trace; any malformed line aborts with its line number."""
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        events.append(TraceEvent.parse_line(line, lineno))
    return events


def read_trace(path: str) -> List[TraceEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace_text(fh.read())


def interval_series(events: Sequence[TraceEvent], interval: float,
                    node: int) -> List[Tuple[float, int, int, int, int]]:
    """Aggregate a trace into fixed windows.

    Each row is (window_end, drops_at_node, drop_bytes_at_node,
    receives_at_node, cum_data_loss) where cum_data_loss counts DATA 'd'
    events network-wide up to the window end.
    """
    if interval <= 0.0:
        raise ValueError("interval must be positive")
    if not events:
        return []
    n_bins = int(math.floor(max(e.time for e in events) / interval)) + 1
    drops = [0] * n_bins
    drop_bytes = [0] * n_bins
    receives = [0] * n_bins
    data_loss = [0] * n_bins
    for e in events:
        idx = int(e.time // interval)
        if e.event == "d" and e.pkt_type == PacketKind.DATA.value:
            data_loss[idx] += 1
        if e.source != node:
            continue
        if e.event == "d":
            drops[idx] += 1
            drop_bytes[idx] += e.pkt_size
        elif e.event == "r":
            receives[idx] += 1
    rows = []
    cum = 0
    for i in range(n_bins):
        cum += data_loss[i]
        rows.append(((i + 1) * interval, drops[i], drop_bytes[i], receives[i], cum))
    return rows


def parse_metrics_csv(text: str) -> List[Dict[str, float]]:
    """Read a metrics CSV back into one dict per row, keyed by header names."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return []
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        values = ln.split(",")
        rows.append({name: float(v) for name, v in zip(header, values)})
    return rows


def victim_energy_at(metrics_rows: List[Dict[str, float]], t: float) -> Optional[float]:
    """Latest sampled victim energy at or before t, if any."""
    best = None
    for row in metrics_rows:
        if row["t"] <= t + 1e-9:
            best = row["victim_energy"]
        else:
            break
    return best
