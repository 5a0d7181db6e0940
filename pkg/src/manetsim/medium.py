"""Idealized shared radio medium: disk connectivity and per-packet delays."""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Dict, List

from .mobility import Kinematics
from .model import CommonHeader, Vec2
from .saodv import _implied_channel


@dataclass(frozen=True)
class MediumConfig:
    range_r: float
    bitrate: float
    prop_delay: float = 0.0
    loss_prob: float = 0.0
    #: When true, a frame is only heard on its implied channel: packets whose
    #: announced channel mismatches their tags reach nobody.  Default keeps
    #: channels as header values checked in software by the receiver.
    physical_channels: bool = False
    num_channels: int = 2

    def __post_init__(self):
        if self.range_r <= 0.0 or self.bitrate <= 0.0:
            raise ValueError("range_r and bitrate must be positive")
        if self.prop_delay < 0.0 or not 0.0 <= self.loss_prob < 1.0:
            raise ValueError("prop_delay must be >= 0 and loss_prob in [0, 1)")


@dataclass(frozen=True)
class Delivery:
    receiver: int
    arrival_time: float
    header: CommonHeader


def in_range(a: Vec2, b: Vec2, r: float) -> bool:
    """Euclidean distance at most r, boundary inclusive."""
    dx = a.x - b.x
    dy = a.y - b.y
    return dx * dx + dy * dy <= r * r


def tx_delay(size: int, bitrate: float) -> float:
    """Serialization time of ``size`` bytes at ``bitrate`` bits per second."""
    if size < 0 or bitrate <= 0.0:
        raise ValueError("size must be >= 0 and bitrate > 0")
    return size * 8.0 / bitrate


def broadcast(sender: int, header: CommonHeader, t: float,
              node_kinematics: Dict[int, Kinematics], cfg: MediumConfig,
              rng: Random) -> List[Delivery]:
    """Deliveries for one transmission at time t.

    Every node other than the sender that is within range at send time gets a
    delivery at t + tx_delay + prop_delay, independently dropped with
    ``loss_prob`` (draws consumed in ascending node id order).  The channel
    index does not gate delivery unless ``physical_channels`` is set: the
    receiver-side verification decides acceptance.
    """
    if cfg.physical_channels:
        valid = (math.isfinite(header.rv1) and math.isfinite(header.rv2)
                 and header.channel == _implied_channel(header.rv1, header.rv2,
                                                        cfg.num_channels))
        if not valid:
            return []
    arrival = t + tx_delay(header.size, cfg.bitrate) + cfg.prop_delay
    sender_pos = node_kinematics[sender].pos
    deliveries = []
    for nid in sorted(node_kinematics):
        if nid == sender:
            continue
        if not in_range(sender_pos, node_kinematics[nid].pos, cfg.range_r):
            continue
        if cfg.loss_prob > 0.0 and rng.random() < cfg.loss_prob:
            continue
        deliveries.append(Delivery(receiver=nid, arrival_time=arrival, header=header))
    return deliveries
