#!/usr/bin/env python3
"""Channel-count sweep: how the flood's acceptance rate at the victim falls
with the number of frequencies.

Uses a uniformly guessing attacker (the interesting case: a tag-forging
insider is always accepted, a fixed-channel flooder is always rejected) and
writes k,mean,stddev rows to a CSV."""

import argparse
import os
import sys
from dataclasses import replace

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from manetsim import Protocol, Sophistication, load_config
from manetsim.cli import sweep_accept_fractions

REPO = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=os.path.join(REPO, "configs", "attack_demo.cfg"))
    parser.add_argument("--k", default="1,2,4,8,16")
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--out", default=os.path.join(REPO, "out", "channel_sweep.csv"))
    args = parser.parse_args()

    cfg = load_config(args.config)
    # Uniform guesser with a battery large enough to survive accepted floods.
    cfg = replace(cfg, protocol=Protocol.SAODV,
                  attacker=replace(cfg.attacker,
                                   sophistication=Sophistication.NAIVE_RANDOM),
                  energy=replace(cfg.energy, initial=1000.0))
    k_values = [int(tok) for tok in args.k.split(",")]
    rows = sweep_accept_fractions(cfg, k_values, args.reps)

    os.makedirs(os.path.dirname(args.out), exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("k,mean_accept_fraction,stddev\n")
        for k, mean, dev in rows:
            fh.write(f"{k},{mean:.6f},{dev:.6f}\n")
            print(f"k={k:<3d} accept fraction {mean:.4f} (+/- {dev:.4f}), 1/k = {1.0 / k:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
