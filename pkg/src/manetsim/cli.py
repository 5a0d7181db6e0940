"""Command-line interface: run scenarios, analyze traces, sweep channels, compute LET.

Exit codes: 0 success, 2 usage/config errors, 3 I/O failures, 4 malformed traces.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from dataclasses import replace
from typing import List, Optional

from .analyze import interval_series, parse_metrics_csv, read_trace, victim_energy_at
from .config import ConfigError, ScenarioConfig, load_config
from .engine import run_scenario, write_metrics, write_trace
from .mobility import Kinematics, LetMode, link_expiration_time
from .model import TraceParseError, Vec2

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_TRACE = 4

SEED_ENV_VAR = "MANETSIM_SEED"


def _resolve_seed(cfg: ScenarioConfig, flag: Optional[int]) -> int:
    """Flag wins over the environment variable, which wins over the config."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError([f"{SEED_ENV_VAR}: expected an integer, got {env!r}"]) from None
    return cfg.rng_seed


def cmd_run(args) -> int:
    if not os.path.isfile(args.config):
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_IO
    cfg = load_config(args.config)
    cfg = replace(cfg, rng_seed=_resolve_seed(cfg, args.seed))
    result = run_scenario(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_trace(os.path.join(args.out, "trace.tr"), result.trace)
    write_metrics(os.path.join(args.out, "metrics.csv"), result.metrics)
    for line in result.report.summary_lines():
        print(line)
    print(f"wrote {os.path.join(args.out, 'trace.tr')} "
          f"({len(result.trace)} events) and metrics.csv "
          f"({len(result.metrics.rows)} samples)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.interval <= 0.0:
        print("error: --interval must be positive", file=sys.stderr)
        return EXIT_USAGE
    events = read_trace(args.trace)
    rows = interval_series(events, args.interval, args.node)
    metrics_rows = None
    metrics_path = os.path.join(os.path.dirname(os.path.abspath(args.trace)),
                                "metrics.csv")
    if os.path.isfile(metrics_path):
        with open(metrics_path, "r", encoding="utf-8") as fh:
            metrics_rows = parse_metrics_csv(fh.read())
    header = "t,drops,drop_bytes,receives,cum_data_loss"
    if metrics_rows is not None:
        header += ",victim_energy"
    print(header)
    for t, drops, drop_bytes, receives, cum in rows:
        line = f"{t:.6f},{drops},{drop_bytes},{receives},{cum}"
        if metrics_rows is not None:
            energy = victim_energy_at(metrics_rows, t)
            line += f",{energy:.9f}" if energy is not None else ","
        print(line)
    return EXIT_OK


def sweep_accept_fractions(cfg: ScenarioConfig, k_values: List[int],
                           reps: int) -> List[tuple]:
    """(k, mean accept fraction, stddev) of the victim's malicious-accept rate.

    Repetition j of every k runs with derived seed base*1000 + j so that the
    same mobility/placement is paired across channel counts.
    """
    rows = []
    for k in sorted(set(k_values)):
        fractions = []
        for rep in range(reps):
            run_cfg = replace(cfg, num_channels=k,
                              rng_seed=cfg.rng_seed * 1000 + rep)
            report = run_scenario(run_cfg).report
            seen = report.victim_malicious_accepts + report.victim_malicious_drops
            if seen > 0:
                fractions.append(report.victim_malicious_accepts / seen)
        if fractions:
            mean = statistics.fmean(fractions)
            dev = statistics.stdev(fractions) if len(fractions) > 1 else 0.0
        else:
            mean, dev = math.nan, math.nan
        rows.append((k, mean, dev))
    return rows


def cmd_sweep(args) -> int:
    try:
        k_values = [int(tok) for tok in args.k.split(",") if tok.strip()]
    except ValueError:
        print(f"error: --k expects a comma-separated integer list, got {args.k!r}",
              file=sys.stderr)
        return EXIT_USAGE
    if not k_values or any(k < 1 for k in k_values):
        print("error: every k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.reps < 1:
        print("error: --reps must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if not os.path.isfile(args.config):
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_IO
    cfg = load_config(args.config)
    print("k,mean_accept_fraction,stddev")
    for k, mean, dev in sweep_accept_fractions(cfg, k_values, args.reps):
        print(f"{k},{mean:.6f},{dev:.6f}")
    return EXIT_OK


def _fmt_let(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def cmd_let(args) -> int:
    numbers = (args.sx, args.sy, args.svx, args.svy,
               args.rx, args.ry, args.rvx, args.rvy, args.r)
    if not all(math.isfinite(v) for v in numbers):
        print("error: all kinematics inputs must be finite", file=sys.stderr)
        return EXIT_USAGE
    if args.r <= 0.0:
        print("error: --r must be positive", file=sys.stderr)
        return EXIT_USAGE
    sender = Kinematics(pos=Vec2(args.sx, args.sy), vel=Vec2(args.svx, args.svy))
    receiver = Kinematics(pos=Vec2(args.rx, args.ry), vel=Vec2(args.rvx, args.rvy))
    if args.mode is not None:
        mode = LetMode.PAPER if args.mode == "paper" else LetMode.STRICT
        print(_fmt_let(link_expiration_time(sender, receiver, args.r, mode)))
        return EXIT_OK
    paper = link_expiration_time(sender, receiver, args.r, LetMode.PAPER)
    strict = link_expiration_time(sender, receiver, args.r, LetMode.STRICT)
    if paper == strict:
        print(_fmt_let(strict))
    else:
        print(f"paper {_fmt_let(paper)}")
        print(f"strict {_fmt_let(strict)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Deterministic MANET simulator with security and mobility-aware "
                    "routing extensions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trace.tr + metrics.csv")
    p_run.add_argument("--config", required=True, help="scenario config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="turn a trace into per-interval CSV series")
    p_an.add_argument("--trace", required=True, help="trace file to analyze")
    p_an.add_argument("--interval", type=float, default=1.0, help="window size in seconds")
    p_an.add_argument("--node", type=int, default=0, help="node whose events are counted")
    p_an.set_defaults(func=cmd_analyze)

    p_sw = sub.add_parser("sweep", help="sweep the channel count and report accept fractions")
    p_sw.add_argument("--config", required=True, help="base scenario config file")
    p_sw.add_argument("--k", required=True, help="comma-separated channel counts, e.g. 1,2,4,8")
    p_sw.add_argument("--reps", type=int, default=10, help="repetitions per k")
    p_sw.set_defaults(func=cmd_sweep)

    p_let = sub.add_parser("let", help="compute a link expiration time")
    for flag, desc in (("--sx", "sender x"), ("--sy", "sender y"),
                       ("--svx", "sender x velocity"), ("--svy", "sender y velocity"),
                       ("--rx", "receiver x"), ("--ry", "receiver y"),
                       ("--rvx", "receiver x velocity"), ("--rvy", "receiver y velocity"),
                       ("--r", "transmission range")):
        p_let.add_argument(flag, type=float, required=True, help=desc)
    p_let.add_argument("--mode", choices=("paper", "strict"), default=None,
                       help="print one mode only (default: both when they differ)")
    p_let.set_defaults(func=cmd_let)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_USAGE
    except TraceParseError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
