"""Command line: ``manetq simulate`` and ``manetq compare``.

Exit status: 0 success, 2 configuration error, 3 simulation invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import PROTOCOLS, ConfigError, load_config, validate
from .experiment import ConfigMismatch, compare, protocol_configs, run_scenario
from .metrics import NegativeDelay
from .network import InvariantViolation
from .routing.dsr import NotOnRoute
from .topology import PlacementError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class UsageError(ValueError):
    pass


def parse_seeds(text: str) -> list[int]:
    """``1..20``, ``3`` or ``1,4,7`` (ranges and lists may mix)."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..", 1)
                lo_i, hi_i = int(lo), int(hi)
                if hi_i < lo_i:
                    raise UsageError(f"empty seed range {part!r}")
                seeds.extend(range(lo_i, hi_i + 1))
            else:
                seeds.append(int(part))
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad seed list {text!r}") from None
    if any(s < 0 for s in seeds):
        raise UsageError("seeds must be non-negative")
    return seeds


def parse_protocols(text: str) -> list[str]:
    out = [p.strip() for p in text.split(",") if p.strip()]
    for p in out:
        if p not in PROTOCOLS:
            raise UsageError(f"unknown protocol {p!r}; choose from {', '.join(PROTOCOLS)}")
    if not out:
        raise UsageError("no protocols given")
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="manetq", description="MANET routing simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--protocol", choices=PROTOCOLS)
    s.add_argument("--out", help="CSV output file (default: stdout)")
    s.add_argument("--trace", help="write the event trace here")

    c = sub.add_parser("compare", help="run several protocols over a seed sweep")
    c.add_argument("config")
    c.add_argument("--protocols", default=",".join(PROTOCOLS))
    c.add_argument("--seeds", default="1..20")
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--period", type=int, help="period used for per-seed wins (default: whole run)")
    c.add_argument("--jobs", type=int, default=1)
    return ap


def _simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.protocol is not None:
        cfg = replace(cfg, protocol=args.protocol)
    cfg = validate(cfg)
    report, path = run_scenario(cfg, args.out, args.trace)
    if path is None:
        sys.stdout.write(report.csv_text())
    else:
        s = report.summary
        delay = "n/a" if s.mean_delay is None else f"{s.mean_delay:.4f} s"
        print(f"{cfg.protocol} seed {cfg.seed}: delivered {report.delivered}/{report.offered}, "
              f"mean delay {delay}, wrote {path}")
    return EXIT_OK


def _compare(args) -> int:
    base = load_config(args.config)
    protocols = parse_protocols(args.protocols)
    seeds = parse_seeds(args.seeds)
    if args.period is not None and not 1 <= args.period <= base.periods:
        raise UsageError(f"--period must lie in 1..{base.periods}")
    result = compare(protocol_configs(base, protocols), seeds, args.period, jobs=args.jobs)
    for p in result.write(args.out):
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        return _compare(args)
    except (ConfigError, ConfigMismatch, UsageError, PlacementError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, NegativeDelay, NotOnRoute) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
