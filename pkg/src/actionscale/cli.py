"""Command-line entry point: run touch/clear/jump scenarios and sweeps."""

from __future__ import annotations

import argparse
import sys

from .errors import ActionScaleError, ConfigError
from .harness.config import default_config, load_config
from .harness.sweep import emit, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actionscale",
        description="Scale-free visuomotor experiments: estimate distance in "
                    "action-implied units, then touch, clear, or jump.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("touch", "oscillate, estimate target width, approach, touch"),
            ("clear", "measure body and opening, decide, traverse"),
            ("jump", "identify actuator and gravity, plan and execute a jump"),
            ("sweep", "run the sweep grid from a config file")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML config overlay")
        p.add_argument("--seed", type=int, help="master seed (64-bit)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--trials", type=int, help="trials per sweep cell")
        p.add_argument("--no-quantize", action="store_true",
                       help="disable pixel quantization")
        p.add_argument("--parallel", type=int, default=None,
                       help="worker processes")
        p.add_argument("--strict", action="store_true",
                       help="exit 3 on any hard trial failure")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            if not args.config:
                raise ConfigError("sweep requires --config")
            cfg = load_config(args.config)
        else:
            cfg = default_config(args.command)
            if args.config:
                cfg = load_config(args.config, base=cfg)
            cfg.kind = args.command
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.trials is not None:
            cfg.trials = args.trials
        if args.no_quantize:
            cfg.quantize = False
        if args.parallel is not None:
            cfg.parallel = args.parallel
        if args.strict:
            cfg.strict = True
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_scenario(cfg)
        paths = emit(report, cfg.out_dir)
    except ActionScaleError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    n_fail = sum(1 for r in report.records if r.get("failure"))
    n_done = len(report.records)
    print(f"{cfg.kind}: {n_done} records "
          f"({n_fail} failures) -> {paths['records']}")
    if cfg.strict and n_fail:
        for rec in report.records:
            if rec.get("failure"):
                print(f"  trial {rec.get('trial')} "
                      f"{ {k: v for k, v in rec.items() if k.startswith('axis.')} }: "
                      f"{rec['failure']}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
