from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from .config import apply_overrides, load_config, resolve_config
from .errors import EXIT_CONFIG, EXIT_OK, ConfigError
from .orchestrator import compare, load_summary, run, sweep
from .schemas import ExperimentConfig

CONTROLLERS = ["proposed", "robust-baseline", "certainty-equivalent"]


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--set", action="append", default=[], metavar="a.b=v", help="Dotted override")
    parser.add_argument("--scenario", choices=["gap", "overtake"])
    parser.add_argument("--controller", choices=CONTROLLERS)
    parser.add_argument("--theta-bar", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-final", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir")
    parser.add_argument("--decimate", type=int)


def _parse_list(raw: str) -> List[float]:
    try:
        return [float(item) for item in raw.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{raw}'") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxtadapt",
        description="Fixed-time adaptive safety controller experiments",
    )
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Run one closed-loop simulation")
    _experiment_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="Proposed vs robust baseline over a theta_bar grid")
    _experiment_flags(sweep_p)
    sweep_p.add_argument("--theta-bars", type=_parse_list)
    sweep_p.add_argument("--workers", type=int)

    cmp_p = sub.add_parser("compare", help="Join two run summaries")
    cmp_p.add_argument("summary_a")
    cmp_p.add_argument("summary_b")
    cmp_p.add_argument("--out", default=None)

    val_p = sub.add_parser("validate-config", help="Resolve and print a config")
    val_p.add_argument("--config", default=None)
    val_p.add_argument("--set", action="append", default=[], metavar="a.b=v")
    return parser


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    apply_overrides(cfg, args.set)
    flags = {
        "scenario": getattr(args, "scenario", None),
        "controller": getattr(args, "controller", None),
        "theta_bar": getattr(args, "theta_bar", None),
        "dt": getattr(args, "dt", None),
        "t_final": getattr(args, "t_final", None),
        "seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out_dir", None),
        "decimate": getattr(args, "decimate", None),
        "workers": getattr(args, "workers", None),
    }
    for key, value in flags.items():
        if value is not None:
            cfg["experiment"][key] = value
    return resolve_config(cfg)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "compare":
            table = compare(load_summary(args.summary_a), load_summary(args.summary_b), args.out)
            for row in table:
                print(",".join(row))
            return EXIT_OK
        config = experiment_from_args(args)
        if args.command == "validate-config":
            print(json.dumps(config.model_dump(mode="json"), indent=2))
            return EXIT_OK
        if args.command == "sweep":
            _, code = sweep(config, theta_bars=args.theta_bars, workers=args.workers)
            return code
        summary, code = run(config)
        print(json.dumps(summary.model_dump(mode="json"), indent=2))
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
