"""Command-line entry point: ``freqreg <command> [--config FILE] [flags]``."""

import argparse
import logging
import os
import sys

from .scenario import POLICIES, ConfigError, load_scenario

OUT_ENV = "FREQREG_OUT"
DEFAULT_OUT = "freqreg-out"

log = logging.getLogger("freqreg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqreg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze-signal", "hourly mileage / energy requirement / balance of ACE, slow, fast and trinary signals"),
        ("simulate", "follow a signal under an SoC policy; export trajectory, event log and scores"),
        ("settle", "simulate, then credit each hour against a price file"),
        ("compare-markets", "hourly per-MW payment distributions across markets at ideal performance"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="scenario INI file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--market", help="PJM, NYISO, MISO, ISONE or CAISO")
        p.add_argument("--policy", choices=POLICIES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from . import report

    try:
        cfg = load_scenario(args.config, {
            "seed": args.seed, "out": args.out, "market": args.market, "policy": args.policy,
        })
    except ConfigError as exc:
        print(f"freqreg {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    if cfg.out is None:
        cfg.out = os.environ.get(OUT_ENV) or DEFAULT_OUT
    commands = {
        "analyze-signal": report.cmd_analyze_signal,
        "simulate": report.cmd_simulate,
        "settle": report.cmd_settle,
        "compare-markets": report.cmd_compare_markets,
    }
    try:
        commands[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"freqreg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.command} outputs to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
