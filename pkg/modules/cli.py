"""
Command-line surface:

    python stablemix.py <subcommand> --config <file> [--out <dir|file>] [--seed N] [--threads N]

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numeric failure.
"""
import argparse
import logging

from modules.config_loader import parse_config
from modules.errors import ConfigError, StableMixError
from modules.runner import EXIT_NUMERIC, EXIT_USAGE, run

logger = logging.getLogger(__name__)

# 서브커맨드 -> config `problem`
SUBCOMMANDS = {
    "symbol": "symbol",
    "apply": "apply",
    "solve": "solve",
    "picard": "picard",
    "heatkernel": "heatkernel",
    "maxprin-check": "maxprin",
    "regularity": "regularity",
    "boundary": "boundary",
    "liouville": "liouville",
    "barrier": "barrier",
}

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="key = value config file")
    common.add_argument("--out", help="output directory, or a .csv/.json file for the primary artifact")
    common.add_argument("--seed", type=int, help="override `seed`")
    common.add_argument("--threads", type=int, help="FFT worker threads (override `threads`)")
    common.add_argument("--gnuplot", action="store_true", help="write a .gp script next to every CSV")
    common.add_argument("--figures", action="store_true", help="write plotly figures as standalone HTML")
    common.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")

    parser = argparse.ArgumentParser(prog="stablemix",
                                     description="Numerical lab for mixed local-nonlocal elliptic operators")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, parents=[common])
        if name == "solve":
            sub.add_argument("--method", choices=("direct", "picard", "proximal"), help="override `solver.method`")
        if name == "heatkernel":
            sub.add_argument("--t", type=float, help="override `heat.t`")
    return parser


def _overrides(args):
    changes = {"problem": SUBCOMMANDS[args.command]}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    if getattr(args, "method", None):
        changes["solver__method"] = args.method
    if getattr(args, "t", None) is not None:
        changes["heat__t"] = args.t
    return changes


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, force=True)

    try:
        config = parse_config(args.config).override(**_overrides(args))
    except ConfigError as e:
        for issue in e.issues:
            print(f"config error: {issue}")
        return EXIT_USAGE
    except StableMixError as e:
        print(f"error: {e}")
        return EXIT_NUMERIC

    record = run(config, args.out, gnuplot=args.gnuplot, figures=args.figures)
    if record.error:
        print(f"❌ {record.problem}: {record.error['type']}: {record.error['message']}")
    else:
        failed = [name for name, passed in record.checks.items() if not passed]
        status = "✅" if not failed else "❌"
        print(f"{status} {record.problem}: {len(record.checks) - len(failed)}/{len(record.checks)} checks passed"
              + (f" (failed: {', '.join(failed)})" if failed else ""))
    return record.exit_code
