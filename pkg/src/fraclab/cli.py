"""``fraclab`` command line: solve, sweep, geometry and verify.

Exit codes: 0 success, 1 config error, 2 solver non-convergence,
3 verification failure.
"""

import argparse
import logging
import sys

from .config import ConfigError, default_config, load_config
from .experiments import GEOMETRY_TASKS, VERIFY_GROUPS, run_geometry, run_solve, run_sweep, run_verify
from .io import DirectoryLocked, locked_directory

__all__ = ["main", "build_parser"]

log = logging.getLogger("fraclab")


def _common(p):
    p.add_argument("--config", help="YAML experiment config (defaults apply when omitted)")
    p.add_argument("--out", help="output directory (default: output.directory of the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (runs are single-threaded; recorded only)")
    p.add_argument("--only", default=None, help="comma-separated filter (verify: check groups)")


def build_parser():
    parser = argparse.ArgumentParser(prog="fraclab", description="Fractional Allen-Cahn experiments.")
    parser.add_argument("-q", "--quiet", action="store_true", help="only print warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="single solve for one eps"))
    _common(sub.add_parser("sweep", help="eps sweep with scaling fits"))
    g = sub.add_parser("geometry", help="nonlocal geometry of a configured set")
    g.add_argument("task", choices=GEOMETRY_TASKS)
    _common(g)
    v = sub.add_parser("verify", help=f"invariant suite; groups: {', '.join(VERIFY_GROUPS)}")
    _common(v)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = default_config() if args.config is None else load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        only = [x.strip() for x in args.only.split(",") if x.strip()] if args.only else None
        out = args.out or cfg.output.directory
        with locked_directory(out):
            if args.command == "solve":
                return run_solve(cfg, out)
            if args.command == "sweep":
                return run_sweep(cfg, out)
            if args.command == "geometry":
                return run_geometry(cfg, out, args.task)
            return run_verify(cfg, out, only)
    except (ConfigError, DirectoryLocked) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
