"""Command-line entry point: ``optofock {calibrate,sweep,evolve,wigner,audit}``."""

import argparse
import logging
import math
import sys

from . import __version__
from . import experiments as ex
from .config import ConfigError, example_names, load, load_example


def _parser():
    p = argparse.ArgumentParser(prog="optofock", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config path or the name of a shipped example")
    common.add_argument("--out", default=None, help="output directory (default: config output)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $OPTOFOCK_THREADS or 1)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, dotted keys for sections")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    cal = sub.add_parser("calibrate", parents=[common], help="coupling table for targets 1..M_max")
    cal.add_argument("--max", type=int, default=20, dest="M_max")
    sub.add_parser("sweep", parents=[common], help="steady-state metrics along the sweep axis")
    sub.add_parser("evolve", parents=[common], help="transient metrics at the configured point")
    sub.add_parser("wigner", parents=[common], help="Wigner grid and phonon occupancy")
    sub.add_parser("audit", parents=[common], help="truncation and tolerance convergence audit")
    sub.add_parser("examples", help="list the shipped example configs")
    return p


def _config(args):
    if args.config is None:
        raise ConfigError("--config is required for this command")
    if args.config in example_names():
        cfg = load_example(args.config)
    else:
        cfg = load(args.config)
    return cfg.with_overrides(args.override) if args.override else cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "examples":
            print("\n".join(example_names()))
            return 0
        if args.command == "calibrate":
            if not 1 <= args.M_max <= 40:
                raise ConfigError("--max must lie in 1..40")
            _, path = ex.cmd_calibrate(args.M_max, args.out or ".")
            print(path)
            return 0
        cfg = _config(args)
        out = args.out or cfg.output
        if args.command == "sweep":
            rows, path = ex.cmd_sweep(cfg, out, args.threads)
            bad = [r for r in rows if r["status"] != "ok"]
            for r in bad:
                print(f"point {r['ratio']:.3g}: {r['status']}", file=sys.stderr)
            print(path)
            return 0 if not bad else 1
        if args.command == "evolve":
            _, rec, path = ex.cmd_evolve(cfg, out)
            print(path)
            return 0 if rec.converged else 1
        if args.command == "wigner":
            grid, dist, info, paths = ex.cmd_wigner(cfg, out)
            print("\n".join(paths))
            ok = info.residual < ex.CONVERGED_RESIDUAL and math.isfinite(grid.integrate())
            return 0 if ok else 1
        if args.command == "audit":
            report = ex.cmd_audit(cfg, out)
            print("\n".join(report.lines()))
            return 0 if report.passed else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ex.dyn.SteadyStateError, ex.dyn.EvolutionError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
