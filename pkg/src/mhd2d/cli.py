"""Command-line entry point ``mhd2d``.

Subcommands ``run``, ``swap-test``, ``eps-test`` and ``ineq-campaign``. Exit
status: 0 success, 1 blow-up or failed hard check, 2 invalid configuration or
arguments, 3 I/O failure, 4 numerical failure (CFL violation and the like).
Failures print a one-line JSON error report on stderr.
"""

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .experiments import (
    epsilon_refinement_experiment,
    swap_symmetry_experiment,
    with_overrides,
)
from .inequalities import parse_campaign_config, run_campaign
from .runner import EXIT_CONFIG, EXIT_FAILED, EXIT_IO, EXIT_NUMERICS, EXIT_OK, main_run
from .solver import PRESETS, CflError

SWAP_TOL = 1e-10
INTERP_TOL = 1e-12


def _report_error(kind, message, status, **extra):
    payload = {"error": kind, "message": str(message), "exit_status": status, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return status


def _emit(result, output, filename):
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if output:
        os.makedirs(output, exist_ok=True)
        with open(os.path.join(output, filename), "w") as fh:
            fh.write(text + "\n")


def _load(args):
    cfg = load_config(args.config)
    return with_overrides(cfg, args.preset, args.seed)


def cmd_run(args):
    cfg = _load(args)
    status, data = main_run(cfg, args.output)
    if data["failed"]:
        return _report_error("blowup", data["failure"], status, output=args.output or cfg.output_dir)
    if status != EXIT_OK:
        failed = [k for k, v in data["hard_monitors"].items() if not v["passed"]]
        return _report_error("monitor", f"hard monitor(s) failed: {', '.join(failed)}", status)
    print(json.dumps({"status": "ok", "t_final": data["t_final"],
                      "n_records": data["n_records"]}, sort_keys=True))
    return status


def cmd_swap(args):
    cfg = _load(args)
    dev = swap_symmetry_experiment(cfg)
    passed = dev <= args.tol
    _emit({"max_deviation": dev, "tolerance": args.tol, "passed": passed},
          args.output, "swap.json")
    if not passed:
        return _report_error("swap", f"deviation {dev:.3e} > {args.tol:g}", EXIT_FAILED)
    return EXIT_OK


def cmd_eps(args):
    cfg = _load(args)
    pairs = epsilon_refinement_experiment(cfg)
    dists = [d for _, d in pairs]
    passed = all(b < a for a, b in zip(dists, dists[1:]))
    _emit({"distances": [{"epsilon": e, "distance": d} for e, d in pairs],
           "strictly_decreasing": passed}, args.output, "eps.json")
    if not passed:
        return _report_error("eps", "distances are not strictly decreasing", EXIT_FAILED)
    return EXIT_OK


def cmd_campaign(args):
    with open(args.config) as fh:
        kind, family, n, options = parse_campaign_config(fh.read())
    if args.seed is not None:
        family = family.with_seed(args.seed)
    report = run_campaign(kind, family, n, **options)
    data = json.loads(report.to_json())
    passed = not (kind == "interp_1d" and report.max_ratio > 1.0 + INTERP_TOL)
    data["passed"] = passed
    _emit(data, args.output, "report.json")
    if not passed:
        return _report_error("inequality", f"interp_1d ratio {report.max_ratio!r} > 1", EXIT_FAILED)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="mhd2d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=True):
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--output", metavar="DIR")
        if preset:
            p.add_argument("--preset", choices=PRESETS)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("run", help="integrate one configuration and write diagnostics")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("swap-test", help="axis-swap symmetry check")
    common(p)
    p.add_argument("--tol", type=float, default=SWAP_TOL)
    p.set_defaults(func=cmd_swap)
    p = sub.add_parser("eps-test", help="epsilon-refinement ladder")
    common(p)
    p.set_defaults(func=cmd_eps)
    p = sub.add_parser("ineq-campaign", help="randomized inequality campaign")
    common(p, preset=False)
    p.set_defaults(func=cmd_campaign)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        return _report_error("config", exc, EXIT_CONFIG, line=exc.line)
    except CflError as exc:
        return _report_error("cfl", exc, EXIT_NUMERICS, suggested_dt=exc.suggested_dt)
    except OSError as exc:
        return _report_error("io", exc, EXIT_IO, path=getattr(exc, "filename", None))
    except ValueError as exc:
        return _report_error("invalid", exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
