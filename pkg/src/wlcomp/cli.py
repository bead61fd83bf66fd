"""Command line entry point: ``wlcomp run`` and ``wlcomp check``."""
from __future__ import annotations

import argparse
import logging
import subprocess
import sys
from pathlib import Path

from .bench import run_scenario, write_outputs
from .errors import BenchmarkError, ConfigurationError
from .scenario import load_scenario


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlcomp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write CSV + manifest")
    run.add_argument("--scenario", required=True, help="YAML file or builtin name (simple, phase_noise)")
    run.add_argument("--sweep", choices=("snr", "pilots"))
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--self-training", type=_on_off, metavar="on|off")
    run.add_argument("--kp", type=int, help="blocks per quasi-static phase layer")
    run.add_argument("--truncate", type=int, metavar="N_t")
    run.add_argument("--dense-fir", action="store_true", default=None)
    run.add_argument("--allocation", choices=("preamble", "periodic", "mixed"))
    run.add_argument("--num-pilots", type=int)
    run.add_argument("--grid", type=float, nargs="+", help="override the sweep grid")
    run.add_argument("--max-iter", type=int)
    run.add_argument("--ftol", type=float)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--timings", action="store_true", help="fill the time_s column")
    run.add_argument("-v", "--verbose", action="store_true")

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("pytest_args", nargs=argparse.REMAINDER)
    return p


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    lm = {}
    if args.max_iter is not None:
        lm["max_iterations"] = args.max_iter
    if args.ftol is not None:
        lm["ftol"] = args.ftol
    grid = None
    if args.grid:
        grid = tuple(int(g) if float(g).is_integer() else g for g in args.grid)
    sweep = args.sweep or sc.sweep
    sc = sc.with_overrides(
        sweep=args.sweep, trials=args.trials, seed=args.seed, self_training=args.self_training,
        kp=args.kp, truncate=args.truncate, dense_fir=args.dense_fir, allocation=args.allocation,
        n_pilots=args.num_pilots, lm=lm or None,
        **({"grid" if sweep == "snr" else "pilots_grid": grid} if grid else {}),
    )

    def progress(done, total):
        if args.verbose:
            print(f"\r{done}/{total} trials", end="", file=sys.stderr, flush=True)

    try:
        result = run_scenario(sc, jobs=args.jobs, progress=progress)
        status = 0
    except BenchmarkError as exc:
        print(f"benchmark failed: {exc}", file=sys.stderr)
        result, status = exc.result, 1
    if args.verbose:
        print(file=sys.stderr)
    csv_path, man_path = write_outputs(result, args.out, timings=args.timings)
    print(csv_path)
    print(man_path)
    return status


def _cmd_check(args) -> int:
    suite = Path(__file__).resolve().parents[2] / "tests" / "test_acceptance.py"
    if not suite.exists():
        print(f"acceptance suite not found at {suite}", file=sys.stderr)
        return 2
    extra = [a for a in args.pytest_args if a != "--"]
    return subprocess.call([sys.executable, "-m", "pytest", "-s", str(suite), *extra])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_check(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
