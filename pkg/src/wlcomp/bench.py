"""Split metrics and the Monte-Carlo benchmark harness.

Every trial draws its randomness from
``SeedSequence([seed, grid_index, trial])``; all methods of a trial see the
same symbols, channel realization and noise, so method differences are
paired. Trials are independent jobs and results are reduced in
``(grid, trial, method)`` order, which keeps output identical for any
number of worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .augmented import AllocationMatrix, make_allocation, to_augmented
from .errors import BenchmarkError, ConfigurationError, ShapeError, SingularLayerError, TrainingError
from .network import build_mirror
from .scenario import Scenario
from .trainer import semi_supervised_train

log = logging.getLogger(__name__)

CSV_HEADER = ("x", "method", "mse_train", "mse_test", "ser_train", "ser_test",
              "iters_supervised", "iters_self", "time_s", "trials", "failures")
MAX_FAILURE_RATE = 0.05


def _split(alloc: AllocationMatrix, which: str):
    if which == "train":
        idx = alloc.indices
    elif which == "test":
        idx = alloc.complement_indices
    else:
        raise ConfigurationError(f"split must be 'train' or 'test', got {which!r}")
    if idx.size == 0:
        raise ConfigurationError(f"the {which} split is empty")
    return idx


def compute_mse(x0, y_l, alloc: AllocationMatrix, which: str = "test") -> float:
    """Squared error per complex symbol over one split.

    Both real coordinates of a symbol contribute, so the result is the
    complex-domain squared error averaged over the split.
    """
    x0, y_l = np.asarray(x0, dtype=float), np.asarray(y_l, dtype=float)
    if x0.shape != y_l.shape or x0.shape[-1] != 2 * alloc.n:
        raise ShapeError(f"shapes {x0.shape} and {y_l.shape} do not match a block of {alloc.n}")
    idx = _split(alloc, which)
    d = x0 - y_l
    return float((np.sum(d[idx] ** 2) + np.sum(d[idx + alloc.n] ** 2)) / idx.size)


def compute_ser(s, s_hat, alloc: AllocationMatrix, which: str = "test") -> float:
    """Fraction of wrong symbol decisions over one split."""
    s, s_hat = np.asarray(s), np.asarray(s_hat)
    if s.shape != s_hat.shape or s.shape[-1] != alloc.n:
        raise ShapeError(f"shapes {s.shape} and {s_hat.shape} do not match a block of {alloc.n}")
    idx = _split(alloc, which)
    return float(np.mean(s[idx] != s_hat[idx]))


@dataclass
class TrialResult:
    x: float
    method: str
    trial: int
    mse_train: float = np.nan
    mse_test: float = np.nan
    ser_train: float = np.nan
    ser_test: float = np.nan
    iters_supervised: int = 0
    iters_self: int = 0
    time_s: float = 0.0
    failed: bool = False
    error: str = ""


@dataclass
class AggregateResult:
    """Means over the successful trials at one grid point."""

    x: float
    method: str
    mse_train: float
    mse_test: float
    ser_train: float
    ser_test: float
    iters_supervised: float
    iters_self: float
    time_s: float
    trials: int
    failures: int

    @property
    def failure_rate(self) -> float:
        total = self.trials + self.failures
        return self.failures / total if total else 0.0


@dataclass
class BenchmarkResult:
    scenario: Scenario
    aggregates: list
    trials: list = field(repr=False, default_factory=list)
    wall_time: float = 0.0

    def table(self, method: str) -> list:
        return [a for a in self.aggregates if a.method == method]

    def get(self, x, method: str) -> AggregateResult:
        for a in self.aggregates:
            if a.method == method and a.x == x:
                return a
        raise KeyError((x, method))


def trial_rng(seed: int, grid_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, grid_index, trial]))


def _metrics(res: TrialResult, x0, y_l, s, s_hat, alloc):
    res.mse_train = compute_mse(x0, y_l, alloc, "train")
    res.mse_test = compute_mse(x0, y_l, alloc, "test")
    res.ser_train = compute_ser(s, s_hat, alloc, "train")
    res.ser_test = compute_ser(s, s_hat, alloc, "test")


def run_trial(sc: Scenario, grid_index: int, trial: int) -> list:
    """All methods of one trial at one grid point."""
    x = sc.sweep_values[grid_index]
    snr_db, n_p = sc.point(x)
    rng = trial_rng(sc.seed, grid_index, trial)
    c = sc.get_constellation()
    alloc = make_allocation(sc.allocation, sc.n, n_p, sc.preamble_fraction)
    model = sc.channel_model(snr_db).realize(sc.n, rng)
    s = c.draw(sc.n, rng)
    y0 = model.propagate(s, rng)
    x0 = to_augmented(s)
    out = []

    if "clairvoyant" in sc.methods:
        res = TrialResult(x, "clairvoyant", trial)
        t0 = time.perf_counter()
        try:
            net = build_mirror(model, c)
            y_l = net.output(y0)
            _metrics(res, x0, y_l, s, net.detect(y_l), alloc)
        except SingularLayerError as exc:
            res.failed, res.error = True, str(exc)
        res.time_s = time.perf_counter() - t0
        out.append(res)

    learned = [m for m in ("phycom1", "phycom2") if m in sc.methods]
    if not learned:
        return out
    feedback = "phycom2" in learned
    net = sc.build_network()
    t0 = time.perf_counter()
    try:
        fit = semi_supervised_train(net, y0, s[alloc.indices], alloc, sc.lm_config(),
                                    feedback=feedback, truncate=sc.truncate)
    except (TrainingError, SingularLayerError, np.linalg.LinAlgError) as exc:
        log.info("trial %d at x=%s failed: %s", trial, x, exc)
        return out + [TrialResult(x, m, trial, failed=True, error=str(exc)) for m in learned]
    elapsed = time.perf_counter() - t0

    if "phycom1" in learned:
        res = TrialResult(x, "phycom1", trial, iters_supervised=fit.iterations_supervised,
                          time_s=fit.supervised.time_total)
        net1 = net.copy()
        net1.theta = fit.theta_supervised
        y_l = net1.output(y0)
        _metrics(res, x0, y_l, s, net1.detect(y_l), alloc)
        out.append(res)
    if feedback:
        res = TrialResult(x, "phycom2", trial, iters_supervised=fit.iterations_supervised,
                          iters_self=fit.iterations_self, time_s=elapsed)
        y_l = net.output(y0)
        _metrics(res, x0, y_l, s, net.detect(y_l), alloc)
        out.append(res)
    return out


def _run_job(args):
    sc, gi, trial = args
    return run_trial(sc, gi, trial)


def aggregate(results, scenario: Scenario) -> list:
    """Reduce trial results in grid order, then scenario method order."""
    table = []
    for x in scenario.sweep_values:
        for method in scenario.methods:
            rows = [r for r in results if r.x == x and r.method == method]
            ok = [r for r in rows if not r.failed]

            def mean(attr):
                return float(np.mean([getattr(r, attr) for r in ok])) if ok else float("nan")

            table.append(AggregateResult(
                x=x, method=method,
                mse_train=mean("mse_train"), mse_test=mean("mse_test"),
                ser_train=mean("ser_train"), ser_test=mean("ser_test"),
                iters_supervised=mean("iters_supervised"), iters_self=mean("iters_self"),
                time_s=mean("time_s"), trials=len(ok), failures=len(rows) - len(ok),
            ))
    return table


def run_scenario(sc: Scenario, jobs: int = 1, progress=None) -> BenchmarkResult:
    """Run every (grid point, trial) of a scenario.

    Parameters
    ----------
    sc : Scenario
    jobs : int
        Worker processes. Output does not depend on this.
    progress : callable, optional
        ``progress(done, total)`` after each finished trial.

    Raises
    ------
    BenchmarkError
        If more than 5% of the trials of any method at any grid point fail.
        The partial :class:`BenchmarkResult` is attached as ``.result``.
    """
    if sc.self_training is False and "phycom2" in sc.methods:
        sc = sc.with_overrides(methods=tuple(m for m in sc.methods if m != "phycom2"))
    keys = [(gi, t) for gi in range(len(sc.sweep_values)) for t in range(sc.trials)]
    t0 = time.perf_counter()
    per_key = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, res in enumerate(pool.map(_run_job, [(sc, gi, t) for gi, t in keys])):
                per_key[keys[i]] = res
                if progress:
                    progress(i + 1, len(keys))
    else:
        for i, (gi, t) in enumerate(keys):
            per_key[(gi, t)] = run_trial(sc, gi, t)
            if progress:
                progress(i + 1, len(keys))
    trials = [r for k in keys for r in per_key[k]]
    result = BenchmarkResult(sc, aggregate(trials, sc), trials, time.perf_counter() - t0)

    bad = [a for a in result.aggregates if a.failure_rate > MAX_FAILURE_RATE]
    if bad:
        worst = max(bad, key=lambda a: a.failure_rate)
        err = BenchmarkError(f"{worst.failures} of {worst.trials + worst.failures} {worst.method} "
                             f"trials failed at x={worst.x}")
        err.result = result
        raise err
    return result


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.10g}"


def to_csv(result: BenchmarkResult, timings: bool = False) -> str:
    """CSV text for a benchmark. ``time_s`` is left empty unless
    ``timings`` is set, so that repeated runs produce identical bytes."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for a in result.aggregates:
        w.writerow([_fmt(a.x), a.method, _fmt(a.mse_train), _fmt(a.mse_test), _fmt(a.ser_train),
                    _fmt(a.ser_test), _fmt(a.iters_supervised), _fmt(a.iters_self),
                    _fmt(a.time_s) if timings else "", a.trials, a.failures])
    return buf.getvalue()


def manifest(result: BenchmarkResult) -> dict:
    from . import __version__

    sc = result.scenario
    theory = {}
    model = sc.channel_model()
    if model.is_deterministic and sc.sweep == "snr":
        for x in sc.sweep_values:
            try:
                theory[_fmt(x)] = model.with_snr(float(x)).clairvoyant_mse(sc.n)
            except SingularLayerError:
                theory[_fmt(x)] = None
    return {
        "scenario": sc.to_dict(),
        "versions": {"wlcomp": __version__, "python": sys.version.split()[0],
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "platform": platform.platform()},
        "timings": {
            "wall_s": result.wall_time,
            "per_point": [{"x": a.x, "method": a.method, "mean_s": a.time_s} for a in result.aggregates],
        },
        "clairvoyant_mse_theory": theory,
        "failures": [{"x": r.x, "method": r.method, "trial": r.trial, "error": r.error}
                     for r in result.trials if r.failed],
    }


def write_outputs(result: BenchmarkResult, out_dir, timings: bool = False) -> tuple[Path, Path]:
    """Write ``<name>_<sweep>.csv`` and ``<name>_<sweep>.manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{result.scenario.name}_{result.scenario.sweep}"
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(to_csv(result, timings))
    man_path = out / f"{stem}.manifest.json"
    man_path.write_text(json.dumps(manifest(result), indent=2, default=float) + "\n")
    return csv_path, man_path
