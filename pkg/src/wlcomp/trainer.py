"""Levenberg-Marquardt training of compensation networks.

Damping follows the gain-ratio rule: with
``rho = (actual reduction) / (predicted reduction)`` a step is accepted when
``rho > 0`` and the damping shrinks by ``max(1/3, 1 - (2 rho - 1)^3)``;
otherwise the step is rejected, the damping grows by ``increase`` and the
Jacobian is kept. The Jacobian is therefore only re-evaluated after an
accepted step.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .augmented import AllocationMatrix, full_allocation, to_augmented
from .errors import ConfigurationError, SingularLayerError, TrainingError
from .network import CompensationNetwork, detect

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LMConfig:
    max_iterations: int = 100
    ftol: float = 1e-8
    xtol: float = 1e-8
    gtol: float = 1e-8
    tau: float = 1e-3  # initial damping = tau * max(diag(J^T J))
    increase: float = 2.0
    min_decrease: float = 1.0 / 3.0
    accept_ratio: float = 0.0
    max_rejections: int = 60  # consecutive, before giving up

    def __post_init__(self):
        if min(self.ftol, self.xtol, self.gtol, self.tau) <= 0:
            raise ConfigurationError("tolerances and tau must be positive")
        if self.increase <= 1 or not 0 < self.min_decrease < 1:
            raise ConfigurationError("need increase > 1 and 0 < min_decrease < 1")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")


@dataclass
class TrainReport:
    """Outcome of one :func:`lm_minimize` run.

    ``history`` holds ``(iteration, cost)`` for the starting point and every
    accepted step, with ``cost = 0.5 * ||f||^2``.
    """

    theta: np.ndarray
    iterations: int = 0
    accepted: int = 0
    rejected: int = 0
    n_jacobians: int = 0
    history: list = field(default_factory=list)
    time_forward: float = 0.0
    time_backward: float = 0.0
    reason: str = ""

    @property
    def cost(self) -> float:
        return self.history[-1][1] if self.history else float("nan")

    @property
    def time_total(self) -> float:
        return self.time_forward + self.time_backward


def damped_step(jtj, g, mu):
    return -np.linalg.solve(jtj + mu * np.eye(jtj.shape[0]), g)


def lm_step(jac, f, mu):
    """``h = -(J^T J + mu I)^{-1} J^T f``."""
    return damped_step(jac.T @ jac, jac.T @ f, mu)


def lm_minimize(net: CompensationNetwork, y0, pilots, alloc: AllocationMatrix,
                cfg: LMConfig = LMConfig(), callback=None) -> TrainReport:
    """Minimise ``0.5 * ||pilots - (I_2 (x) P) y_L(theta)||^2`` in place.

    ``callback(iteration, net)`` is called after the starting point and
    after every accepted step.
    """
    y0 = np.asarray(y0, dtype=float)
    k = net.n_trainable
    if k > 2 * alloc.n_pilots:
        warnings.warn(f"{k} parameters for {2 * alloc.n_pilots} real residuals; problem is under-determined",
                      stacklevel=2)
    report = TrainReport(theta=net.theta)
    if k == 0:
        report.reason = "no trainable parameters"
        return report

    def evaluate():
        t0 = time.perf_counter()
        trace = net.forward(y0)
        f = net.residual(y0, pilots, alloc, trace=trace)
        report.time_forward += time.perf_counter() - t0
        return trace, f

    def jacobian(trace):
        t0 = time.perf_counter()
        jac = net.jacobian(trace, alloc).data
        report.time_backward += time.perf_counter() - t0
        report.n_jacobians += 1
        return jac

    theta = net.theta
    trace, f = evaluate()
    cost = 0.5 * f @ f
    if not np.isfinite(cost):
        raise TrainingError("non-finite residual at the initial point")
    jac = jacobian(trace)
    jtj, g = jac.T @ jac, jac.T @ f
    mu = cfg.tau * max(np.max(np.diag(jtj)), 1e-12)
    report.history.append((0, float(cost)))
    if callback is not None:
        callback(0, net)

    streak = 0
    while True:
        if cost == 0.0:
            report.reason = "zero residual"
            break
        col_norm = np.sqrt(np.diag(jtj))
        fnorm = np.sqrt(2 * cost)
        with np.errstate(divide="ignore", invalid="ignore"):
            cosines = np.where(col_norm > 0, np.abs(g) / (col_norm * fnorm), 0.0)
        if np.max(cosines) <= cfg.gtol:
            report.reason = "gtol"
            break
        if report.iterations >= cfg.max_iterations:
            report.reason = "max_iterations"
            break

        h = damped_step(jtj, g, mu)
        if np.linalg.norm(h) <= cfg.xtol * (np.linalg.norm(theta) + cfg.xtol):
            report.reason = "xtol"
            break

        report.iterations += 1
        net.theta = theta + h
        try:
            new_trace, new_f = evaluate()
            new_cost = 0.5 * new_f @ new_f
        except SingularLayerError:
            new_cost = np.inf
        predicted = 0.5 * h @ (mu * h - g)
        rho = (cost - new_cost) / predicted if predicted > 0 else -1.0

        if np.isfinite(new_cost) and rho > cfg.accept_ratio:
            rel = (cost - new_cost) / cost
            theta, trace, f, cost = net.theta, new_trace, new_f, new_cost
            jac = jacobian(trace)
            jtj, g = jac.T @ jac, jac.T @ f
            mu *= max(cfg.min_decrease, 1.0 - (2.0 * rho - 1.0) ** 3)
            report.accepted += 1
            report.history.append((report.iterations, float(cost)))
            streak = 0
            if callback is not None:
                callback(report.iterations, net)
            if rel <= cfg.ftol:
                report.reason = "ftol"
                break
        else:
            net.theta = theta
            mu *= cfg.increase
            report.rejected += 1
            streak += 1
            if streak >= cfg.max_rejections:
                if report.accepted == 0:
                    raise TrainingError(f"no acceptable step after {streak} attempts (mu={mu:.3g})")
                report.reason = "stalled"
                break

    net.theta = theta
    report.theta = theta.copy()
    log.debug("LM stopped (%s) after %d iterations, cost %.3g", report.reason, report.iterations, cost)
    return report


def _truncate(y0, alloc, n_t):
    if n_t is None or n_t >= alloc.n:
        return y0, alloc
    if n_t < alloc.n_pilots:
        raise ConfigurationError(f"truncation length {n_t} is shorter than the {alloc.n_pilots} pilots")
    n = alloc.n
    y0 = np.concatenate([y0[:n_t], y0[n:n + n_t]])
    return y0, alloc.truncated(n_t)


def supervised_train(net: CompensationNetwork, y0, pilot_symbols, alloc: AllocationMatrix,
                     cfg: LMConfig = LMConfig(), truncate=None, callback=None) -> TrainReport:
    """Fit the network to known pilot symbols.

    ``pilot_symbols`` are the complex symbols at ``alloc.pilot_indices``.
    ``truncate`` restricts training to the first ``truncate`` samples (useful
    with a preamble).
    """
    pilot_symbols = np.asarray(pilot_symbols, dtype=complex)
    if pilot_symbols.size != alloc.n_pilots:
        raise ConfigurationError(f"{pilot_symbols.size} pilot symbols for {alloc.n_pilots} pilot slots")
    y0, alloc = _truncate(np.asarray(y0, dtype=float), alloc, truncate)
    return lm_minimize(net, y0, to_augmented(pilot_symbols), alloc, cfg, callback=callback)


@dataclass
class SemiSupervisedResult:
    supervised: TrainReport
    self_training: TrainReport | None
    labels: np.ndarray  # stage-1 decisions used as stage-2 targets
    symbols: np.ndarray  # final decisions over the whole block
    theta_supervised: np.ndarray = None

    @property
    def theta(self):
        return (self.self_training or self.supervised).theta

    @property
    def iterations_supervised(self) -> int:
        return self.supervised.iterations

    @property
    def iterations_self(self) -> int:
        return self.self_training.iterations if self.self_training else 0

    @property
    def time_total(self) -> float:
        t = self.supervised.time_total
        return t + (self.self_training.time_total if self.self_training else 0.0)


def semi_supervised_train(net: CompensationNetwork, y0, pilot_symbols, alloc: AllocationMatrix,
                          cfg: LMConfig = LMConfig(), feedback: bool = True, truncate=None,
                          cfg_self: LMConfig | None = None, callback=None) -> SemiSupervisedResult:
    """Pilot-supervised fit, then optionally a second fit on the network's
    own hard decisions over the whole block (or the first ``truncate``
    samples)."""
    y0 = np.asarray(y0, dtype=float)
    stage1 = supervised_train(net, y0, pilot_symbols, alloc, cfg, truncate=truncate,
                              callback=None if callback is None else (lambda i, m: callback("supervised", i, m)))
    theta1 = net.theta
    y_t, alloc_t = _truncate(y0, alloc, truncate)
    labels = detect(net.output(y_t), net.constellation)
    stage2 = None
    if feedback:
        stage2 = lm_minimize(net, y_t, to_augmented(labels), full_allocation(alloc_t.n),
                             cfg_self or cfg,
                             callback=None if callback is None else (lambda i, m: callback("self", i, m)))
    symbols = net(y0)
    return SemiSupervisedResult(stage1, stage2, labels, symbols, theta_supervised=theta1)
