"""Widely-linear layers.

Each trainable layer kind knows four things about itself:

* ``transfer(p, x)``: the physical effect ``F(p) x``,
* ``compensate(p, x)``: the compensation ``H(p) x`` used inside a network,
  which is ``F(p) x`` for isomorphic kinds and ``F(p)^{-1} x`` otherwise,
* ``reverse(p)``: parameters ``g(p)`` with ``F(g(p)) = F(p)^{-1}``
  (isomorphic kinds only),
* ``local_jacobian(p, y_in)``: ``d H(p) y_in / dp``, shape ``(2N, K)``.

All signal arguments are augmented real arrays; operations act on the last
axis so a stack of row vectors can be processed at once. ``compensate_t``
applies ``H(p)^T`` to every row, which is what the backward pass needs
(``B H = (H^T B^T)^T``).

Dense ``transfer_matrix``/``compensation_matrix`` builders follow the
closed-form matrices directly and serve as test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import inv, toeplitz
from scipy.signal import lfilter

from .augmented import from_augmented, to_augmented, underline
from .errors import ConfigurationError, NotIsomorphicError, ShapeError, SingularLayerError

EPS_INV = 1e-9


def _half(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ShapeError(f"augmented length must be even, got {x.shape[-1]}")
    return x.shape[-1] // 2


class Layer:
    """Base class. Subclasses are immutable descriptions of a layer kind."""

    name = "layer"
    trainable = True
    isomorphic = False

    @property
    def n_params(self) -> int:
        raise NotImplementedError

    def check_params(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.n_params:
            raise ShapeError(f"{self.name}: expected {self.n_params} parameters, got {p.size}")
        return p

    def identity_params(self) -> np.ndarray:
        """Parameters for which the layer does nothing."""
        raise NotImplementedError

    def zero_params(self) -> np.ndarray:
        return np.zeros(self.n_params)

    # physical direction
    def transfer(self, p, x):
        raise NotImplementedError

    def transfer_matrix(self, p, n):
        raise NotImplementedError

    # compensation direction (isomorphic kinds override nothing here)
    def compensate(self, p, x):
        return self.transfer(p, x)

    def compensate_t(self, p, x):
        raise NotImplementedError

    def compensation_matrix(self, p, n):
        return self.transfer_matrix(p, n)

    def reverse(self, p):
        raise NotIsomorphicError(f"{self.name} layers have no parameter inverse")

    def local_jacobian(self, p, y_in, y_out=None):
        raise NotImplementedError

    def mirror_params(self, alpha):
        """Compensation parameters that undo a channel layer with ``alpha``."""
        return self.reverse(alpha)


@dataclass(frozen=True)
class IQImbalance(Layer):
    """``y = a1 y + a2 conj(y)`` written with four real parameters.

    The real form ``[p1, p2, p3, p4]`` maps ``(Re y, Im y)`` to
    ``(p1 Re y + p2 Im y, p3 Re y + p4 Im y)``; use :meth:`from_complex`
    to convert a complex pair ``(a1, a2)``.
    """

    name = "iq"
    isomorphic = True

    @property
    def n_params(self):
        return 4

    def identity_params(self):
        return np.array([1.0, 0.0, 0.0, 1.0])

    @staticmethod
    def from_complex(a1, a2):
        return np.array([
            (a1 + a2).real,
            (-a1 + a2).imag,
            (a1 + a2).imag,
            (a1 - a2).real,
        ])

    def _mix(self, m, x):
        n = _half(x)
        re, im = x[..., :n], x[..., n:]
        return np.concatenate([m[0, 0] * re + m[0, 1] * im, m[1, 0] * re + m[1, 1] * im], axis=-1)

    def transfer(self, p, x):
        return self._mix(self.check_params(p).reshape(2, 2), np.asarray(x, dtype=float))

    def compensate_t(self, p, x):
        return self._mix(self.check_params(p).reshape(2, 2).T, np.asarray(x, dtype=float))

    def transfer_matrix(self, p, n):
        return np.kron(self.check_params(p).reshape(2, 2), np.eye(n))

    def reverse(self, p):
        a1, a2, a3, a4 = self.check_params(p)
        det = a1 * a4 - a2 * a3
        if abs(det) <= EPS_INV:
            raise SingularLayerError(f"IQ layer is singular (det={det:.3g})", magnitude=abs(det))
        return np.array([a4, -a2, -a3, a1]) / det

    def local_jacobian(self, p, y_in, y_out=None):
        y_in = np.asarray(y_in, dtype=float)
        n = _half(y_in)
        jac = np.zeros((2 * n, 4))
        jac[:n, 0] = jac[n:, 2] = y_in[:n]
        jac[:n, 1] = jac[n:, 3] = y_in[n:]
        return jac


class _PhaseRotation(Layer):
    """Diagonal unit-modulus layers: ``y[n] = exp(j phase[n]) x[n]``."""

    isomorphic = True

    def phases(self, p, n):
        raise NotImplementedError

    def phase_derivative(self, p, n):
        """``d phase[n] / dp[k]``, shape ``(n, K)``."""
        raise NotImplementedError

    def identity_params(self):
        return np.zeros(self.n_params)

    def transfer(self, p, x):
        x = np.asarray(x, dtype=float)
        n = _half(x)
        rot = np.exp(1j * self.phases(self.check_params(p), n))
        return to_augmented(from_augmented(x) * rot)

    def compensate_t(self, p, x):
        x = np.asarray(x, dtype=float)
        n = _half(x)
        rot = np.exp(-1j * self.phases(self.check_params(p), n))
        return to_augmented(from_augmented(x) * rot)

    def transfer_matrix(self, p, n):
        return underline(np.diag(np.exp(1j * self.phases(self.check_params(p), n))))

    def reverse(self, p):
        return -self.check_params(p)

    def local_jacobian(self, p, y_in, y_out=None):
        p = self.check_params(p)
        if y_out is None:
            y_out = self.compensate(p, y_in)
        z = from_augmented(y_out)
        q = 1j * z[:, None] * self.phase_derivative(p, z.size)
        return to_augmented(q.T).T


@dataclass(frozen=True)
class CFO(_PhaseRotation):
    """Residual carrier offset, ``y[n] = x[n] exp(j w n)``; one parameter
    ``w`` in rad/sample."""

    name = "cfo"

    @property
    def n_params(self):
        return 1

    def phases(self, p, n):
        return p[0] * np.arange(n)

    def phase_derivative(self, p, n):
        return np.arange(n, dtype=float)[:, None]


@dataclass(frozen=True)
class QSPhaseNoise(_PhaseRotation):
    """Piecewise-constant phase over ``blocks`` consecutive blocks.

    Blocks hold ``N // blocks`` samples each; the last block also takes the
    remainder when ``N`` is not a multiple of ``blocks``. With
    ``blocks == N`` this is an arbitrary per-sample rotation, which is how
    a drawn phase-noise realization is pinned.
    """

    blocks: int = 1
    name = "qspn"

    def __post_init__(self):
        if self.blocks < 1:
            raise ConfigurationError(f"QS phase noise needs blocks >= 1, got {self.blocks}")

    @property
    def n_params(self):
        return self.blocks

    def block_index(self, n):
        if n < self.blocks:
            raise ShapeError(f"{self.blocks} phase blocks do not fit in {n} samples")
        return np.minimum(np.arange(n) // (n // self.blocks), self.blocks - 1)

    def phases(self, p, n):
        return p[self.block_index(n)]

    def phase_derivative(self, p, n):
        d = np.zeros((n, self.blocks))
        d[np.arange(n), self.block_index(n)] = 1.0
        return d


@dataclass(frozen=True)
class FIR(Layer):
    """Causal FIR channel, ``y[n] = sum_d h[d] x[n-d]`` with zero initial
    state. Parameters are ``[Re(h); Im(h)]``.

    Compensation inverts the lower-triangular Toeplitz matrix by recursive
    filtering (forward substitution, ``O(N taps)``). ``dense=True`` instead
    materialises and inverts the ``2N x 2N`` augmented matrix; it exists to
    measure the cost of the naive route.
    """

    taps: int = 1
    dense: bool = False
    name = "fir"

    def __post_init__(self):
        if self.taps < 1:
            raise ConfigurationError(f"FIR layer needs taps >= 1, got {self.taps}")

    @property
    def n_params(self):
        return 2 * self.taps

    def identity_params(self):
        p = np.zeros(2 * self.taps)
        p[0] = 1.0
        return p

    @staticmethod
    def params_from_taps(h):
        return to_augmented(np.asarray(h, dtype=complex))

    def taps_of(self, p):
        return from_augmented(self.check_params(p))

    def _pivot(self, h):
        if abs(h[0]) <= EPS_INV:
            raise SingularLayerError(f"FIR layer is singular (|h0|={abs(h[0]):.3g})", magnitude=abs(h[0]))

    def toeplitz(self, p, n):
        h = self.taps_of(p)
        col = np.zeros(n, dtype=complex)
        col[: min(n, h.size)] = h[:n]
        return toeplitz(col, np.zeros(n))

    def transfer_matrix(self, p, n):
        return underline(self.toeplitz(p, n))

    def compensation_matrix(self, p, n):
        self._pivot(self.taps_of(p))
        return inv(self.transfer_matrix(p, n), check_finite=False)

    def transfer(self, p, x):
        h = self.taps_of(p)
        return to_augmented(lfilter(h, [1.0], from_augmented(x), axis=-1))

    def compensate(self, p, x):
        h = self.taps_of(p)
        self._pivot(h)
        if self.dense:
            x = np.asarray(x, dtype=float)
            return x @ self.compensation_matrix(p, _half(x)).T
        return to_augmented(lfilter([1.0], h, from_augmented(x), axis=-1))

    def compensate_t(self, p, x):
        h = self.taps_of(p)
        self._pivot(h)
        if self.dense:
            x = np.asarray(x, dtype=float)
            return x @ self.compensation_matrix(p, _half(x))
        # M^{-H} is upper triangular: anti-causal recursion with conj(h)
        z = from_augmented(x)[..., ::-1]
        return to_augmented(lfilter([1.0], h.conj(), z, axis=-1)[..., ::-1])

    def mirror_params(self, alpha):
        return self.check_params(alpha).copy()

    def local_jacobian(self, p, y_in, y_out=None):
        # dM^{-1}/dp x = -M^{-1} (dM/dp) M^{-1} x; dM/dRe(h_d) is the d-sample
        # delay, which commutes with M^{-1}.
        h = self.taps_of(p)
        self._pivot(h)
        if y_out is None:
            y_out = self.compensate(p, y_in)
        w = lfilter([1.0], h, from_augmented(y_out))
        n = w.size
        q = np.zeros((n, 2 * self.taps), dtype=complex)
        for d in range(min(self.taps, n)):
            q[d:, d] = -w[: n - d]
        q[:, self.taps:] = 1j * q[:, : self.taps]
        return to_augmented(q.T).T


@dataclass(frozen=True)
class WienerPhaseNoise(Layer):
    """Random-walk phase, ``phi[n] = phi[n-1] + b[n]``, ``b ~ N(0, variance)``,
    starting from zero. Simulation only."""

    variance: float = 0.0
    name = "wiener"
    trainable = False

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigurationError("phase-noise variance must be >= 0")

    @property
    def n_params(self):
        return 0

    def draw(self, n, rng):
        return np.cumsum(rng.normal(0.0, np.sqrt(self.variance), size=n))

    def realize(self, n, rng):
        """A drawn realization as a pinned per-sample rotation layer."""
        return QSPhaseNoise(blocks=n), self.draw(n, rng)

    def apply(self, x, rng):
        n = _half(x)
        layer, phases = self.realize(n, rng)
        return layer.transfer(phases, x)


@dataclass(frozen=True)
class AWGN(Layer):
    """Circular white Gaussian noise with total variance ``variance`` per
    complex sample (``variance / 2`` per real coordinate)."""

    variance: float = 0.0
    name = "awgn"
    trainable = False

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigurationError("noise variance must be >= 0")

    @property
    def n_params(self):
        return 0

    def apply(self, x, rng):
        x = np.asarray(x, dtype=float)
        if self.variance == 0:
            return x.copy()
        return x + rng.normal(0.0, np.sqrt(self.variance / 2), size=x.shape)


def apply_awgn(variance, x, rng):
    return AWGN(variance).apply(x, rng)


def apply_wiener_pn(variance, x, rng):
    return WienerPhaseNoise(variance).apply(x, rng)


LAYER_KINDS = {
    "iq": IQImbalance,
    "cfo": CFO,
    "fir": FIR,
    "qspn": QSPhaseNoise,
    "wiener": WienerPhaseNoise,
    "awgn": AWGN,
}
