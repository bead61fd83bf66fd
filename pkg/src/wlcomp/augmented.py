"""Complex <-> augmented-real algebra and pilot allocation.

An augmented vector stacks all real parts, then all imaginary parts:
``[Re(v); Im(v)]``. A complex matrix ``M`` acts on augmented vectors
through ``underline(M) = [[Re M, -Im M], [Im M, Re M]]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import ConfigurationError, ShapeError


def to_augmented(v) -> np.ndarray:
    """``[Re(v); Im(v)]`` along the last axis."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1).astype(float, copy=False)


def from_augmented(x) -> np.ndarray:
    """Inverse of :func:`to_augmented`, i.e. ``[I_N, jI_N] x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ShapeError(f"augmented length must be even, got {x.shape[-1]}")
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def underline(m) -> np.ndarray:
    """Real 2N x 2N matrix acting on augmented vectors like ``m`` acts on
    complex ones."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def is_strictly_linear(f, atol=1e-12) -> bool:
    """True when the augmented matrix ``f`` has the block structure of
    :func:`underline`."""
    f = np.asarray(f)
    n = f.shape[0] // 2
    a, b = f[:n, :n], f[:n, n:]
    c, d = f[n:, :n], f[n:, n:]
    return bool(np.allclose(a, d, atol=atol) and np.allclose(b, -c, atol=atol))


@dataclass(frozen=True)
class AllocationMatrix:
    """Binary N_p x N selection matrix, stored by its pilot indices."""

    pilot_indices: tuple
    n: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.pilot_indices)
        if any(i < 0 or i >= self.n for i in idx):
            raise ConfigurationError(f"pilot index out of range [0, {self.n})")
        if len(set(idx)) != len(idx):
            raise ConfigurationError("duplicate pilot indices")
        object.__setattr__(self, "pilot_indices", tuple(sorted(idx)))

    @property
    def n_pilots(self) -> int:
        return len(self.pilot_indices)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.pilot_indices, dtype=int)

    @property
    def complement_indices(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.indices] = False
        return np.flatnonzero(mask)

    def augmented_indices(self, complement=False) -> np.ndarray:
        """Positions selected by ``I_2 (x) P`` in an augmented vector."""
        idx = self.complement_indices if complement else self.indices
        return np.concatenate([idx, idx + self.n])

    def dense(self) -> np.ndarray:
        """The N_p x N matrix itself (tests and small problems only)."""
        p = np.zeros((self.n_pilots, self.n))
        p[np.arange(self.n_pilots), self.indices] = 1.0
        return p

    def complement(self) -> "AllocationMatrix":
        return AllocationMatrix(tuple(self.complement_indices), self.n)

    def truncated(self, n_t: int) -> "AllocationMatrix":
        """The same pilots inside a block shortened to its first ``n_t``
        samples."""
        if any(i >= n_t for i in self.pilot_indices):
            raise ConfigurationError(
                f"truncation to {n_t} samples would drop pilots"
            )
        return AllocationMatrix(self.pilot_indices, n_t)


def full_allocation(n: int) -> AllocationMatrix:
    return AllocationMatrix(tuple(range(n)), n)


def _periodic(n, n_p, start=0, stop=None):
    stop = n if stop is None else stop
    span = stop - start
    idx = [start + int(round(k * span / n_p)) for k in range(n_p)]
    if len(set(idx)) != n_p:
        raise ConfigurationError(f"cannot place {n_p} periodic pilots in {span} samples")
    return idx


def make_allocation(strategy: str, n: int, n_p: int, preamble_fraction=0.5) -> AllocationMatrix:
    """Build a pilot pattern.

    Parameters
    ----------
    strategy : {"preamble", "periodic", "mixed"}
        ``preamble`` puts the pilots at indices ``0..n_p-1``; ``periodic``
        spaces them evenly (``round(k*n/n_p)``), starting at index 0;
        ``mixed`` sends ``ceil(preamble_fraction*n_p)`` preamble pilots and
        spreads the rest evenly over the data region that follows.
    n, n_p : int
        Block length and number of pilots, ``1 <= n_p <= n``.
    """
    if not 1 <= n_p <= n:
        raise ConfigurationError(f"need 1 <= n_p <= n, got n_p={n_p}, n={n}")
    strategy = strategy.lower()
    if strategy == "preamble":
        idx = list(range(n_p))
    elif strategy in ("periodic", "pilot", "pilots"):
        idx = _periodic(n, n_p)
    elif strategy == "mixed":
        n_pre = min(n_p, ceil(preamble_fraction * n_p))
        rest = n_p - n_pre
        idx = list(range(n_pre))
        if rest:
            idx += _periodic(n, rest, start=n_pre)
    else:
        raise ConfigurationError(f"unknown allocation strategy {strategy!r}")
    return AllocationMatrix(tuple(idx), n)


def _check(a: AllocationMatrix, v):
    v = np.asarray(v)
    if v.shape[-1] != 2 * a.n:
        raise ShapeError(f"augmented length {v.shape[-1]} != 2*{a.n}")
    return v


def extract(a: AllocationMatrix, v) -> np.ndarray:
    """``(I_2 (x) P) v`` by index gather (last axis)."""
    return _check(a, v)[..., a.augmented_indices()]


def extract_complement(a: AllocationMatrix, v) -> np.ndarray:
    """Same as :func:`extract` for the data (non-pilot) positions."""
    return _check(a, v)[..., a.augmented_indices(complement=True)]
