"""Finite symbol alphabets and nearest-point projection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

_SQUARE_ORDERS = (4, 16, 64, 256)


@dataclass(frozen=True, eq=False)
class Constellation:
    """A unit-power complex alphabet.

    Parameters
    ----------
    points : array_like of complex
        Alphabet. Rescaled at construction so that ``mean(|s|^2) == 1``.
    square : bool
        True when ``points`` is the Cartesian product of ``levels`` with
        itself. Detection then reduces to independent per-coordinate
        projection; otherwise projection is done in the complex plane.
    name : str
        Identifier used in scenario files (``"qam16"``, ...).
    """

    points: np.ndarray
    square: bool = False
    name: str = "custom"
    levels: np.ndarray = field(init=False, repr=False)
    _mids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size == 0:
            raise ConfigurationError("empty constellation")
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))

        levels = np.unique(np.concatenate([pts.real, pts.imag]).round(12))
        if self.square:
            grid = (levels[:, None] + 1j * levels[None, :]).ravel()
            if grid.size != pts.size or not np.allclose(
                np.sort_complex(grid), np.sort_complex(pts), atol=1e-9
            ):
                raise ConfigurationError("points are not a square grid of levels")
            # rebuild points from the levels so per-coordinate decisions are
            # bit-identical to alphabet members
            i_re = np.argmin(np.abs(pts.real[:, None] - levels), axis=1)
            i_im = np.argmin(np.abs(pts.imag[:, None] - levels), axis=1)
            levels = levels / np.sqrt(np.mean(levels[i_re] ** 2 + levels[i_im] ** 2))
            pts = levels[i_re] + 1j * levels[i_im]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        mids = 0.5 * (levels[1:] + levels[:-1])
        object.__setattr__(self, "_mids", mids)

    @property
    def order(self) -> int:
        return int(self.points.size)

    def project_coordinate(self, value):
        """Nearest element of ``levels`` for each real input.

        A value exactly on a midpoint goes to the smaller level. Works on
        scalars and arrays.
        """
        idx = np.searchsorted(self._mids, value, side="left")
        out = self.levels[idx]
        return out if np.ndim(value) else float(out)

    def project(self, z):
        """Nearest alphabet point for each complex input."""
        z = np.asarray(z, dtype=complex)
        if self.square:
            return self.project_coordinate(z.real) + 1j * self.project_coordinate(z.imag)
        d2 = np.abs(z[..., None] - self.points) ** 2
        return self.points[np.argmin(d2, axis=-1)]

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` i.i.d. uniform symbols."""
        if n < 1:
            raise ConfigurationError(f"need n >= 1 symbols, got {n}")
        return self.points[rng.integers(0, self.order, size=n)]


def make_square_qam(order: int) -> Constellation:
    """Unit-power square QAM; ``order`` in {4, 16, 64, 256}."""
    if order not in _SQUARE_ORDERS:
        raise ConfigurationError(
            f"unsupported QAM order {order}; expected one of {_SQUARE_ORDERS}"
        )
    m = int(round(np.sqrt(order)))
    lv = np.arange(-(m - 1), m, 2, dtype=float)
    pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    return Constellation(pts, square=True, name=f"qam{order}")


def make_psk(order: int, offset: float = 0.0) -> Constellation:
    """Unit-circle PSK alphabet (planar projection)."""
    if order < 2:
        raise ConfigurationError(f"PSK order must be >= 2, got {order}")
    k = np.arange(order)
    return Constellation(np.exp(1j * (2 * np.pi * k / order + offset)), name=f"psk{order}")


def draw_symbols(constellation: Constellation, n: int, rng) -> np.ndarray:
    return constellation.draw(n, np.random.default_rng(rng))


def project_coordinate(value, constellation: Constellation):
    return constellation.project_coordinate(value)


def get_constellation(name: str) -> Constellation:
    """Look up a named alphabet: ``qam4``, ``qam16``, ``qam64``, ``qam256``,
    ``psk<M>``."""
    key = name.lower().strip()
    if key.startswith("qam"):
        try:
            return make_square_qam(int(key[3:]))
        except ValueError:
            pass
    elif key.startswith("psk"):
        try:
            return make_psk(int(key[3:]))
        except ValueError:
            pass
    raise ConfigurationError(f"unknown constellation {name!r}")
