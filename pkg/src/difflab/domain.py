"""Uniform 1D meshes, sampled fields and grid quadrature.

Every other module works on a :class:`Grid1D` and exchanges state as a
:class:`Field`.  Both are frozen dataclasses, so a field handed to a solver is
never modified in place.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class Geometry(str, enum.Enum):
    """How the mesh relates to the real line."""

    PERIODIC = "Periodic"
    DIRICHLET_EXTERIOR = "DirichletExterior"
    TRUNCATED_LINE = "TruncatedLine"


class DensityError(ValueError):
    """A density field went negative beyond round-off."""


class EdgeDecayWarning(UserWarning):
    """A field on a truncated box does not decay at the box edges."""


# Relative edge-decay budget for whole-line formulas used on finite boxes.
EDGE_DECAY_BUDGET = 1e-6
# Negative values smaller than TOL_NEG_REL * max|u| are treated as round-off.
TOL_NEG_REL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh on ``[left, left + length]``.

    Node placement depends on the geometry:

    * ``Periodic``: ``x_j = left + j*dx``, with ``x_n`` identified with ``x_0``.
    * ``DirichletExterior``: cell centres ``x_j = left + (j + 1/2)*dx``; the
      state vanishes outside the interval.
    * ``TruncatedLine``: ``x_j = left + j*dx`` for ``j = 0..n-1``; a window
      of the real line on which the state is assumed to have decayed.
    """

    left: float
    length: float
    n: int
    geometry: Geometry = Geometry.PERIODIC

    def __post_init__(self) -> None:
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        if not (math.isfinite(self.left) and math.isfinite(self.length)):
            raise ValueError("grid bounds must be finite")
        if self.length <= 0:
            raise ValueError("grid length must be positive")
        if int(self.n) != self.n or self.n < 8:
            raise ValueError("grid needs at least 8 points")
        object.__setattr__(self, "n", int(self.n))
        if self.geometry is Geometry.PERIODIC and self.n & (self.n - 1):
            raise ValueError("periodic grids need a power-of-two point count")

    @classmethod
    def centered(cls, length: float, n: int, geometry: Geometry = Geometry.PERIODIC) -> "Grid1D":
        """Grid on ``[-length/2, length/2]``."""
        return cls(-0.5 * length, length, n, geometry)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def x(self) -> np.ndarray:
        j = np.arange(self.n, dtype=float)
        if self.geometry is Geometry.DIRICHLET_EXTERIOR:
            j += 0.5
        return self.left + j * self.dx

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights: ``dx`` everywhere, halved at truncated ends."""
        w = np.full(self.n, self.dx)
        if self.geometry is Geometry.TRUNCATED_LINE:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    @property
    def is_periodic(self) -> bool:
        return self.geometry is Geometry.PERIODIC

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the real FFT on a periodic box."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)


@dataclass(frozen=True)
class Field:
    """Samples of a scalar state on a grid at a given time."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if not (math.isfinite(self.time) and self.time >= 0):
            raise ValueError("field time must be a nonnegative real")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    def __add__(self, other: "Field") -> "Field":
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other: "Field") -> "Field":
        return self.with_values(self.values - _vals(other))

    def __mul__(self, a: float) -> "Field":
        return self.with_values(a * self.values)

    __rmul__ = __mul__


def _vals(f: Field | np.ndarray) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def mass(f: Field) -> float:
    """Total mass ``sum(u * w)`` with the grid quadrature weights."""
    return float(np.dot(f.values, f.grid.weights))


def lp_norm(f: Field, p: float = 2.0) -> float:
    """Discrete ``L^p`` norm with ``dx`` weights; ``p = inf`` gives the max."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p >= 1:
        raise ValueError("lp_norm needs p >= 1")
    a = np.abs(f.values)
    scale = a.max()
    if scale == 0.0:
        return 0.0
    return float(scale * np.dot((a / scale) ** p, f.grid.weights) ** (1.0 / p))


def inner(f: Field, g: Field) -> float:
    """Weighted inner product ``sum(f * g * w)``."""
    return float(np.dot(f.values * g.values, f.grid.weights))


def sample(g: Grid1D, fn: Callable[[np.ndarray], np.ndarray], t: float = 0.0) -> Field:
    """Evaluate ``fn`` at the grid nodes."""
    vals = np.broadcast_to(np.asarray(fn(g.x), dtype=float), (g.n,))
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function produced non-finite values")
    return Field(g, vals, t)


def edge_decay_ratio(f: Field) -> float:
    """``max(|u_0|, |u_{n-1}|) / max|u|``; 0 for the zero field."""
    top = np.max(np.abs(f.values))
    if top == 0.0:
        return 0.0
    return float(max(abs(f.values[0]), abs(f.values[-1])) / top)


def check_edge_decay(f: Field, budget: float = EDGE_DECAY_BUDGET) -> bool:
    """Warn (and return False) when a truncated-line field has not decayed."""
    if f.grid.geometry is not Geometry.TRUNCATED_LINE:
        return True
    r = edge_decay_ratio(f)
    if r > budget:
        warnings.warn(
            f"field at box edge is {r:.2e} of its maximum (budget {budget:.0e})",
            EdgeDecayWarning,
            stacklevel=2,
        )
        return False
    return True


def clip_negative(values: np.ndarray, rel_tol: float = TOL_NEG_REL) -> tuple[np.ndarray, float]:
    """Zero out round-off negatives of a density.

    Returns the clipped array and the (nonnegative) mass-like sum of the
    removed values, in units of the raw samples.  Raises
    :class:`DensityError` if any value lies below ``-rel_tol * max|u|``.
    """
    v = np.asarray(values, dtype=float)
    top = np.max(np.abs(v)) if v.size else 0.0
    tol = rel_tol * top
    if np.any(v < -tol):
        raise DensityError(f"density dropped to {v.min():.3e} (tolerance {tol:.1e})")
    neg = v < 0
    if not np.any(neg):
        return v, 0.0
    out = v.copy()
    removed = float(-out[neg].sum())
    out[neg] = 0.0
    return out, removed
