"""Porous medium equation with fractional pressure, ``u_t = (u p_x)_x``, ``p = (-Delta)^(-s) u``.

The scheme is explicit, conservative and first-order upwind on a periodic
grid.  Face velocities ``V_{i+1/2} = -(p_{i+1} - p_i)/dx`` carry the face
flux ``V+ u_i + V- u_{i+1}``, so mass is conserved to round-off and
nonnegative data stay nonnegative under the CFL limit.

Two limits bound the internal substep:

* transport: ``dt <= safety * dx / max|V|``;
* the pressure term behaves like diffusion of order ``2 - 2s`` with
  coefficient ``u``, so ``dt <= safety / (max|u| (pi/dx)^(2-2s))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ..domain import Field, clip_negative
from .nonlinearity import StepControl
from .trajectory import Monitor, Trajectory, evolve


@dataclass(frozen=True)
class PmfpInfo:
    substeps: int
    clipped: float = 0.0


def _riesz_mult(grid, s: float) -> np.ndarray:
    xi = grid.wavenumbers()
    mult = np.zeros_like(xi)
    mult[1:] = xi[1:] ** (-2.0 * s)
    return mult


def pmfp_pressure(u: Field, s: float) -> Field:
    """``p = (-Delta)^(-s) (u - mean u)``."""
    mult = _riesz_mult(u.grid, s)
    return u.with_values(np.fft.irfft(np.fft.rfft(u.values) * mult, u.grid.n))


def pmfp_advance(
    u_prev: Field,
    dt_total: float,
    s: float,
    cfl_safety: float = 0.45,
    signed: bool = False,
) -> tuple[Field, PmfpInfo]:
    """Advance by ``dt_total`` with as many CFL-limited substeps as needed."""
    g = u_prev.grid
    if not g.is_periodic:
        raise ValueError("PMFP needs a periodic grid")
    if not 0.0 < s <= 1.0:
        raise ValueError("PMFP order must lie in (0, 1]")
    if not signed and np.any(u_prev.values < 0):
        raise ValueError("PMFP density must be nonnegative (use signed=True for signed data)")
    n, dx = g.n, g.dx
    mult = _riesz_mult(g, s)
    diff_rate = (math.pi / dx) ** (2.0 - 2.0 * s)
    u = u_prev.values.copy()
    t, k = 0.0, 0
    while t < dt_total * (1.0 - 1e-14):
        p = np.fft.irfft(np.fft.rfft(u) * mult, n)
        v = -(np.roll(p, -1) - p) / dx  # face i+1/2
        vmax = float(np.max(np.abs(v)))
        umax = float(np.max(np.abs(u)))
        lim = dt_total - t
        if vmax > 0:
            lim = min(lim, cfl_safety * dx / vmax)
        if umax > 0:
            lim = min(lim, cfl_safety / (umax * diff_rate))
        flux = np.where(v > 0, v * u, v * np.roll(u, -1))
        if not np.all(np.isfinite(flux)):
            raise FloatingPointError("PMFP flux is not finite")
        u = u - lim / dx * (flux - np.roll(flux, 1))
        t += lim
        k += 1
    clipped = 0.0
    if not signed:
        u, clipped = clip_negative(u)
        clipped *= dx
    return Field(g, u, u_prev.time + dt_total), PmfpInfo(k, clipped)


def pmfp_step(u_prev: Field, control: StepControl, s: float, signed: bool = False) -> Field:
    """Advance the pressure model by ``control.h`` (internally substepped)."""
    return pmfp_advance(u_prev, control.h, s, control.cfl_safety, signed)[0]


def run_pmfp(
    u0: Field,
    t_end: float,
    control: StepControl,
    s: float,
    outputs: Iterable[float] = (),
    monitors: Mapping[str, Monitor] | None = None,
    record_every: int = 0,
    signed: bool = False,
) -> Trajectory:
    def step(u, hh):
        return pmfp_advance(u, hh, s, control.cfl_safety, signed)

    return evolve(u0, t_end, control.h, step, outputs, monitors, record_every)
