"""Diagnostics: free boundaries, rate fits, Harnack ratios, energies, extinction."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import zeta

from . import exact
from .domain import Field, lp_norm
from .kernels import gaussian_kernel
from .nonlocal_ops import _correction_coeffs, frac_constant


@dataclass(frozen=True)
class DiagnosticSeries:
    """Named scalar time series with strictly increasing times."""

    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("series entries must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_pairs(cls, name: str, pairs: Iterable[tuple[float, float]]) -> "DiagnosticSeries":
        pts = list(pairs)
        return cls(name, np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class GhpContext:
    """Data for global Harnack ratios on a bounded domain."""

    phi1: Field
    sigma: float
    m: float
    t_star: float

    def __post_init__(self) -> None:
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")


# --------------------------------------------------------------------------
# free boundary and rates
# --------------------------------------------------------------------------

def support_edge(f: Field, eps: float = 1e-8) -> float | None:
    """Right edge of ``{u > eps * max u}``, interpolated against the next node.

    Returns ``None`` when nothing exceeds the threshold.
    """
    u = f.values
    top = float(np.max(u))
    if top <= 0:
        return None
    thr = eps * top
    idx = np.nonzero(u > thr)[0]
    if idx.size == 0:
        return None
    i = int(idx[-1])
    x = f.grid.x
    if i == u.size - 1:
        return float(x[i])
    return float(x[i] + f.grid.dx * (u[i] - thr) / (u[i] - u[i + 1]))


def default_window(times: np.ndarray) -> tuple[float, float]:
    """Final half of the run in log time."""
    t = times[times > 0]
    lo, hi = float(t.min()), float(t.max())
    return math.sqrt(lo * hi), hi


def fit_power_law(series: DiagnosticSeries, window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Least-squares slope of ``log value`` against ``log time`` and its ``R^2``."""
    t, v = series.times, series.values
    lo, hi = window if window is not None else default_window(t)
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if sel.sum() < 10:
        raise ValueError(f"need at least 10 samples in the window, got {int(sel.sum())}")
    if np.any(v[sel] <= 0) or np.any(t[sel] <= 0):
        raise ValueError("power-law fit needs positive times and values")
    lx, ly = np.log(t[sel]), np.log(v[sel])
    slope, icpt = np.polyfit(lx, ly, 1)
    ss_res = float(np.sum((ly - (slope * lx + icpt)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def fit_exponential(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Slope of ``log value`` against ``t`` and ``R^2`` (for exponential fronts)."""
    t, v = np.asarray(times, float), np.asarray(values, float)
    if np.any(v <= 0):
        raise ValueError("exponential fit needs positive values")
    ly = np.log(v)
    slope, icpt = np.polyfit(t, ly, 1)
    ss_res = float(np.sum((ly - (slope * t + icpt)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return float(slope), (1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot)


def fit_linear(times: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope (front speeds)."""
    return float(np.polyfit(np.asarray(times, float), np.asarray(values, float), 1)[0])


# --------------------------------------------------------------------------
# asymptotic convergence
# --------------------------------------------------------------------------

def center_of_mass(f: Field) -> float:
    w = f.grid.weights
    return float(np.dot(f.x * f.values, w) / np.dot(f.values, w))


def clt_error(
    u: Field,
    t: float,
    attractor: Callable[[np.ndarray, float], np.ndarray],
    renorm_exp: float,
    mass: float | None = None,
    mass_tol: float = 1e-6,
) -> float:
    """``t^renorm_exp * max|u - attractor(., t)|``.

    ``mass`` is the attractor's mass; when omitted it is measured from the
    sampled attractor.  A relative mismatch above ``mass_tol`` is an error.
    """
    a = np.asarray(attractor(u.x, t), dtype=float)
    ref = float(np.dot(a, u.grid.weights)) if mass is None else float(mass)
    got = float(np.dot(u.values, u.grid.weights))
    if abs(got - ref) > mass_tol * max(abs(ref), 1e-300):
        raise ValueError(f"mass mismatch: field {got:.10g} vs attractor {ref:.10g}")
    return float(t**renorm_exp * np.max(np.abs(u.values - a)))


def pressure_error(
    u: Field,
    t: float,
    attractor: Callable[[np.ndarray, float], np.ndarray],
    m: float,
    N: int = 1,
) -> float:
    """``t^(N(m-1) lam) max|u^(m-1) - B^(m-1)|`` with ``lam = 1/(N(m-1)+2)``."""
    lam = 1.0 / (N * (m - 1.0) + 2.0)
    b = np.maximum(np.asarray(attractor(u.x, t), dtype=float), 0.0)
    uu = np.maximum(u.values, 0.0)
    return float(t ** (N * (m - 1.0) * lam) * np.max(np.abs(uu ** (m - 1.0) - b ** (m - 1.0))))


def aronson_benilan_min(v: Field, t: float) -> float:
    """``min_x t * v_xx`` over interior nodes (three-point second difference).

    The pressure has a kink at the free boundary, where the discrete second
    difference is positive; the one-sided bound concerns the minimum.
    """
    w = v.values
    d2 = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / v.grid.dx**2
    return float(t * d2.min())


# --------------------------------------------------------------------------
# bounded domains
# --------------------------------------------------------------------------

def sigma_exponent(s: float, m: float, gamma: float) -> float:
    """``min(1, 2 s m / (gamma (m - 1)))``."""
    if not m > 1:
        raise ValueError("sigma_exponent needs m > 1")
    return min(1.0, 2.0 * s * m / (gamma * (m - 1.0)))


def t_star(u0: Field, phi1: Field, m: float, kappa: float = 1.0) -> float:
    """``kappa * ||u0||_{L^1(phi1)}^(-(m-1))``."""
    w = float(np.dot(u0.values * phi1.values, u0.grid.weights))
    if not w > 0:
        raise ValueError("initial datum has zero weighted mass")
    return kappa * w ** (-(m - 1.0))


def interior_mask(phi1: Field, frac: float = 0.05) -> np.ndarray:
    return phi1.values > frac * float(np.max(phi1.values))


def ghp_ratio(u: Field, t: float, ctx: GhpContext, frac: float = 0.05) -> tuple[float, float]:
    """Extremes of ``u t^(1/(m-1)) / phi1^(sigma/m)`` on the interior mask."""
    if not t > 0:
        raise ValueError("ghp_ratio needs t > 0")
    mask = interior_mask(ctx.phi1, frac)
    r = u.values[mask] * t ** (1.0 / (ctx.m - 1.0)) / ctx.phi1.values[mask] ** (ctx.sigma / ctx.m)
    return float(r.min()), float(r.max())


def boundary_power(u: Field, phi1: Field, lo: float = 0.02, hi: float = 0.3) -> float:
    """Slope of ``log u`` against ``log phi1`` on the boundary layer ``lo < phi1/max < hi``.

    Both ends of the interval are used.  A slope near 1 means ``u`` behaves like
    ``phi1``; near ``sigma/m`` means ``u`` behaves like ``phi1^(sigma/m)``.
    """
    p = phi1.values / float(np.max(phi1.values))
    sel = (p > lo) & (p < hi) & (u.values > 0)
    if sel.sum() < 3:
        raise ValueError("boundary layer has too few resolved cells")
    return float(np.polyfit(np.log(phi1.values[sel]), np.log(u.values[sel]), 1)[0])


def separable_relative_error(u: Field, t: float, S: Field, m: float, mask: np.ndarray | None = None) -> float:
    """``max |u t^(1/(m-1)) / S - 1|`` over the interior (default ``S > 0.05 max S``)."""
    if mask is None:
        mask = S.values > 0.05 * float(np.max(S.values))
    r = u.values[mask] * t ** (1.0 / (m - 1.0)) / S.values[mask]
    return float(np.max(np.abs(r - 1.0)))


# --------------------------------------------------------------------------
# extinction and energies
# --------------------------------------------------------------------------

def extinction_detector(trajectory: Sequence[Field], rel: float = 1e-10) -> float | None:
    """First sampled time with ``max|u| < rel * max|u0|``, or ``None``."""
    fields = list(trajectory)
    if not fields:
        return None
    ref = lp_norm(fields[0], math.inf)
    if ref == 0:
        return fields[0].time
    for f in fields[1:]:
        if lp_norm(f, math.inf) < rel * ref:
            return f.time
    return None


def entropy(u: Field, floor: float = 1e-14) -> float:
    """``int u log u`` (cells with ``u <= floor`` contribute nothing)."""
    v = u.values
    sel = v > floor
    return float(np.dot(v[sel] * np.log(v[sel]), u.grid.weights[sel]))


def bilinear_form(v: Field, w: Field, sigma: float) -> float:
    """Discrete ``B(v, w) = (C/2) sum_x sum_y (v(x)-v(y)) (w(x)-w(y)) K(x-y) dx dy``.

    ``K`` is the periodised lattice kernel of order ``sigma`` and the
    singular cell carries the same zeta-function correction as the
    quadrature operator, so ``B(v, w) = <A v, w>`` for that operator.
    """
    g = v.grid
    if not g.is_periodic:
        raise ValueError("bilinear_form needs a periodic grid")
    if not 0 < sigma < 1:
        raise ValueError("order must lie in (0, 1)")
    n, h = g.n, g.dx
    a = 1.0 + 2.0 * sigma
    c = frac_constant(sigma)
    r = np.arange(1, n)
    kern = c * h ** (-2.0 * sigma) * n ** (-a) * (zeta(a, r / n) + zeta(a, 1.0 - r / n))
    x, y = v.values, w.values
    total = 0.0
    for k, kr in zip(r, kern):
        total += kr * float(np.dot(x - np.roll(x, -k), y - np.roll(y, -k)))
    total *= 0.5 * h
    # singular-cell correction c2 D2 + c4 D4, summed by parts
    c2, c4 = _correction_coeffs(h, sigma)
    dx_ = (np.roll(x, -1) - x) / h
    dy_ = (np.roll(y, -1) - y) / h
    d2x = (np.roll(x, -1) - 2 * x + np.roll(x, 1)) / h**2
    d2y = (np.roll(y, -1) - 2 * y + np.roll(y, 1)) / h**2
    total += -c2 * float(np.dot(dx_, dy_)) * h + c4 * float(np.dot(d2x, d2y)) * h
    return float(total)


def energy_monitor(u: Field, s: float) -> tuple[float, float]:
    """Entropy ``int u log u`` and its dissipation rate ``B_{1-s}(u, u) = int |grad H u|^2``."""
    return entropy(u), bilinear_form(u, u, 1.0 - s)


# --------------------------------------------------------------------------
# closed-form residual suite
# --------------------------------------------------------------------------

def _d2(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / h**2


def _dt(fn: Callable[[float], np.ndarray], t: float, h: float) -> np.ndarray:
    return (fn(t + h) - fn(t - h)) / (2.0 * h)


def _res_pme(dx: float) -> float:
    m, t = 2.0, 1.0
    edge = exact.pme_support_radius(t, m)
    x = np.arange(-0.5 * edge, 0.5 * edge + 1e-12, dx)
    ut = _dt(lambda tt: exact.pme_barenblatt(x, tt, m), t, dx)
    lap = _d2(lambda xx: exact.pme_barenblatt(xx, t, m) ** m, x, dx)
    return float(np.max(np.abs(ut - lap)))


def _res_fde(dx: float) -> float:
    m, t = 0.5, 1.0
    x = np.arange(-5.0, 5.0 + 1e-12, dx)
    ut = _dt(lambda tt: exact.fde_barenblatt(x, tt, m), t, dx)
    lap = _d2(lambda xx: exact.fde_barenblatt(xx, t, m) ** m, x, dx)
    return float(np.max(np.abs(ut - lap)))


def _res_logdiff(dx: float) -> float:
    a, T, t = 1.0, 2.0, 0.5
    r = np.arange(0.5, 3.0 + 1e-12, dx)

    def lg(rr):
        return np.log(exact.logdiff_extinction(rr, t, a, T))

    ut = _dt(lambda tt: exact.logdiff_extinction(r, tt, a, T), t, dx)
    flux_hi = (r + 0.5 * dx) * (lg(r + dx) - lg(r))
    flux_lo = (r - 0.5 * dx) * (lg(r) - lg(r - dx))
    lap = (flux_hi - flux_lo) / (r * dx**2)
    return float(np.max(np.abs(ut - lap)))


def _res_gaussian(dx: float) -> float:
    t = 1.0
    x = np.arange(-6.0, 6.0 + 1e-12, dx)
    ut = _dt(lambda tt: gaussian_kernel(x, tt), t, dx)
    lap = _d2(lambda xx: gaussian_kernel(xx, t), x, dx)
    return float(np.max(np.abs(ut - lap)))


def _res_cauchy(dx: float) -> float:
    # the s = 1/2 kernel is the Poisson kernel, harmonic in (x, t)
    t = 1.0
    x = np.arange(-6.0, 6.0 + 1e-12, dx)
    utt = (exact.cauchy_kernel(x, t + dx) - 2.0 * exact.cauchy_kernel(x, t) + exact.cauchy_kernel(x, t - dx)) / dx**2
    uxx = _d2(lambda xx: exact.cauchy_kernel(xx, t), x, dx)
    return float(np.max(np.abs(utt + uxx)))


@functools.lru_cache(maxsize=4)
def _wave(c: float) -> "exact.KppWave":
    return exact.kpp_wave(c)


def _res_kpp(dx: float) -> float:
    c = 2.5
    w = _wave(c)
    x = np.arange(-10.0, 10.0 + 1e-12, dx)
    phi = w(x)
    d1 = (w(x + dx) - w(x - dx)) / (2.0 * dx)
    return float(np.max(np.abs(-_d2(w, x, dx) + c * d1 - exact.logistic(phi))))


RESIDUALS: dict[str, Callable[[float], float]] = {
    "pme-barenblatt": _res_pme,
    "fde-barenblatt": _res_fde,
    "logdiff-ball": _res_logdiff,
    "gaussian": _res_gaussian,
    "cauchy": _res_cauchy,
    "kpp-wave": _res_kpp,
}


def residual(family: str, dx: float) -> float:
    """Max centred-difference PDE residual of a closed-form solution (``dt = dx``)."""
    try:
        fn = RESIDUALS[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(RESIDUALS)}") from None
    return fn(dx)


def residual_ratio(family: str, dx: float = 0.1) -> float:
    """``residual(dx) / residual(dx / 2)``; about 4 for a second-order consistent pair."""
    return residual(family, dx) / residual(family, 0.5 * dx)


def logdiff_mass_loss_rate(a: float = 1.0, T: float = 2.0, t1: float = 0.25, t2: float = 1.25) -> float:
    """``-(M(t2) - M(t1)) / (t2 - t1)`` with ``M`` the planar mass, by quadrature."""

    def planar_mass(t: float) -> float:
        val, _ = quad(lambda r: 2.0 * math.pi * r * exact.logdiff_extinction(r, t, a, T), 0.0, math.inf,
                      epsabs=0.0, epsrel=1e-12, limit=200)
        return val

    return -(planar_mass(t2) - planar_mass(t1)) / (t2 - t1)
