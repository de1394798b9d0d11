"""Closed-form and semi-analytic reference solutions.

All profiles are written for the equations

* PME / FDE: ``u_t = Delta(u^m)`` (``m > 1`` or ``m_c < m < 1``);
* log-diffusion: ``u_t = Delta log u`` (the ``m -> 0`` limit of
  ``u_t = Delta(u^m / m)``);
* PMFP: ``u_t = div(u grad p)``, ``p = (-Delta)^(-s) u``;
* KPP travelling waves: ``-phi'' + c phi' = f(phi)``.

Mass constants are calibrated by numerical quadrature of the profile; the
Beta-function closed forms are used only as test oracles.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .domain import Grid1D


class Family(str, enum.Enum):
    PME = "PME"
    FDE = "FDE"
    PMFP = "PMFP"
    FHE = "FHE"


@dataclass(frozen=True)
class SelfSimilarSpec:
    """Exponents of ``u = t^(-alpha) F(x t^(-beta))``."""

    alpha: float
    beta: float
    family: Family
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def _sphere_area(N: int) -> float:
    return 2.0 * math.pi ** (0.5 * N) / gamma_fn(0.5 * N)


def _radial_mass(profile: Callable[[float], float], N: int, upper: float = math.inf) -> float:
    """``int_{R^N} F(|xi|) dxi`` for a radial profile."""
    val, _ = quad(lambda r: profile(r) * r ** (N - 1), 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=200)
    return _sphere_area(N) * val


# --------------------------------------------------------------------------
# porous medium
# --------------------------------------------------------------------------

def pme_exponents(m: float, N: int = 1) -> tuple[float, float]:
    """``(alpha, beta)`` of the PME Barenblatt solution."""
    if not m > 1:
        raise ValueError("pme_exponents needs m > 1 (use fde_exponents for m < 1)")
    beta = 1.0 / (N * (m - 1.0) + 2.0)
    return N * beta, beta


def pme_spec(m: float, N: int = 1, M: float = 1.0) -> SelfSimilarSpec:
    a, b = pme_exponents(m, N)
    return SelfSimilarSpec(a, b, Family.PME, {"m": m, "N": N, "M": M})


def pme_k(m: float, N: int = 1) -> float:
    """Quadratic coefficient ``k = (m - 1) beta / (2m)`` of the profile."""
    return (m - 1.0) * pme_exponents(m, N)[1] / (2.0 * m)


def pme_constant(m: float, N: int = 1, M: float = 1.0) -> float:
    """Constant ``C`` giving the Barenblatt solution mass ``M``."""
    k, p = pme_k(m, N), 1.0 / (m - 1.0)
    # mass(C) = C^(p + N/2) * mass(1), with mass(1) from quadrature
    unit = _radial_mass(lambda r: max(1.0 - k * r * r, 0.0) ** p, N, upper=1.0 / math.sqrt(k))
    return (M / unit) ** (1.0 / (p + 0.5 * N))


def pme_barenblatt(x, t: float, m: float, N: int = 1, M: float = 1.0):
    """PME Barenblatt solution ``t^-alpha (C - k (x t^-beta)^2)_+^(1/(m-1))``."""
    if not t > 0:
        raise ValueError("pme_barenblatt needs t > 0")
    alpha, beta = pme_exponents(m, N)
    c, k = pme_constant(m, N, M), pme_k(m, N)
    xi = np.asarray(x, dtype=float) * t ** (-beta)
    out = t ** (-alpha) * np.maximum(c - k * xi**2, 0.0) ** (1.0 / (m - 1.0))
    return float(out) if out.ndim == 0 else out


def pme_support_radius(t: float, m: float, N: int = 1, M: float = 1.0) -> float:
    """Free-boundary position ``(C/k)^(1/2) t^beta``."""
    return math.sqrt(pme_constant(m, N, M) / pme_k(m, N)) * t ** pme_exponents(m, N)[1]


def pme_pressure(u, m: float):
    """Pressure ``v = m/(m-1) u^(m-1)``."""
    return m / (m - 1.0) * np.maximum(np.asarray(u, dtype=float), 0.0) ** (m - 1.0)


# --------------------------------------------------------------------------
# fast diffusion and log-diffusion
# --------------------------------------------------------------------------

def critical_exponent(N: int = 1, s: float = 1.0) -> float:
    """``m_c = (N - 2s)/N`` (``s = 1`` for the local equation)."""
    return (N - 2.0 * s) / N


def fde_exponents(m: float, N: int = 1) -> tuple[float, float]:
    if not critical_exponent(N) < m < 1:
        raise ValueError(f"fde needs m_c = {critical_exponent(N):g} < m < 1")
    beta = 1.0 / (2.0 - N * (1.0 - m))
    return N * beta, beta


def fde_spec(m: float, N: int = 1, M: float = 1.0) -> SelfSimilarSpec:
    a, b = fde_exponents(m, N)
    return SelfSimilarSpec(a, b, Family.FDE, {"m": m, "N": N, "M": M})


def fde_k(m: float, N: int = 1) -> float:
    """``(1 - m) beta / (2m)``; for ``m = 0`` the log-diffusion value ``beta / 2``."""
    beta = fde_exponents(m, N)[1]
    return 0.5 * beta if m == 0 else (1.0 - m) * beta / (2.0 * m)


def fde_constant(m: float, N: int = 1, M: float = 1.0) -> float:
    k, q = fde_k(m, N), 1.0 / (1.0 - m)
    unit = _radial_mass(lambda r: (1.0 + k * r * r) ** (-q), N)
    # mass(C) = C^(N/2 - q) * mass(1)
    return (M / unit) ** (1.0 / (0.5 * N - q))


def fde_barenblatt(x, t: float, m: float, N: int = 1, M: float = 1.0):
    """Good-range FDE Barenblatt ``t^-alpha (C + k (x t^-beta)^2)^(-1/(1-m))``.

    ``m = 0`` (allowed when ``m_c < 0``) gives the source solution of
    ``u_t = Delta log u``.
    """
    if not t > 0:
        raise ValueError("fde_barenblatt needs t > 0")
    alpha, beta = fde_exponents(m, N)
    c, k = fde_constant(m, N, M), fde_k(m, N)
    xi = np.asarray(x, dtype=float) * t ** (-beta)
    out = t ** (-alpha) * (c + k * xi**2) ** (-1.0 / (1.0 - m))
    return float(out) if out.ndim == 0 else out


def logdiff_extinction(r, t: float, a: float, T: float):
    """Extinction solution of ``u_t = Delta log u`` in the plane.

    ``u = 8 a (T - t) / (a + r^2)^2``.  Its mass is ``8 pi (T - t)``, so it
    loses mass at rate ``8 pi`` and vanishes at ``t = T``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not 0 <= t < T:
        raise ValueError("logdiff_extinction needs 0 <= t < T")
    r = np.asarray(r, dtype=float)
    out = 8.0 * a * (T - t) / (a + r**2) ** 2
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# fractional heat / pressure model
# --------------------------------------------------------------------------

def fhe_spec(s: float, N: int = 1) -> SelfSimilarSpec:
    return SelfSimilarSpec(N / (2.0 * s), 1.0 / (2.0 * s), Family.FHE, {"s": s, "N": N})


def cauchy_kernel(x, t: float):
    """``s = 1/2`` heat kernel ``t / (pi (t^2 + x^2))``."""
    x = np.asarray(x, dtype=float)
    out = t / (math.pi * (t * t + x**2))
    return float(out) if out.ndim == 0 else out


def pmfp_exponents(s: float, N: int = 1) -> tuple[float, float]:
    if not 0 < s < 1:
        raise ValueError("pmfp needs 0 < s < 1")
    beta = 1.0 / (N + 2.0 - 2.0 * s)
    return N * beta, beta


def pmfp_spec(s: float, N: int = 1, M: float = 1.0) -> SelfSimilarSpec:
    a, b = pmfp_exponents(s, N)
    return SelfSimilarSpec(a, b, Family.PMFP, {"s": s, "N": N, "M": M})


def frac_torsion_constant(sigma: float, N: int = 1) -> float:
    """``(-Delta)^sigma (1 - |x|^2)_+^sigma = kappa`` on the unit ball."""
    return 4.0**sigma * gamma_fn(1.0 + sigma) * gamma_fn(0.5 * N + sigma) / gamma_fn(0.5 * N)


def pmfp_constants(s: float, N: int = 1, M: float = 1.0) -> tuple[float, float]:
    """``(A, B)`` of the profile ``(A - B xi^2)_+^(1-s)``.

    Self-similarity forces the pressure to be ``const - beta xi^2 / 2`` on the
    support, i.e. ``(-Delta)^(1-s) F = beta N`` there.  With the torsion
    identity this fixes ``B``; ``A`` then sets the mass.
    """
    _, beta = pmfp_exponents(s, N)
    sigma = 1.0 - s
    B = (N * beta / frac_torsion_constant(sigma, N)) ** (1.0 / sigma)
    unit = _radial_mass(lambda r: max(1.0 - B * r * r, 0.0) ** sigma, N, upper=1.0 / math.sqrt(B))
    # mass(A) = A^(sigma + N/2) * mass(1) after rescaling xi -> sqrt(A) xi
    A = (M / unit) ** (1.0 / (sigma + 0.5 * N))
    return A, B


def pmfp_profile(x, t: float, s: float, N: int = 1, M: float = 1.0):
    """PMFP self-similar solution ``t^-alpha (A - B (x t^-beta)^2)_+^(1-s)``."""
    if not t > 0:
        raise ValueError("pmfp_profile needs t > 0")
    alpha, beta = pmfp_exponents(s, N)
    A, B = pmfp_constants(s, N, M)
    xi = np.asarray(x, dtype=float) * t ** (-beta)
    out = t ** (-alpha) * np.maximum(A - B * xi**2, 0.0) ** (1.0 - s)
    return float(out) if out.ndim == 0 else out


def pmfp_support_radius(t: float, s: float, N: int = 1, M: float = 1.0) -> float:
    A, B = pmfp_constants(s, N, M)
    return math.sqrt(A / B) * t ** pmfp_exponents(s, N)[1]


# --------------------------------------------------------------------------
# KPP travelling waves
# --------------------------------------------------------------------------

def logistic(u):
    return u * (1.0 - u)


class NoMonotoneWave(ValueError):
    """No monotone travelling wave exists at the requested speed."""


@dataclass(frozen=True)
class KppWave:
    """Monotone front ``phi(x)`` with ``phi(-inf) = 0``, ``phi(+inf) = 1``, ``phi(0) = 1/2``.

    Inside ``[x_lo, x_hi]`` the profile comes from the ODE solution; outside
    it follows the linearised exponential branches it was matched to.
    """

    c: float
    c_star: float
    x_lo: float
    x_hi: float
    _sol: Callable = field(repr=False)
    _left: tuple = field(repr=False)
    _right: tuple = field(repr=False)

    def __call__(self, x) -> np.ndarray:
        return self.state(x)[0]

    def derivative(self, x) -> np.ndarray:
        return self.state(x)[1]

    def state(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((2, x.size))
        mid = (x >= self.x_lo) & (x <= self.x_hi)
        if np.any(mid):
            out[:, mid] = self._sol(x[mid])
        lo = x < self.x_lo
        if np.any(lo):
            # phi ~ a e^{mu x} + b x e^{mu x} branch (general 2D node)
            out[:, lo] = _node_branch(self._left, x[lo] - self.x_lo)
        hi = x > self.x_hi
        if np.any(hi):
            eps, mu = self._right
            d = np.exp(mu * (x[hi] - self.x_hi))
            out[0, hi] = 1.0 - eps * d
            out[1, hi] = -eps * mu * d
        return out


def _node_branch(data: tuple, y: np.ndarray) -> np.ndarray:
    """Linear solution near 0 matching (phi, phi') at y = 0."""
    phi0, dphi0, mu1, mu2 = data
    if abs(mu1 - mu2) < 1e-10:
        mu = mu1
        b = dphi0 - mu * phi0
        e = np.exp(mu * y)
        return np.vstack([(phi0 + b * y) * e, (mu * (phi0 + b * y) + b) * e])
    # phi = p e^{mu1 y} + q e^{mu2 y}; the mu2 (fast) part decays to the left more quickly
    q = (dphi0 - mu1 * phi0) / (mu2 - mu1)
    p = phi0 - q
    e1, e2 = np.exp(mu1 * y), np.exp(mu2 * y)
    return np.vstack([p * e1 + q * e2, p * mu1 * e1 + q * mu2 * e2])


def kpp_wave(
    c: float,
    f: Callable = logistic,
    fprime0: float = 1.0,
    fprime1: float = -1.0,
    domain: tuple[float, float] = (-40.0, 40.0),
    tol: float = 1e-10,
) -> KppWave:
    """Travelling wave of ``u_t = u_xx + f(u)`` moving to the left at speed ``c``.

    ``phi`` solves ``-phi'' + c phi' = f(phi)``.  The state (1, 0) is a saddle
    whose stable manifold is one-dimensional, so the connection is the
    backward continuation of that manifold: start at distance ``tol`` from 1
    along the stable eigenvector and integrate towards ``-inf`` until ``phi``
    drops below ``tol``.  Below ``c* = 2 sqrt(f'(0))`` the continuation
    overshoots 0 (the origin is a focus) and :class:`NoMonotoneWave` is raised.
    The profile is translated so that ``phi(0) = 1/2``.
    """
    c_star = 2.0 * math.sqrt(fprime0)
    if c < c_star - 1e-14:
        raise NoMonotoneWave(f"speed {c} is below the minimal speed {c_star}: no monotone connection")
    mu_s = 0.5 * (c - math.sqrt(c * c - 4.0 * fprime1))

    def rhs(_x, y):
        return [y[1], c * y[1] - f(y[0])]

    def hit_zero(_x, y):
        return y[0] - tol

    hit_zero.terminal = True

    def turned(_x, y):
        return y[1]

    turned.terminal = True

    span = domain[1] - domain[0]
    y0 = [1.0 - tol, -tol * mu_s]
    sol = solve_ivp(
        rhs, (0.0, -20.0 * span), y0, method="DOP853", rtol=1e-13, atol=1e-16,
        dense_output=True, events=(hit_zero, turned),
    )
    if sol.t_events[1].size and not sol.t_events[0].size:
        raise NoMonotoneWave(f"speed {c}: trajectory turned before reaching 0")
    if not sol.t_events[0].size:
        raise NoMonotoneWave("backward shot did not reach the unstable state")
    x_end = float(sol.t_events[0][0])
    # centre so that phi(0) = 1/2
    x_half = brentq(lambda xx: sol.sol(xx)[0] - 0.5, x_end, 0.0, xtol=1e-15)
    dense = sol.sol

    def shifted(x):
        return dense(np.asarray(x) + x_half)

    root = math.sqrt(max(c * c - 4.0 * fprime0, 0.0))
    mu1, mu2 = 0.5 * (c - root), 0.5 * (c + root)
    left_state = dense(x_end)
    return KppWave(
        c=c,
        c_star=c_star,
        x_lo=x_end - x_half,
        x_hi=-x_half,
        _sol=shifted,
        _left=(float(left_state[0]), float(left_state[1]), mu1, mu2),
        _right=(tol, mu_s),
    )


# --------------------------------------------------------------------------
# separable solutions on bounded domains
# --------------------------------------------------------------------------

def separable_profile(op_matrix: np.ndarray, m: float, tol: float = 1e-12, maxiter: int = 2000) -> np.ndarray:
    """Profile ``S`` of ``u = S(x) t^(-1/(m-1))`` for ``u_t + L(u^m) = 0``.

    ``S`` solves ``L(S^m) = S / (m - 1)``.  With ``w = S^m`` this is the
    fixed point of ``w <- L^-1 (w^(1/m)) / (m - 1)``, a sublinear map that
    contracts in Hilbert's projective metric, so plain iteration converges.
    """
    if not m > 1:
        raise ValueError("separable profile needs m > 1")
    lu = scipy.linalg.lu_factor(op_matrix)
    w = np.ones(op_matrix.shape[0])
    for _ in range(maxiter):
        w_new = scipy.linalg.lu_solve(lu, np.maximum(w, 0.0) ** (1.0 / m)) / (m - 1.0)
        if np.max(np.abs(w_new - w)) <= tol * np.max(np.abs(w_new)):
            w = w_new
            break
        w = w_new
    else:
        raise RuntimeError("separable profile iteration did not converge")
    return np.maximum(w, 0.0) ** (1.0 / m)


def sample_on(g: Grid1D, fn: Callable, *args, **kw) -> np.ndarray:
    """Convenience: ``fn(g.x, *args, **kw)``."""
    return np.asarray(fn(g.x, *args, **kw), dtype=float)
