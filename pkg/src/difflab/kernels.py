"""Heat kernels: Gaussian, fractional (stable) kernels and convolution.

The fractional kernel ``P_t`` has Fourier transform ``exp(-t |xi|^(2s))``.
On a periodic box the inverse FFT of that symbol gives the periodised kernel
``sum_m P_t(x + mL)`` up to aliasing.  For tail studies the periodic images
can be removed with the large-``|x|`` expansion

    P_t(x) ~ sum_k a_k t^k |x|^(-1-2sk),
    a_k = (-1)^(k+1) Gamma(2sk + 1) sin(pi s k) / (pi k!),

summed over all images in closed form with the Hurwitz zeta function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, zeta

from .domain import Field, Grid1D, mass

# Nyquist-mode symbol bound used for the aliasing check.
ALIAS_TOL = 1e-12


class AliasingError(ValueError):
    """The grid is too coarse for the requested kernel."""


@dataclass(frozen=True)
class KernelTable:
    """Samples of ``P_t`` on a grid (``s = 1`` is the Gaussian)."""

    s: float
    t: float
    grid: Grid1D
    values: np.ndarray = field(repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def as_field(self) -> Field:
        return Field(self.grid, self.values, self.t)

    @property
    def mass(self) -> float:
        return mass(self.as_field())


def gaussian_kernel(x, t: float, N: int = 1):
    """``(4 pi t)^(-N/2) exp(-|x|^2 / 4t)``; ``x`` is a radius (any shape)."""
    if not t > 0:
        raise ValueError("gaussian_kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    out = (4.0 * math.pi * t) ** (-0.5 * N) * np.exp(-(x**2) / (4.0 * t))
    return float(out) if out.ndim == 0 else out


def bg_envelope(x, t: float, s: float, N: int = 1):
    """Two-sided envelope ``t / (t^(1/s) + |x|^2)^((N + 2s)/2)`` of ``P_t``."""
    if not t > 0:
        raise ValueError("bg_envelope needs t > 0")
    x = np.asarray(x, dtype=float)
    out = t / (t ** (1.0 / s) + x**2) ** (0.5 * (N + 2.0 * s))
    return float(out) if out.ndim == 0 else out


def required_spacing(t: float, s: float, tol: float = ALIAS_TOL) -> float:
    """Largest ``dx`` with ``exp(-t xi_Nyquist^(2s)) <= tol``."""
    xi = (-math.log(tol) / t) ** (1.0 / (2.0 * s))
    return math.pi / xi


def stable_tail_coefficient(k: int, s: float) -> float:
    """Coefficient ``a_k`` of ``t^k |x|^(-1-2sk)`` in the tail expansion."""
    sign = 1.0 if k % 2 else -1.0
    return sign * math.sin(math.pi * s * k) / math.pi * math.exp(gammaln(2.0 * s * k + 1.0) - gammaln(k + 1.0))


def image_sum(x: np.ndarray, t: float, s: float, length: float, rtol: float = 1e-15) -> np.ndarray:
    """``sum_{m != 0} P_t(x + m L)`` from the tail expansion.

    Terms are added until they fall below ``rtol`` times the leading one.  A
    growing term sequence means the images are not in the asymptotic regime
    and raises :class:`AliasingError`.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= length):
        raise ValueError("image_sum needs |x| < L")
    out = np.zeros_like(x)
    lead = None
    prev = math.inf
    for k in range(1, 200):
        e = 1.0 + 2.0 * s * k
        # term size without the sine factor, which vanishes (to round-off) for rational s
        mag = math.exp(gammaln(2.0 * s * k + 1.0) - gammaln(k + 1.0)) / math.pi
        bound = mag * t**k * (0.5 * length) ** (-e) * 2.0 * zeta(e)
        if lead is None:
            lead = bound
        if bound > prev:
            raise AliasingError("periodic images are not in the tail regime; enlarge the box")
        if bound < rtol * lead:
            return out
        prev = bound
        a = stable_tail_coefficient(k, s)
        if abs(a) <= 1e-14 * mag:
            continue
        out += a * t**k * length ** (-e) * (zeta(e, 1.0 + x / length) + zeta(e, 1.0 - x / length))
    raise AliasingError("tail expansion of the images did not converge")


def fractional_heat_kernel(g: Grid1D, t: float, s: float, whole_line: bool = False) -> KernelTable:
    """Kernel ``P_t`` centred at ``x = 0`` on a periodic grid.

    ``s = 1`` samples the Gaussian.  With ``whole_line=True`` the periodic
    images are subtracted, leaving an approximation to the free-space kernel
    (useful for tail exponents on moderate boxes).
    """
    if not t > 0:
        raise ValueError("kernel needs t > 0")
    if not 0.0 < s <= 1.0:
        raise ValueError("kernel order must lie in (0, 1]")
    if not g.is_periodic:
        raise ValueError("fractional_heat_kernel needs a periodic grid")
    x = g.x
    if s == 1.0:
        return KernelTable(1.0, t, g, gaussian_kernel(x, t))
    dx_max = required_spacing(t, s)
    if g.dx > dx_max:
        n_req = 1 << math.ceil(math.log2(g.length / dx_max))
        raise AliasingError(
            f"dx = {g.dx:.3g} aliases the kernel at t={t}, s={s}; need dx <= {dx_max:.3g} (n >= {n_req} for this box)"
        )
    xi = 2.0 * np.pi * np.fft.fftfreq(g.n, d=g.dx)
    spec = np.exp(-t * np.abs(xi) ** (2.0 * s)) * np.exp(1j * xi * g.left)
    vals = np.fft.ifft(spec).real / g.dx
    if whole_line:
        vals = vals - image_sum(x, t, s, g.length)
    return KernelTable(float(s), float(t), g, vals)


def heat_multiplier(g: Grid1D, t: float, s: float) -> np.ndarray:
    """``exp(-t |xi|^(2s))`` in rfft layout."""
    return np.exp(-t * g.wavenumbers() ** (2.0 * s))


def heat_convolve(u0: Field, t: float, s: float = 1.0) -> Field:
    """``u(t) = P_t * u0`` on a periodic grid by exact spectral multiplication.

    Mass is preserved for every ``t``.  Positivity and the maximum principle
    hold once the kernel is resolved (``dx <= required_spacing(t, s)``);
    for smaller ``t`` the band-limited kernel has Gibbs lobes.
    """
    if t < 0:
        raise ValueError("heat_convolve needs t >= 0")
    if not 0.0 < s <= 1.0:
        raise ValueError("order must lie in (0, 1]")
    if not u0.grid.is_periodic:
        raise ValueError("heat_convolve needs a periodic grid")
    if t == 0:
        return u0
    vals = np.fft.irfft(np.fft.rfft(u0.values) * heat_multiplier(u0.grid, t, s), u0.grid.n)
    return Field(u0.grid, vals, u0.time + t)
