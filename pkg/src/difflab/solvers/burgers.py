"""The ``s -> 1`` limit of the pressure model in 1D.

With ``v`` the zero-mean antiderivative of ``u``, the pressure model at
``s = 1`` becomes the inviscid Burgers equation ``v_t + v v_x = 0``.  The
check runs the pressure model at several ``s`` close to 1 on signed,
zero-mean data and compares ``v`` with a characteristics solution computed
before the first shock.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..domain import Field
from .pmfp import pmfp_advance


def antiderivative(u: Field) -> np.ndarray:
    """Zero-mean ``v`` with ``v_x = u`` (``u`` must have zero mean)."""
    g = u.grid
    xi = g.wavenumbers()
    uh = np.fft.rfft(u.values)
    if abs(uh[0].real) > 1e-10 * max(np.abs(uh).max(), 1e-300):
        raise ValueError("antiderivative needs zero-mean data")
    vh = np.zeros_like(uh)
    vh[1:] = uh[1:] / (1j * xi[1:])
    return np.fft.irfft(vh, g.n)


def shock_time(v0: np.ndarray, dx: float) -> float:
    """``1 / max(-v0')`` from centred differences (inf when v0 is nondecreasing)."""
    dv = (np.roll(v0, -1) - np.roll(v0, 1)) / (2.0 * dx)
    top = float(np.max(-dv))
    return np.inf if top <= 0 else 1.0 / top


def burgers_characteristics(v0_fn, x: np.ndarray, t: float, period: float) -> np.ndarray:
    """``v(x, t) = v0(x0)`` where ``x = x0 + t v0(x0)``, solved pointwise by bracketing."""
    out = np.empty_like(x)
    amp = float(np.max(np.abs(v0_fn(np.linspace(0.0, period, 2049)))))
    for i, xi in enumerate(x):
        lo, hi = xi - t * amp - 1e-12, xi + t * amp + 1e-12
        x0 = brentq(lambda z: z + t * v0_fn(z) - xi, lo, hi, xtol=1e-14)
        out[i] = v0_fn(x0)
    return out


@dataclass(frozen=True)
class BurgersReport:
    t: float
    t_shock: float
    s_values: tuple[float, ...]
    deviations: tuple[float, ...]

    @property
    def decreasing(self) -> bool:
        d = np.asarray(self.deviations)
        return bool(np.all(np.diff(d) < 0))


def burgers_check(
    u0: Field,
    t: float,
    v0_fn=None,
    s_values: tuple[float, ...] = (0.9, 0.95, 0.99),
    cfl_safety: float = 0.45,
) -> BurgersReport:
    """Max deviation of the pressure model from Burgers at time ``t`` for each ``s``.

    ``v0_fn`` is the exact initial antiderivative (periodic); when omitted a
    spectral interpolant of the sampled one is used.  Times at or beyond the
    shock are refused.
    """
    g = u0.grid
    if not g.is_periodic:
        raise ValueError("burgers_check needs a periodic grid")
    v0 = antiderivative(u0)
    t_shock = shock_time(v0, g.dx)
    if not t < t_shock:
        raise ValueError(f"t = {t} is past the shock time {t_shock:.4g}; characteristics reference invalid")
    if v0_fn is None:
        vh = np.fft.rfft(v0)
        k = np.fft.rfftfreq(g.n, d=g.dx) * 2.0 * np.pi

        def v0_fn(z):
            z = np.atleast_1d(z)
            ph = np.exp(1j * np.outer(z - g.left, k))
            w = np.full(k.size, 2.0)
            w[0] = 1.0
            if g.n % 2 == 0:
                w[-1] = 1.0
            val = (ph * (w * vh)).real.sum(axis=1) / g.n
            return val if val.size > 1 else float(val[0])

    ref = burgers_characteristics(v0_fn, g.x, t, g.length)
    devs = []
    for s in s_values:
        u, _ = pmfp_advance(Field(g, u0.values, 0.0), t, s, cfl_safety, signed=True)
        devs.append(float(np.max(np.abs(antiderivative(u) - ref))))
    return BurgersReport(float(t), float(t_shock), tuple(float(s) for s in s_values), tuple(devs))
