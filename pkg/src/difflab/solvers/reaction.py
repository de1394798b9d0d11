"""Reaction-diffusion (KPP) stepping by Strang splitting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from ..domain import Field
from ..kernels import heat_convolve
from ..nonlocal_ops import OperatorKind, OperatorSpec
from .implicit import diffusion_matrix
from .trajectory import Monitor, Trajectory, evolve

RANGE_TOL = 1e-8


class RangeViolation(RuntimeError):
    """A KPP state left [0, 1] by more than the tolerance."""


@dataclass(frozen=True)
class Reaction:
    """Pointwise reaction ``f``; ``logistic`` is ``rate * u (1 - u)``.

    ``flow(u, t)`` solves ``u' = f(u)`` exactly for the built-in kinds and
    with classical RK4 substeps for a custom ``fn``.
    """

    kind: str = "logistic"
    rate: float = 1.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "zero", "custom"):
            raise ValueError(f"unknown reaction {self.kind!r}")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom reaction needs fn")

    def __call__(self, u):
        if self.kind == "logistic":
            return self.rate * u * (1.0 - u)
        if self.kind == "zero":
            return np.zeros_like(u)
        return self.fn(u)

    @property
    def fprime0(self) -> float:
        if self.kind == "logistic":
            return self.rate
        if self.kind == "zero":
            return 0.0
        eps = 1e-7
        return float((self.fn(np.array([eps])) - self.fn(np.array([0.0])))[0] / eps)

    def flow(self, u: np.ndarray, t: float) -> np.ndarray:
        if self.kind == "zero" or t == 0:
            return u
        if self.kind == "logistic":
            return u / (u + (1.0 - u) * np.exp(-self.rate * t))
        nsub = max(1, int(np.ceil(t / 0.01)))
        dt = t / nsub
        for _ in range(nsub):
            k1 = self.fn(u)
            k2 = self.fn(u + 0.5 * dt * k1)
            k3 = self.fn(u + 0.5 * dt * k2)
            k4 = self.fn(u + dt * k3)
            u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return u


def diffuse(u: Field, h: float, op: OperatorSpec) -> np.ndarray:
    """One diffusion substep: exact heat flow for spectral operators, backward Euler otherwise."""
    if op.kind is OperatorKind.FRAC_SPECTRAL:
        return heat_convolve(u, h, op.s).values
    lin = diffusion_matrix(op, u.grid)
    return lin.solve(np.ones(u.grid.n), h, None, u.values)


def _check_range(u: np.ndarray) -> np.ndarray:
    lo, hi = float(u.min()), float(u.max())
    if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL:
        raise RangeViolation(f"KPP state left [0, 1]: range [{lo:.3e}, {hi:.3e}]")
    return np.clip(u, 0.0, 1.0)


def rd_step(u_prev: Field, h: float, diffusion: OperatorSpec, f: Reaction) -> Field:
    """Strang step: half reaction, full diffusion, half reaction."""
    if not h > 0:
        raise ValueError("step size must be positive")
    u = _check_range(u_prev.values)
    u = f.flow(u, 0.5 * h)
    u = _check_range(diffuse(Field(u_prev.grid, u, u_prev.time), h, diffusion))
    u = _check_range(f.flow(u, 0.5 * h))
    return Field(u_prev.grid, u, u_prev.time + h)


def front_position(f: Field, level: float = 0.5) -> float:
    """Largest ``x`` with ``u >= level``, linearly interpolated to the next node."""
    u, x = f.values, f.grid.x
    idx = np.nonzero(u >= level)[0]
    if idx.size == 0:
        return float("nan")
    i = int(idx[-1])
    if i == u.size - 1 or u[i] == u[i + 1]:
        return float(x[i])
    return float(x[i] + f.grid.dx * (u[i] - level) / (u[i] - u[i + 1]))


def run_kpp(
    u0: Field,
    t_end: float,
    h: float,
    diffusion: OperatorSpec,
    f: Reaction = Reaction(),
    outputs: Iterable[float] = (),
    monitors: Mapping[str, Monitor] | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Run the splitting scheme; the ``front`` series is sampled every ``record_every`` steps."""
    mons = {"front": front_position}
    mons.update(monitors or {})

    def step(u, hh):
        return rd_step(u, hh, diffusion, f), None

    return evolve(u0, t_end, h, step, outputs, mons, record_every)
