"""Drivers for the filtration equation and the fractional porous medium equation."""
from __future__ import annotations

from typing import Iterable, Mapping

from ..domain import Field
from ..nonlocal_ops import OperatorSpec
from .implicit import fpme_step_info, implicit_step
from .nonlinearity import Nonlinearity, StepControl
from .trajectory import Monitor, Trajectory, evolve


def run_filtration(
    u0: Field,
    t_end: float,
    control: StepControl,
    phi: Nonlinearity,
    op: OperatorSpec = OperatorSpec(),
    outputs: Iterable[float] = (),
    monitors: Mapping[str, Monitor] | None = None,
    record_every: int = 0,
) -> Trajectory:
    """Repeated implicit steps of ``u_t = Delta Phi(u)`` with fixed ``h``."""

    def step(u, hh):
        return implicit_step(u, hh, phi, op, control)

    return evolve(u0, t_end, control.h, step, outputs, monitors, record_every)


def run_fpme(
    u0: Field,
    t_end: float,
    control: StepControl,
    m: float,
    op: OperatorSpec,
    outputs: Iterable[float] = (),
    monitors: Mapping[str, Monitor] | None = None,
    record_every: int = 0,
) -> Trajectory:
    """Repeated implicit steps of ``u_t + L(u^m) = 0`` with fixed ``h``."""

    def step(u, hh):
        return fpme_step_info(u, hh, m, op, control)

    return evolve(u0, t_end, control.h, step, outputs, monitors, record_every)
