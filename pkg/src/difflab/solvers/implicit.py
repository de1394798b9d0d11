"""Backward-Euler (implicit time discretisation) steps solved by Newton.

One step of ``u_t + A Phi(u) = 0`` with ``A >= 0`` a diffusion operator is

    u + h A Phi(u) = u_prev.

When ``Phi`` is smooth the unknown is ``u``; otherwise (fast diffusion,
Stefan) the unknown is ``v = Phi(u)`` and the equation is written as
``beta(v) + h A v = u_prev``.  Both forms give the same ``u``.  The ``v``
form is the gradient of the strictly convex energy

    J(v) = sum B(v) + (h/2) <A v, v> - <u_prev, v>,   B' = beta,

so its Newton steps are damped by backtracking on ``J``, which cannot cycle.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ..domain import Field, Geometry, Grid1D, clip_negative
from ..nonlocal_ops import OperatorKind, OperatorSpec, operator_matrix
from .nonlinearity import Nonlinearity, StepControl


class StepRejected(RuntimeError):
    """Newton failed to converge, even after halving the step."""


@dataclass(frozen=True)
class StepInfo:
    newton_iters: int
    clipped: float
    halved: bool = False


class DiffusionMatrix:
    """A nonnegative diffusion operator with fast Jacobian solves.

    The classical Laplacian is stored as a tridiagonal (or cyclic) stencil;
    every other operator as a dense matrix.
    """

    def __init__(self, op: OperatorSpec, grid: Grid1D):
        self.op = op
        self.grid = grid
        self.n = grid.n
        self.classical = op.kind is OperatorKind.CLASSICAL_LAPLACIAN
        if self.classical:
            self.c = 1.0 / grid.dx**2
            self.periodic = grid.is_periodic
        else:
            self.mat = operator_matrix(op, grid)

    def apply(self, w: np.ndarray) -> np.ndarray:
        if not self.classical:
            return self.mat @ w
        if self.periodic:
            return self.c * (2.0 * w - np.roll(w, 1) - np.roll(w, -1))
        out = 2.0 * w
        out[1:] -= w[:-1]
        out[:-1] -= w[1:]
        return self.c * out

    def solve(self, diag: np.ndarray, h: float, scale: np.ndarray | None, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(diag(diag) + h A diag(scale)) x = rhs`` (``scale=None`` means identity)."""
        n = self.n
        sc = np.ones(n) if scale is None else scale
        if not self.classical:
            j = h * self.mat * sc[None, :]
            j[np.diag_indices(n)] += diag
            return scipy.linalg.solve(j, rhs, check_finite=False)
        c = h * self.c
        main = diag + 2.0 * c * sc
        if self.periodic:
            up = -c * np.roll(sc, -1)  # J[i, i+1]
            lo = -c * np.roll(sc, 1)  # J[i, i-1]
            rows = np.arange(n)
            jm = scipy.sparse.csc_matrix(
                (np.concatenate([main, up, lo]),
                 (np.concatenate([rows, rows, rows]), np.concatenate([rows, (rows + 1) % n, (rows - 1) % n]))),
                shape=(n, n),
            )
            return scipy.sparse.linalg.spsolve(jm, rhs)
        ab = np.zeros((3, n))
        ab[0, 1:] = -c * sc[1:]
        ab[1] = main
        ab[2, :-1] = -c * sc[:-1]
        return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


@functools.lru_cache(maxsize=32)
def diffusion_matrix(op: OperatorSpec, grid: Grid1D) -> DiffusionMatrix:
    return DiffusionMatrix(op, grid)


def _newton(f: np.ndarray, h: float, phi: Nonlinearity, lin: DiffusionMatrix, ctl: StepControl) -> tuple[np.ndarray, int]:
    tol = ctl.newton_tol * max(1.0, float(np.max(np.abs(f))))
    in_u = phi.solve_in_u

    if in_u:
        def resid(w):
            return w + h * lin.apply(phi.phi(w)) - f
    else:
        def resid(w):
            return phi.beta(w) + h * lin.apply(w) - f

    def energy(w):
        return float(np.sum(phi.primitive(w)) + 0.5 * h * np.dot(w, lin.apply(w)) - np.dot(f, w))

    w = f.copy() if in_u else phi.phi(f)
    r = resid(w)
    rn = float(np.max(np.abs(r)))
    e = 0.0 if in_u else energy(w)
    def newton_dir(w, r):
        if in_u:
            return lin.solve(np.ones(lin.n), h, phi.dphi(w), r)
        return lin.solve(np.maximum(phi.dbeta(w), 1e-12), h, None, r)

    def finish(w, r, rn, its):
        # the mass defect is dx * sum(r); one undamped polish step in the
        # quadratic regime pushes it to round-off
        w_p = w - newton_dir(w, r)
        if float(np.max(np.abs(resid(w_p)))) < rn:
            w = w_p
        return (w if in_u else phi.beta(w)), its + 1

    for it in range(1, ctl.newton_max + 1):
        if rn <= tol:
            return finish(w, r, rn, it - 1)
        delta = newton_dir(w, r)
        slope = float(np.dot(r, delta))
        lam = 1.0
        for _ in range(60):
            w_try = w - lam * delta
            r_try = resid(w_try)
            rn_try = float(np.max(np.abs(r_try)))
            if in_u:
                ok = np.isfinite(rn_try) and rn_try < rn
            else:
                e_try = energy(w_try)
                # Armijo on J; once J stalls at round-off, fall back to the residual
                flat = abs(e_try - e) <= 1e-13 * max(abs(e), 1.0)
                ok = np.isfinite(e_try) and (e_try <= e - 1e-4 * lam * slope or (flat and rn_try < rn))
            if ok:
                break
            lam *= 0.5
        else:
            raise StepRejected(f"damped Newton stalled at residual {rn:.3e}")
        w, r, rn = w_try, r_try, rn_try
        if not in_u:
            e = e_try
    if rn <= tol:
        return finish(w, r, rn, ctl.newton_max)
    raise StepRejected(f"Newton did not converge in {ctl.newton_max} iterations (residual {rn:.3e})")


def implicit_step(
    u_prev: Field,
    h: float,
    phi: Nonlinearity,
    op: OperatorSpec = OperatorSpec(),
    control: StepControl | None = None,
) -> tuple[Field, StepInfo]:
    """One backward-Euler step of ``u_t + A Phi(u) = 0``; returns the field and step info."""
    if not h > 0:
        raise ValueError("step size must be positive")
    ctl = control or StepControl(h=h)
    lin = diffusion_matrix(op, u_prev.grid)
    f = u_prev.values.astype(float)
    density = bool(np.all(f >= 0))
    halved = False
    try:
        u, its = _newton(f, h, phi, lin, ctl)
    except StepRejected:
        halved = True
        mid, its1 = _newton(f, 0.5 * h, phi, lin, ctl)
        u, its2 = _newton(mid, 0.5 * h, phi, lin, ctl)
        its = its1 + its2
    clipped = 0.0
    if density:
        u, clipped = clip_negative(u)
        clipped *= u_prev.grid.dx
    return Field(u_prev.grid, u, u_prev.time + h), StepInfo(its, clipped, halved)


def itd_step(
    u_prev: Field,
    h: float,
    phi: Nonlinearity,
    op: OperatorSpec = OperatorSpec(),
    control: StepControl | None = None,
) -> Field:
    """Implicit time-discretisation step of the filtration equation ``u_t = Delta Phi(u)``.

    Solves ``-h Delta v + beta(v) = u_prev`` (equivalently
    ``-h Delta Phi(u) + u = u_prev``) and returns ``u``.  Zero Dirichlet
    ghost values are used on non-periodic grids.
    """
    return implicit_step(u_prev, h, phi, op, control)[0]


FPME_OPERATORS = (
    OperatorKind.FRAC_SPECTRAL,
    OperatorKind.FRAC_QUADRATURE,
    OperatorKind.RFL,
    OperatorKind.SFL,
    OperatorKind.CFL,
)


def fpme_step(
    u_prev: Field,
    h: float,
    m: float,
    op: OperatorSpec,
    control: StepControl | None = None,
) -> Field:
    """Implicit step of the fractional porous medium equation ``u_t + L(|u|^(m-1) u) = 0``."""
    return fpme_step_info(u_prev, h, m, op, control)[0]


def fpme_step_info(u_prev, h, m, op, control=None) -> tuple[Field, StepInfo]:
    if op.kind not in FPME_OPERATORS:
        raise ValueError(f"fpme_step does not support {op.kind.value}")
    if op.kind in (OperatorKind.FRAC_SPECTRAL,) and not u_prev.grid.is_periodic:
        raise ValueError("spectral FPME needs a periodic grid")
    if op.is_bounded_domain and u_prev.grid.geometry is not Geometry.DIRICHLET_EXTERIOR:
        raise ValueError("bounded-domain FPME needs a DirichletExterior grid")
    phi = Nonlinearity.power(m) if m != 1 else Nonlinearity()
    return implicit_step(u_prev, h, phi, op, control)
