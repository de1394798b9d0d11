"""Diffusion operators on 1D grids.

Free-space fractional Laplacian, three ways:

* spectral: FFT multiplier ``|xi|^(2s)`` on a periodic box;
* quadrature: lattice discretisation of the hypersingular integral
  ``C_{1,s} PV int (f(x) - f(y)) / |x - y|^(1+2s) dy``;
* semigroup: ``(1/Gamma(-s)) int_0^inf (e^{t Delta} f - f) t^(-1-s) dt``.

Bounded-domain versions on an interval: restricted (RFL, zero exterior),
spectral (SFL, powers of the Dirichlet Laplacian) and censored/regional (CFL).

Quadrature weights
------------------
The lattice sum ``h sum_{j != 0} (f(x) - f(x + jh)) / |jh|^(1+2s)`` misses the
singular cell.  Expanding ``f`` in Taylor series and summing the lattice with
the Riemann zeta function (the Navot extension of Euler-Maclaurin) shows that
the missing part is

    zeta(2s - 1) h^(2-2s) f''(x) + zeta(2s - 3) h^(4-2s) f''''(x) / 12 + ...

Adding these two terms with finite-difference derivatives makes the operator
exact on quadratics and fourth-order accurate on smooth data.  Periodic boxes
use the periodised kernel, summed in closed form with the Hurwitz zeta function.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg
from scipy.special import gamma as gamma_fn
from scipy.special import roots_genlaguerre, zeta

from .domain import Field, Geometry, Grid1D, check_edge_decay, inner


class OperatorKind(str, enum.Enum):
    CLASSICAL_LAPLACIAN = "ClassicalLaplacian"
    FRAC_SPECTRAL = "FracSpectral"
    FRAC_QUADRATURE = "FracQuadrature"
    FRAC_SEMIGROUP = "FracSemigroup"
    INVERSE_RIESZ = "InverseRiesz"
    RFL = "RFL"
    SFL = "SFL"
    CFL = "CFL"


@dataclass(frozen=True)
class OperatorSpec:
    """Which diffusion operator, and of which order."""

    kind: OperatorKind = OperatorKind.CLASSICAL_LAPLACIAN
    s: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.kind is OperatorKind.CLASSICAL_LAPLACIAN:
            object.__setattr__(self, "s", 1.0)
            return
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"{self.kind.value} needs 0 < s < 1, got {self.s}")
        if self.kind is OperatorKind.CFL and self.s <= 0.5:
            raise ValueError("CFL needs s > 1/2: the censored process never reaches the boundary otherwise")

    @property
    def gamma(self) -> float:
        """Boundary exponent of the Green function (metadata)."""
        if self.kind is OperatorKind.SFL or self.kind is OperatorKind.CLASSICAL_LAPLACIAN:
            return 1.0
        if self.kind is OperatorKind.CFL:
            return self.s - 0.5
        return self.s

    @property
    def is_bounded_domain(self) -> bool:
        return self.kind in (OperatorKind.RFL, OperatorKind.SFL, OperatorKind.CFL)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Lowest eigenpairs; ``vectors[:, j]`` is orthonormal under the dx inner product."""

    grid: Grid1D
    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def eigenfunctions(self) -> list[Field]:
        return [Field(self.grid, self.vectors[:, j]) for j in range(self.vectors.shape[1])]


# --------------------------------------------------------------------------
# normalisation constant
# --------------------------------------------------------------------------

def frac_constant_exact(s: float) -> float:
    """Closed form ``C_{1,s} = s 4^s Gamma(1/2 + s) / (sqrt(pi) Gamma(1 - s))``.

    Kept as an independent cross-check for :func:`frac_constant`.
    """
    return s * 4.0**s * gamma_fn(0.5 + s) / (math.sqrt(math.pi) * gamma_fn(1.0 - s))


@functools.lru_cache(maxsize=256)
def frac_constant(s: float) -> float:
    """Kernel constant fixed by the plane-wave calibration.

    The unnormalised lattice operator is applied to ``cos(x)`` on a ``2*pi``
    periodic box with 256 points; ``C`` makes the result equal ``cos(x)``.
    """
    sym = _raw_periodic_symbol(256, 2.0 * math.pi, float(s))
    return float(1.0 / sym[1])


def _check_order(s: float, allow_one: bool = False) -> None:
    hi_ok = s <= 1.0 if allow_one else s < 1.0
    if not (s > 0.0 and hi_ok):
        raise ValueError(f"order s must lie in (0, 1{']' if allow_one else ')'}, got {s}")


# --------------------------------------------------------------------------
# periodic (spectral) operators
# --------------------------------------------------------------------------

def _require_periodic(f: Field) -> None:
    if not f.grid.is_periodic:
        raise ValueError("operation needs a periodic grid")


def _apply_multiplier(f: Field, mult: np.ndarray) -> Field:
    n = f.grid.n
    return f.with_values(np.fft.irfft(np.fft.rfft(f.values) * mult, n))


def apply_spectral(f: Field, s: float) -> Field:
    """``(-Delta)^s f`` via the FFT multiplier ``|xi|^(2s)`` (``s = 1`` allowed)."""
    _require_periodic(f)
    _check_order(s, allow_one=True)
    return _apply_multiplier(f, f.grid.wavenumbers() ** (2.0 * s))


def inverse_riesz(f: Field, s: float, subtract_mean: bool = False) -> Field:
    """``(-Delta)^(-s) f`` on a periodic box; the zero mode is set to zero.

    The input must have zero mean unless ``subtract_mean`` is set, in which
    case its mean is removed first.
    """
    _require_periodic(f)
    _check_order(s, allow_one=True)
    total = float(np.sum(f.values))
    if not subtract_mean and abs(total) > 1e-10 * max(np.sum(np.abs(f.values)), 1e-300):
        raise ValueError("inverse_riesz needs a zero-mean field (or subtract_mean=True)")
    xi = f.grid.wavenumbers()
    mult = np.zeros_like(xi)
    mult[1:] = xi[1:] ** (-2.0 * s)
    return _apply_multiplier(f, mult)


def _raw_periodic_symbol(n: int, length: float, s: float) -> np.ndarray:
    """Symbol (rfft layout) of the uncalibrated periodic lattice operator."""
    h = length / n
    a = 1.0 + 2.0 * s
    r = np.arange(1, n)
    kern = h ** (-2.0 * s) * n ** (-a) * (zeta(a, r / n) + zeta(a, 1.0 - r / n))
    k = np.arange(n // 2 + 1)
    theta = 2.0 * np.pi * k / n
    # sum_r K_r (1 - cos(theta r)) via a real cosine transform of the kernel
    full = np.zeros(n)
    full[1:] = kern
    main = kern.sum() - np.fft.rfft(full).real
    d2 = (2.0 * np.cos(theta) - 2.0) / h**2
    d4 = d2**2
    fpp = d2 - h**2 / 12.0 * d4
    corr = zeta(2.0 * s - 1.0) * h ** (2.0 - 2.0 * s) * fpp + zeta(2.0 * s - 3.0) * h ** (4.0 - 2.0 * s) * d4 / 12.0
    return main + corr


def quadrature_symbol(g: Grid1D, s: float) -> np.ndarray:
    """Calibrated symbol of the periodic quadrature operator (rfft layout)."""
    return frac_constant(s) * _raw_periodic_symbol(g.n, g.length, s)


def _toeplitz_column(n: int, h: float, s: float) -> tuple[np.ndarray, float]:
    """First column and diagonal of the zero-exterior lattice operator (no correction)."""
    a = 1.0 + 2.0 * s
    c = frac_constant(s) * h ** (-2.0 * s)
    col = np.zeros(n)
    col[1:] = -c * np.arange(1, n, dtype=float) ** (-a)
    return col, 2.0 * c * zeta(a)


def _correction_coeffs(h: float, s: float) -> tuple[float, float]:
    """Coefficients multiplying the D2 and D4 stencils in the singular-cell fix."""
    c = frac_constant(s)
    z1 = zeta(2.0 * s - 1.0) * h ** (2.0 - 2.0 * s)
    z3 = zeta(2.0 * s - 3.0) * h ** (4.0 - 2.0 * s)
    # f'' ~ D2 - h^2/12 D4 and f'''' ~ D4
    return c * z1, c * (z3 / 12.0 - z1 * h**2 / 12.0)


def _second_difference(n: int, h: float, kind: str = "dirichlet") -> np.ndarray:
    """Dense ``(1, -2, 1)/h^2`` with zero ghosts ('dirichlet') or reflection ('neumann')."""
    d = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    if kind == "neumann":
        d[0, 0] = d[-1, -1] = -1.0
    elif kind == "periodic":
        d[0, -1] = d[-1, 0] = 1.0
    return d / h**2


def apply_quadrature(f: Field, s: float) -> Field:
    """Hypersingular-integral quadrature of ``(-Delta)^s f``.

    On periodic grids the periodised lattice kernel is used.  On other grids
    ``f`` is taken to vanish outside the box; the exterior part of the lattice
    sum is then exact and sits in the diagonal ``2 zeta(1+2s)`` term.
    """
    _check_order(s)
    g = f.grid
    if g.is_periodic:
        return _apply_multiplier(f, quadrature_symbol(g, s))
    check_edge_decay(f)
    h = g.dx
    col, diag = _toeplitz_column(g.n, h, s)
    u = f.values
    out = diag * u + scipy.linalg.matmul_toeplitz((col, col), u)
    c2, c4 = _correction_coeffs(h, s)
    up = np.concatenate(([0.0, 0.0], u, [0.0, 0.0]))
    d2 = (up[3:-1] - 2.0 * up[2:-2] + up[1:-3]) / h**2
    d4 = (up[4:] - 4.0 * up[3:-1] + 6.0 * up[2:-2] - 4.0 * up[1:-3] + up[:-4]) / h**4
    return f.with_values(out + c2 * d2 + c4 * d4)


@dataclass(frozen=True)
class SemigroupQuadrature:
    """Time-quadrature settings for :func:`apply_semigroup`.

    Each mode ``xi`` splits the time axis at ``t0 = tau0 / xi^2``: a power
    series covers ``(0, t0]`` and generalised Gauss-Laguerre covers the rest.
    """

    tau0: float = 1.0
    nodes: int = 64
    tol: float = 1e-8


class QuadratureError(RuntimeError):
    pass


@functools.lru_cache(maxsize=64)
def _semigroup_factor(s: float, tau0: float, nodes: int, tol: float) -> float:
    """``(1/Gamma(-s)) int_0^inf (e^-tau - 1) tau^(-1-s) dtau``, which should be 1."""
    # head: term-by-term integration of the exponential series
    head, k, term = 0.0, 1, 1.0
    while True:
        term *= -tau0 / k
        piece = term * tau0 ** (-s) / (k - s)
        head += piece
        if abs(piece) < 1e-17 * max(abs(head), 1.0) and k > tau0:
            break
        k += 1
        if k > 400:
            raise QuadratureError("series head did not converge; lower tau0")

    def tail(nn: int) -> float:
        u, w = roots_genlaguerre(nn, 0.0)
        return math.exp(-tau0) * float(np.dot(w, (tau0 + u) ** (-1.0 - s))) - tau0 ** (-s) / s

    t_hi, t_lo = tail(nodes), tail(max(nodes * 3 // 4, 8))
    if abs(t_hi - t_lo) > tol * abs(head + t_hi):
        raise QuadratureError(f"tail quadrature estimate {abs(t_hi - t_lo):.2e} above tolerance")
    return (head + t_hi) / gamma_fn(-s)


def apply_semigroup(f: Field, s: float, quad: SemigroupQuadrature = SemigroupQuadrature()) -> Field:
    """``(-Delta)^s f`` from the heat-semigroup time integral, mode by mode.

    For a Fourier mode the heat flow is ``e^{-t xi^2}``; substituting
    ``tau = t xi^2`` turns the time integral into ``xi^(2s)`` times a fixed
    scalar integral, which is evaluated by the split quadrature.
    """
    _require_periodic(f)
    _check_order(s)
    factor = _semigroup_factor(float(s), quad.tau0, quad.nodes, quad.tol)
    return _apply_multiplier(f, factor * f.grid.wavenumbers() ** (2.0 * s))


# --------------------------------------------------------------------------
# bounded domains
# --------------------------------------------------------------------------

def rfl_matrix(g: Grid1D, s: float) -> np.ndarray:
    """Dense restricted fractional Laplacian (zero exterior data)."""
    if g.geometry is Geometry.PERIODIC:
        raise ValueError("RFL needs an interval (DirichletExterior) grid")
    _check_order(s)
    n, h = g.n, g.dx
    col, diag = _toeplitz_column(n, h, s)
    a = scipy.linalg.toeplitz(col)
    a[np.diag_indices(n)] = diag
    c2, c4 = _correction_coeffs(h, s)
    d2 = _second_difference(n, h)
    a += c2 * d2 + c4 * (d2 @ d2)
    return 0.5 * (a + a.T)


def cfl_matrix(g: Grid1D, s: float, dirichlet: bool = False) -> np.ndarray:
    """Dense censored (regional) fractional Laplacian, interaction kernel ``a = 1``.

    With ``dirichlet=False`` the matrix is the regional operator itself: only
    pairs inside the interval interact, so constants are in the kernel.  With
    ``dirichlet=True`` the regional operator is built on a lattice extended by
    one node at each end and those nodes are pinned to zero, which is the
    killed version used for eigenvalue problems.
    """
    if g.geometry is Geometry.PERIODIC:
        raise ValueError("CFL needs an interval grid")
    if not 0.5 < s < 1.0:
        raise ValueError("CFL needs 1/2 < s < 1")
    n = g.n + 2 if dirichlet else g.n
    h = g.dx
    col, _ = _toeplitz_column(n, h, s)
    a = scipy.linalg.toeplitz(col)
    a[np.diag_indices(n)] = 0.0
    a[np.diag_indices(n)] = -a.sum(axis=1)
    c2, c4 = _correction_coeffs(h, s)
    d2 = _second_difference(n, h, "neumann")
    a += c2 * d2 + c4 * (d2 @ d2)
    a = 0.5 * (a + a.T)
    if dirichlet:
        a = a[1:-1, 1:-1].copy()
    return a


def _sfl_basis(g: Grid1D) -> np.ndarray:
    if g.geometry is not Geometry.DIRICHLET_EXTERIOR:
        raise ValueError("SFL needs a DirichletExterior (cell-centred interval) grid")
    return scipy.fft.idst(np.eye(g.n), type=2, norm="ortho", axis=0)


def sfl_eigenvalues(g: Grid1D, s: float, k: int | None = None) -> np.ndarray:
    """``lambda_j^s`` with ``lambda_j = (j pi / L)^2``."""
    j = np.arange(1, (g.n if k is None else k) + 1, dtype=float)
    return (j * np.pi / g.length) ** (2.0 * s)


def sfl_apply(f: Field, s: float, modes: int | None = None) -> Field:
    """Spectral fractional Laplacian through the discrete sine transform."""
    g = f.grid
    if g.geometry is not Geometry.DIRICHLET_EXTERIOR:
        raise ValueError("SFL needs a DirichletExterior (cell-centred interval) grid")
    _check_order(s, allow_one=True)
    modes = g.n if modes is None else int(modes)
    if not 1 <= modes <= g.n:
        raise ValueError("modes must lie in [1, n]")
    c = scipy.fft.dst(f.values, type=2, norm="ortho")
    lam = np.zeros(g.n)
    lam[:modes] = sfl_eigenvalues(g, s, modes)
    return f.with_values(scipy.fft.idst(c * lam, type=2, norm="ortho"))


def sfl_matrix(g: Grid1D, s: float, modes: int | None = None, discrete: bool = False) -> np.ndarray:
    """Dense SFL.

    ``discrete=False`` uses the exact eigenvalues ``(j pi / L)^(2s)``, as
    :func:`sfl_apply` does.  ``discrete=True`` takes the ``s``-th power of the
    cell-centred finite-difference Dirichlet Laplacian instead (same sine
    eigenvectors, eigenvalues ``(4/h^2) sin^2(j pi / 2n)``).  A fractional
    power of an M-matrix is again an M-matrix, so implicit steps with it
    preserve positivity and order; the band-limited exact version does not.
    """
    q = _sfl_basis(g)
    modes = g.n if modes is None else int(modes)
    lam = np.zeros(g.n)
    if discrete:
        j = np.arange(1, modes + 1, dtype=float)
        lam[:modes] = (4.0 / g.dx**2 * np.sin(0.5 * np.pi * j / g.n) ** 2) ** s
    else:
        lam[:modes] = sfl_eigenvalues(g, s, modes)
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)


def classical_laplacian_matrix(g: Grid1D) -> np.ndarray:
    """Dense ``-D2`` (positive semidefinite) with boundary handling from the geometry."""
    kind = "periodic" if g.is_periodic else "dirichlet"
    return -_second_difference(g.n, g.dx, kind)


def spectral_matrix(g: Grid1D, s: float) -> np.ndarray:
    """Dense periodic ``|xi|^(2s)`` multiplier (a symmetric circulant)."""
    if not g.is_periodic:
        raise ValueError("spectral operator needs a periodic grid")
    col = np.fft.irfft(g.wavenumbers() ** (2.0 * s), g.n)
    return scipy.linalg.circulant(col)


def operator_matrix(op: OperatorSpec, g: Grid1D) -> np.ndarray:
    """Dense matrix of a linear diffusion operator on ``g``."""
    kind = op.kind
    if kind is OperatorKind.CLASSICAL_LAPLACIAN:
        return classical_laplacian_matrix(g)
    if kind in (OperatorKind.FRAC_SPECTRAL, OperatorKind.FRAC_SEMIGROUP):
        return spectral_matrix(g, op.s)
    if kind is OperatorKind.FRAC_QUADRATURE:
        if g.is_periodic:
            return scipy.linalg.circulant(np.fft.irfft(quadrature_symbol(g, op.s), g.n))
        return rfl_matrix(g, op.s)
    if kind is OperatorKind.RFL:
        return rfl_matrix(g, op.s)
    if kind is OperatorKind.SFL:
        return sfl_matrix(g, op.s, discrete=True)
    if kind is OperatorKind.CFL:
        return cfl_matrix(g, op.s, dirichlet=True)
    raise ValueError(f"{kind.value} has no dense matrix form")


def apply_operator(op: OperatorSpec, f: Field) -> Field:
    """Apply any operator in its natural (matrix-free when possible) form."""
    kind = op.kind
    if kind is OperatorKind.FRAC_SPECTRAL:
        return apply_spectral(f, op.s)
    if kind is OperatorKind.FRAC_SEMIGROUP:
        return apply_semigroup(f, op.s)
    if kind is OperatorKind.FRAC_QUADRATURE:
        return apply_quadrature(f, op.s)
    if kind is OperatorKind.INVERSE_RIESZ:
        return inverse_riesz(f, op.s)
    if kind is OperatorKind.SFL:
        return sfl_apply(f, op.s)
    return f.with_values(operator_matrix(op, f.grid) @ f.values)


def eigs(op: np.ndarray | OperatorSpec, k: int, grid: Grid1D) -> SpectralDecomposition:
    """Lowest ``k`` eigenpairs of a symmetric operator on ``grid``.

    ``op`` is either a dense symmetric matrix or an SFL spec (whose
    eigenpairs are known in closed form).  Eigenvectors are scaled to unit
    dx-weighted norm and signed to have positive sum.
    """
    if not 1 <= k <= grid.n:
        raise ValueError("k must lie in [1, n]")
    h = grid.dx
    if isinstance(op, OperatorSpec):
        if op.kind is not OperatorKind.SFL:
            op = operator_matrix(op, grid)
        else:
            q = _sfl_basis(grid)[:, :k]
            vals = sfl_eigenvalues(grid, op.s, k)
            vecs = q / math.sqrt(h)
            vecs = vecs * np.sign(vecs.sum(axis=0) + 1e-300)
            return SpectralDecomposition(grid, vals, vecs)
    a = np.asarray(op, dtype=float)
    if a.shape != (grid.n, grid.n):
        raise ValueError("operator matrix does not match the grid")
    try:
        vals, vecs = scipy.linalg.eigh(a, subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise QuadratureError(f"eigensolver failed: {exc}") from exc
    vecs = vecs / math.sqrt(h)
    sgn = np.sign(vecs.sum(axis=0))
    sgn[sgn == 0] = 1.0
    return SpectralDecomposition(grid, vals, vecs * sgn)


def quadratic_form(op_matrix: np.ndarray, f: Field, g: Field | None = None) -> float:
    """``<A f, g>`` in the dx inner product."""
    g = f if g is None else g
    return inner(f.with_values(op_matrix @ f.values), g)
