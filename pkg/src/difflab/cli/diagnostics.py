"""Named diagnostics computed from a finished run (or directly, for static checks).

Each diagnostic maps ``(scenario, run) -> DiagValue``.  Parameters come from
the scenario's ``[params]`` section.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import hyp1f1
from scipy.special import gamma as gamma_fn

from .. import analysis, exact
from ..domain import Field, Geometry, Grid1D, mass
from ..kernels import bg_envelope, fractional_heat_kernel
from ..nonlocal_ops import (
    OperatorKind,
    OperatorSpec,
    apply_quadrature,
    apply_semigroup,
    apply_spectral,
    eigs,
    operator_matrix,
    sfl_eigenvalues,
)
from ..solvers import Nonlinearity, StepControl, Trajectory, burgers_check, implicit_step
from .config import Equation, Scenario


@dataclass
class RunData:
    """What a diagnostic can look at: the scenario, initial data and trajectory."""

    scenario: Scenario
    u0: Field | None = None
    traj: Trajectory | None = None
    extra: dict = field(default_factory=dict)

    def fields_after(self, t_min: float = 0.0) -> list[Field]:
        return [f for f in self.traj.fields if f.time >= t_min] if self.traj else []


@dataclass
class DiagValue:
    value: float
    series: analysis.DiagnosticSeries | None = None
    detail: dict = field(default_factory=dict)


Diagnostic = Callable[[Scenario, RunData], DiagValue]
REGISTRY: dict[str, Diagnostic] = {}


def diagnostic(name: str):
    def deco(fn: Diagnostic) -> Diagnostic:
        REGISTRY[name] = fn
        return fn

    return deco


def _window(sc: Scenario, default: tuple[float, float] | None = None):
    w = sc.param_list("fit_window")
    return (w[0], w[1]) if w else default


def _series(name: str, fields: list[Field], fn: Callable[[Field], float]) -> analysis.DiagnosticSeries:
    pts = [(f.time, fn(f)) for f in fields]
    return analysis.DiagnosticSeries.from_pairs(name, pts)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

@diagnostic("kernel_cauchy_error")
def _kernel_cauchy(sc: Scenario, run: RunData) -> DiagValue:
    """Max over times of the pointwise relative error against the Cauchy profile on |x| <= xmax."""
    xmax = sc.param("xmax", 20.0)
    worst, per = 0.0, {}
    for t in sc.param_list("times", (0.5, 1.0, 2.0)):
        k = fractional_heat_kernel(sc.grid, t, 0.5, whole_line=True)
        sel = np.abs(k.x) <= xmax
        ref = exact.cauchy_kernel(k.x[sel], t)
        err = float(np.max(np.abs(k.values[sel] - ref) / ref))
        per[repr(t)] = err
        worst = max(worst, err)
    return DiagValue(worst, detail=per)


def _bg_data(sc: Scenario, run: RunData):
    key = "bg"
    if key not in run.extra:
        s, t = sc.operator.s, sc.param("t", 1.0)
        k = fractional_heat_kernel(sc.grid, t, s, whole_line=True)
        run.extra[key] = (k, t, s)
    return run.extra[key]


@diagnostic("bg_band_ratio")
def _bg_band(sc: Scenario, run: RunData) -> DiagValue:
    """max/min of P_t / envelope on |x| <= xmax."""
    k, t, s = _bg_data(sc, run)
    sel = np.abs(k.x) <= sc.param("xmax", 800.0)
    r = k.values[sel] / bg_envelope(k.x[sel], t, s)
    lo, hi = float(r.min()), float(r.max())
    return DiagValue(hi / lo if lo > 0 else math.inf, detail={"min": lo, "max": hi})


@diagnostic("bg_band_min")
def _bg_min(sc: Scenario, run: RunData) -> DiagValue:
    k, t, s = _bg_data(sc, run)
    sel = np.abs(k.x) <= sc.param("xmax", 800.0)
    return DiagValue(float(np.min(k.values[sel] / bg_envelope(k.x[sel], t, s))))


@diagnostic("kernel_tail_slope")
def _kernel_tail(sc: Scenario, run: RunData) -> DiagValue:
    k, _, _ = _bg_data(sc, run)
    lo, hi = _window(sc, (400.0, 800.0))
    sel = (k.x >= lo) & (k.x <= hi)
    if np.any(k.values[sel] <= 0):
        return DiagValue(math.nan, detail={"reason": "non-positive kernel values in the tail window"})
    return DiagValue(float(np.polyfit(np.log(k.x[sel]), np.log(k.values[sel]), 1)[0]))


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def operator_battery(g: Grid1D) -> dict[str, np.ndarray]:
    """Gaussian, a box-periodic cosine and a smooth compact bump of radius 4."""
    x = g.x
    y = x / 4.0
    inside = np.abs(y) < 1.0
    bump = np.zeros_like(x)
    bump[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    return {
        "gaussian": np.exp(-x**2),
        "cos": np.cos(2.0 * np.pi * 4.0 * (x - g.left) / g.length),
        "bump": bump,
    }


REPRESENTATIONS: dict[str, Callable[[Field, float], Field]] = {
    "spectral": apply_spectral,
    "semigroup": apply_semigroup,
    "quadrature": apply_quadrature,
}


def validate_operator(s: float, pair: tuple[str, str], grid: Grid1D | None = None) -> dict[str, float]:
    """Max relative L-inf disagreement of two periodic representations on the battery."""
    if not 0.0 < s < 1.0:
        raise ValueError("validate_operator needs 0 < s < 1")
    for p in pair:
        if p not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {p!r}; choose from {sorted(REPRESENTATIONS)}")
    g = grid or Grid1D.centered(40.0, 4096)
    out = {}
    for name, vals in operator_battery(g).items():
        f = Field(g, vals)
        a = REPRESENTATIONS[pair[0]](f, s).values
        b = REPRESENTATIONS[pair[1]](f, s).values
        out[name] = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    return out


@diagnostic("spectral_semigroup")
def _spec_semi(sc: Scenario, run: RunData) -> DiagValue:
    rep = validate_operator(sc.operator.s, ("spectral", "semigroup"), sc.grid)
    return DiagValue(max(rep.values()), detail=rep)


@diagnostic("spectral_quadrature")
def _spec_quad(sc: Scenario, run: RunData) -> DiagValue:
    rep = validate_operator(sc.operator.s, ("spectral", "quadrature"), sc.grid)
    return DiagValue(max(rep.values()), detail=rep)


def gaussian_fractional_laplacian(x, s: float):
    """``(-Delta)^s exp(-x^2) = 4^s Gamma(1/2+s)/sqrt(pi) 1F1(1/2+s; 1/2; -x^2)``."""
    return 4.0**s * gamma_fn(0.5 + s) / math.sqrt(math.pi) * hyp1f1(0.5 + s, 0.5, -np.asarray(x) ** 2)


@diagnostic("quadrature_truncated_exact")
def _quad_trunc(sc: Scenario, run: RunData) -> DiagValue:
    """Zero-exterior quadrature of a Gaussian against the closed form."""
    s = sc.operator.s
    g = Grid1D.centered(40.0, 1024, Geometry.TRUNCATED_LINE)
    got = apply_quadrature(Field(g, np.exp(-g.x**2)), s).values
    ref = gaussian_fractional_laplacian(g.x, s)
    return DiagValue(float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))


def _rfl_sfl(sc: Scenario, run: RunData):
    if "eig" not in run.extra:
        s = sc.operator.s
        k = int(sc.param("modes", 20))
        rfl = eigs(OperatorSpec(OperatorKind.RFL, s), k, sc.grid).eigenvalues
        sfl = sfl_eigenvalues(sc.grid, s, k)
        run.extra["eig"] = (rfl, sfl)
    return run.extra["eig"]


@diagnostic("rfl_sfl_max_ratio")
def _rfl_ratio(sc: Scenario, run: RunData) -> DiagValue:
    rfl, sfl = _rfl_sfl(sc, run)
    j = int(sc.param("compare_modes", 10))
    r = rfl[:j] / sfl[:j]
    return DiagValue(float(r.max()), detail={"ratios": [float(v) for v in r]})


@diagnostic("rfl_growth_exponent")
def _rfl_growth(sc: Scenario, run: RunData) -> DiagValue:
    """Slope of log lambda_j against log j for j in [5, modes]."""
    rfl, _ = _rfl_sfl(sc, run)
    j = np.arange(1, rfl.size + 1)
    sel = j >= 5
    return DiagValue(float(np.polyfit(np.log(j[sel]), np.log(rfl[sel]), 1)[0]))


# --------------------------------------------------------------------------
# PME
# --------------------------------------------------------------------------

def _attractor(sc: Scenario, run: RunData) -> Callable[[np.ndarray, float], np.ndarray]:
    """Self-similar solution with the initial mass and centre of mass."""
    u0 = run.u0
    M, x0 = mass(u0), analysis.center_of_mass(u0)
    eq, m = sc.equation, sc.nonlinearity.m
    if eq is Equation.PME:
        return lambda x, t: exact.pme_barenblatt(x - x0, t, m, 1, M)
    if eq is Equation.FDE:
        return lambda x, t: exact.fde_barenblatt(x - x0, t, m, 1, M)
    if eq is Equation.PMFP:
        return lambda x, t: exact.pmfp_profile(x - x0, t, sc.operator.s, 1, M)
    raise ValueError(f"no attractor for {eq.value}")


@diagnostic("renormalized_sup_error")
def _renorm_sup(sc: Scenario, run: RunData) -> DiagValue:
    """max over outputs of ||u - B||_inf / ||B||_inf (the t^alpha factors cancel)."""
    att = _attractor(sc, run)
    fs = run.fields_after(sc.t0)[1:]
    ser = _series("renormalized_sup_error", fs, lambda f: float(
        np.max(np.abs(f.values - att(f.x, f.time))) / np.max(att(f.x, f.time))))
    return DiagValue(float(ser.values.max()), ser)


@diagnostic("support_exponent")
def _support_exp(sc: Scenario, run: RunData) -> DiagValue:
    fs = run.fields_after(sc.t0)
    ser = _series("support_edge", fs, lambda f: analysis.support_edge(f) - analysis.center_of_mass(run.u0))
    slope, r2 = analysis.fit_power_law(ser, _window(sc))
    return DiagValue(slope, ser, {"r2": r2})


@diagnostic("support_monotone")
def _support_mono(sc: Scenario, run: RunData) -> DiagValue:
    ser = _series("support_edge", run.traj.fields, analysis.support_edge)
    return DiagValue(float(np.all(np.diff(ser.values) >= -1e-12)), ser)


@diagnostic("ab_min")
def _ab_min(sc: Scenario, run: RunData) -> DiagValue:
    """min over outputs of min_x t v_xx with the pressure v = m/(m-1) u^(m-1)."""
    m = sc.nonlinearity.m
    fs = run.fields_after(sc.t0)[1:]
    ser = _series("ab_min", fs, lambda f: analysis.aronson_benilan_min(
        f.with_values(exact.pme_pressure(f.values, m)), f.time))
    return DiagValue(float(ser.values.min()), ser)


def _clt_series(sc: Scenario, run: RunData):
    if "clt" not in run.extra:
        att = _attractor(sc, run)
        m = sc.nonlinearity.m
        lam = 1.0 / (m + 1.0)
        fs = [f for f in run.traj.fields if f.time > 0]
        e = _series("clt_error", fs, lambda f: analysis.clt_error(f, f.time, att, lam, mass=mass(run.u0), mass_tol=1e-6))
        p = _series("pressure_error", fs, lambda f: analysis.pressure_error(f, f.time, att, m))
        run.extra["clt"] = (e, p)
    return run.extra["clt"]


@diagnostic("clt_error_decreasing")
def _clt_dec(sc: Scenario, run: RunData) -> DiagValue:
    e, _ = _clt_series(sc, run)
    after = e.times >= sc.param("decreasing_after", 0.0)
    return DiagValue(float(np.all(np.diff(e.values[after]) <= 0.0)), e)


@diagnostic("clt_error_final_ratio")
def _clt_ratio(sc: Scenario, run: RunData) -> DiagValue:
    e, _ = _clt_series(sc, run)
    return DiagValue(float(e.values[-1] / e.values[0]), e)


@diagnostic("pressure_error_exponent")
def _press_exp(sc: Scenario, run: RunData) -> DiagValue:
    """Decay exponent (minus the log-log slope) of the renormalised pressure error."""
    _, p = _clt_series(sc, run)
    slope, r2 = analysis.fit_power_law(p, _window(sc))
    return DiagValue(-slope, p, {"r2": r2})


# --------------------------------------------------------------------------
# propagation, tails, PMFP
# --------------------------------------------------------------------------

@diagnostic("support_growth_cells")
def _growth(sc: Scenario, run: RunData) -> DiagValue:
    e0 = analysis.support_edge(run.u0)
    e1 = analysis.support_edge(run.traj.final)
    return DiagValue((e1 - e0) / sc.grid.dx)


@diagnostic("min_value")
def _min_value(sc: Scenario, run: RunData) -> DiagValue:
    return DiagValue(float(np.min(run.traj.final.values)))


@diagnostic("tail_slope")
def _tail(sc: Scenario, run: RunData) -> DiagValue:
    f = run.traj.final
    lo, hi = _window(sc, (15.0, 50.0))
    sel = (f.x >= lo) & (f.x <= hi)
    if np.any(f.values[sel] <= 0):
        return DiagValue(math.nan, detail={"reason": "non-positive values in the tail window"})
    return DiagValue(float(np.polyfit(np.log(f.x[sel]), np.log(f.values[sel]), 1)[0]))


@diagnostic("linf_decay_exponent")
def _linf(sc: Scenario, run: RunData) -> DiagValue:
    ser = _series("linf", run.fields_after(sc.t0), lambda f: float(np.max(f.values)))
    slope, r2 = analysis.fit_power_law(ser, _window(sc))
    return DiagValue(-slope, ser, {"r2": r2})


@diagnostic("entropy_monotone")
def _entropy(sc: Scenario, run: RunData) -> DiagValue:
    ser = _series("entropy", run.traj.fields, analysis.entropy)
    inc = np.diff(ser.values)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(ser.values))))
    return DiagValue(float(np.all(inc <= tol)), ser, {"max_increase": float(inc.max())})


@diagnostic("mass_drift")
def _mass_drift(sc: Scenario, run: RunData) -> DiagValue:
    m0 = mass(run.u0)
    ser = _series("mass", run.traj.fields, mass)
    return DiagValue(float(np.max(np.abs(ser.values - m0)) / abs(m0)), ser)


# --------------------------------------------------------------------------
# KPP
# --------------------------------------------------------------------------

def _front(sc: Scenario, run: RunData) -> analysis.DiagnosticSeries:
    t, x = run.traj.series_arrays("front")
    return analysis.DiagnosticSeries("front", t, x)


@diagnostic("front_speed")
def _front_speed(sc: Scenario, run: RunData) -> DiagValue:
    ser = _front(sc, run)
    lo, hi = _window(sc, (0.5 * sc.t_end, sc.t_end))
    sel = (ser.times >= lo) & (ser.times <= hi)
    return DiagValue(analysis.fit_linear(ser.times[sel], ser.values[sel]), ser)


def _front_log(sc: Scenario, run: RunData):
    ser = _front(sc, run)
    lo, hi = _window(sc, (0.5 * sc.t_end, sc.t_end))
    sel = (ser.times >= lo) & (ser.times <= hi)
    rate, r2 = analysis.fit_exponential(ser.times[sel], ser.values[sel])
    return rate, r2, ser


@diagnostic("front_log_rate")
def _front_rate(sc: Scenario, run: RunData) -> DiagValue:
    rate, r2, ser = _front_log(sc, run)
    return DiagValue(rate, ser, {"r2": r2})


@diagnostic("front_log_r2")
def _front_r2(sc: Scenario, run: RunData) -> DiagValue:
    rate, r2, ser = _front_log(sc, run)
    return DiagValue(r2, ser, {"rate": rate})


# --------------------------------------------------------------------------
# bounded domains
# --------------------------------------------------------------------------

def phi1(sc: Scenario) -> Field:
    return eigs(sc.operator, 1, sc.grid).eigenfunctions[0]


@diagnostic("ghp_band")
def _ghp(sc: Scenario, run: RunData) -> DiagValue:
    """max/min of the GHP ratio pooled over all outputs after t0."""
    m = sc.nonlinearity.m
    sigma = analysis.sigma_exponent(sc.operator.s, m, sc.operator.gamma)
    ctx = analysis.GhpContext(phi1(sc), sigma, m, run.extra.get("tstar", 1.0))
    after = sc.param("after", 0.0) * run.extra.get("tstar", 1.0)
    fs = [f for f in run.traj.fields if f.time >= after * (1 - 1e-12) and f.time > 0]
    pairs = [analysis.ghp_ratio(f, f.time, ctx) for f in fs]
    lo = min(p[0] for p in pairs)
    hi = max(p[1] for p in pairs)
    ser = analysis.DiagnosticSeries.from_pairs("ghp_max_over_min", [(f.time, p[1] / p[0]) for f, p in zip(fs, pairs)])
    return DiagValue(hi / lo, ser, {"min": lo, "max": hi, "sigma": sigma})


@diagnostic("boundary_power")
def _bpow(sc: Scenario, run: RunData) -> DiagValue:
    m = sc.nonlinearity.m
    sigma = analysis.sigma_exponent(sc.operator.s, m, sc.operator.gamma)
    p = analysis.boundary_power(run.traj.final, phi1(sc))
    return DiagValue(p, detail={"phi1_power": 1.0, "matching_power": sigma / m})


@diagnostic("separable_error")
def _sep(sc: Scenario, run: RunData) -> DiagValue:
    """Relative error against the separable solution at ``t = at * t0``; bound in detail."""
    m = sc.nonlinearity.m
    S = Field(sc.grid, exact.separable_profile(operator_matrix(sc.operator, sc.grid), m))
    t0 = run.extra.get("tstar", 1.0)
    t = sc.param("at", 10.0) * t0
    f = run.traj.at(t)
    err = analysis.separable_relative_error(f, f.time, S, m)
    ser = _series("separable_error", [g for g in run.traj.fields if g.time > 0],
                  lambda g: analysis.separable_relative_error(g, g.time, S, m))
    bound = 2.0 / (m - 1.0) * t0 / (t0 + f.time) + 0.05
    return DiagValue(err, ser, {"time": f.time, "bound": bound, "margin": bound - err})


@diagnostic("separable_margin")
def _sep_margin(sc: Scenario, run: RunData) -> DiagValue:
    """``bound - error`` (positive when the error is below the rate bound)."""
    d = _sep(sc, run)
    return DiagValue(d.detail["margin"], d.series, d.detail)


@diagnostic("extinction_time")
def _extinct(sc: Scenario, run: RunData) -> DiagValue:
    t = analysis.extinction_detector(run.traj.fields)
    return DiagValue(math.inf if t is None else t)


# --------------------------------------------------------------------------
# closed forms, semigroup structure, Burgers
# --------------------------------------------------------------------------

for _fam in analysis.RESIDUALS:

    def _make(fam):
        def fn(sc: Scenario, run: RunData) -> DiagValue:
            dx = sc.param("dx", 0.1)
            return DiagValue(analysis.residual_ratio(fam, dx), detail={
                "residual": analysis.residual(fam, dx), "residual_half": analysis.residual(fam, 0.5 * dx)})

        return fn

    REGISTRY[f"residual_ratio_{_fam.replace('-', '_')}"] = _make(_fam)


@diagnostic("logdiff_mass_loss_rate")
def _logdiff(sc: Scenario, run: RunData) -> DiagValue:
    return DiagValue(analysis.logdiff_mass_loss_rate())


def semigroup_cases() -> list[tuple[str, Grid1D, Nonlinearity, OperatorSpec]]:
    """Every implicit solver configuration exercised by the structure checks."""
    gp = Grid1D.centered(8.0, 64)
    gd = Grid1D(-1.0, 2.0, 64, Geometry.DIRICHLET_EXTERIOR)
    lap = OperatorSpec(OperatorKind.CLASSICAL_LAPLACIAN)
    pw2 = Nonlinearity.power(2.0)
    return [
        ("filtration-pme", gp, pw2, lap),
        ("filtration-fde", gp, Nonlinearity.power(0.5), lap),
        ("filtration-log1p", gp, Nonlinearity("Log1p"), lap),
        ("filtration-stefan", gp, Nonlinearity("StefanGraph", latent=1.0), lap),
        ("filtration-heat", gp, Nonlinearity(), lap),
        ("fpme-spectral", gp, pw2, OperatorSpec(OperatorKind.FRAC_SPECTRAL, 0.5)),
        ("fpme-quadrature", gp, pw2, OperatorSpec(OperatorKind.FRAC_QUADRATURE, 0.5)),
        ("fpme-rfl", gd, pw2, OperatorSpec(OperatorKind.RFL, 0.5)),
        ("fpme-sfl", gd, pw2, OperatorSpec(OperatorKind.SFL, 0.5)),
        ("fpme-cfl", gd, pw2, OperatorSpec(OperatorKind.CFL, 0.75)),
    ]


def semigroup_structure(pairs: int = 100, seed: int = 0, h: float = 0.01, amplitude: float = 2.5,
                        control: StepControl | None = None) -> dict[str, tuple[float, float]]:
    """Worst L1-contraction excess and order violation per solver over random ordered pairs."""
    rng = np.random.default_rng(seed)
    ctl = control or StepControl(h=h)
    out = {}
    for name, g, phi, op in semigroup_cases():
        worst_c = worst_o = 0.0
        w = g.weights
        for _ in range(pairs):
            u = amplitude * rng.uniform(0.0, 1.0, g.n) * (rng.uniform(size=g.n) < 0.7)
            v = u + amplitude * rng.uniform(0.0, 1.0, g.n) * (rng.uniform(size=g.n) < 0.5)
            a, _ = implicit_step(Field(g, u), h, phi, op, ctl)
            b, _ = implicit_step(Field(g, v), h, phi, op, ctl)
            worst_c = max(worst_c, float(np.dot(np.abs(a.values - b.values), w) - np.dot(np.abs(u - v), w)))
            worst_o = max(worst_o, float(np.max(a.values - b.values)))
        out[name] = (worst_c, worst_o)
    return out


def _structure(sc: Scenario, run: RunData):
    if "structure" not in run.extra:
        run.extra["structure"] = semigroup_structure(
            int(sc.param("pairs", 100)), int(sc.param("seed", 0)), sc.step.h, sc.param("amplitude", 2.5), sc.step)
    return run.extra["structure"]


@diagnostic("contraction_violation")
def _contr(sc: Scenario, run: RunData) -> DiagValue:
    res = _structure(sc, run)
    return DiagValue(max(0.0, max(c for c, _ in res.values())), detail={k: c for k, (c, _) in res.items()})


@diagnostic("order_violation")
def _order(sc: Scenario, run: RunData) -> DiagValue:
    res = _structure(sc, run)
    return DiagValue(max(0.0, max(o for _, o in res.values())), detail={k: o for k, (_, o) in res.items()})


@diagnostic("burgers_decreasing")
def _burgers(sc: Scenario, run: RunData) -> DiagValue:
    a = sc.param("amplitude", 0.5)
    g = sc.grid
    u0 = Field(g, a * np.cos(g.x))
    rep = burgers_check(u0, sc.param("t", 1.0), v0_fn=lambda x: a * np.sin(x),
                        s_values=sc.param_list("s_values", (0.9, 0.95, 0.99)))
    return DiagValue(float(rep.decreasing), detail={
        "s": [float(v) for v in rep.s_values], "deviation": [float(v) for v in rep.deviations]})


def evaluate(name: str, sc: Scenario, run: RunData) -> DiagValue:
    try:
        fn = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown diagnostic {name!r}") from None
    return fn(sc, run)
