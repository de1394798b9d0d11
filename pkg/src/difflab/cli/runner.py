"""Execute scenarios and write CSV fields, diagnostic series and a JSON summary."""
from __future__ import annotations

import dataclasses
import json
import math
import time
import traceback
import warnings
from pathlib import Path

import numpy as np

from .. import analysis, exact
from ..domain import Field, sample
from ..kernels import fractional_heat_kernel, gaussian_kernel, heat_convolve
from ..nonlocal_ops import OperatorKind, OperatorSpec
from ..solvers import Reaction, StepControl, Trajectory, run_filtration, run_fpme, run_kpp, run_pmfp
from ..solvers.reaction import front_position
from ..solvers.trajectory import output_schedule
from .config import DiagnosticResult, Equation, InitialKind, RunSummary, Scenario, ScenarioError
from .diagnostics import REGISTRY, RunData, evaluate, phi1

FMT = "{:.17g}"


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

def initial_field(sc: Scenario) -> Field:
    g, kind, p = sc.grid, sc.initial, sc.initial_param
    x = g.x
    c = p("center", 0.0)
    amp = p("amplitude", 1.0)
    if kind is InitialKind.BARENBLATT:
        M, t0, eq = p("mass", 1.0), sc.t0, sc.equation
        if eq is Equation.PME:
            vals = exact.pme_barenblatt(x - c, t0, sc.nonlinearity.m, 1, M)
        elif eq is Equation.FDE:
            vals = exact.fde_barenblatt(x - c, t0, sc.nonlinearity.m, 1, M)
        elif eq is Equation.PMFP:
            vals = exact.pmfp_profile(x - c, t0, sc.operator.s, 1, M)
        elif eq is Equation.HE:
            vals = M * gaussian_kernel(x - c, t0)
        elif eq is Equation.FHE:
            vals = M * np.roll(fractional_heat_kernel(g, t0, sc.operator.s).values, int(round(c / g.dx)))
        else:
            raise ScenarioError(f"no Barenblatt-type profile for {eq.value}")
        return Field(g, np.asarray(vals, dtype=float), t0)
    if kind is InitialKind.GAUSSIAN:
        vals = amp * np.exp(-(((x - c) / p("width", 1.0)) ** 2))
    elif kind is InitialKind.BOX:
        vals = np.where(np.abs(x - c) <= p("halfwidth", 1.0), amp, 0.0)
    elif kind is InitialKind.BUMP:
        vals = amp * np.maximum(1.0 - ((x - c) / p("radius", 1.0)) ** 2, 0.0) ** p("power", 1.0)
    elif kind is InitialKind.TWO_BUMPS:
        d, r = p("separation", 4.0), p("radius", 1.0)
        vals = sum(
            a * np.maximum(1.0 - ((x - xc) / r) ** 2, 0.0)
            for a, xc in ((amp, c - 0.5 * d), (p("amplitude_right", amp), c + 0.5 * d))
        )
    elif kind is InitialKind.EIGEN:
        vals = amp * phi1(sc).values
    elif kind is InitialKind.STEP:
        vals = np.where(x <= c, amp, 0.0)
    elif kind is InitialKind.CUSTOM:
        path = dict(sc.initial_params)["table"]
        tab = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        vals = np.interp(x, tab[:, 0], tab[:, 1], left=0.0, right=0.0)
    else:
        raise ScenarioError(f"{sc.equation.value} needs initial data")
    return Field(g, np.asarray(vals, dtype=float), sc.t0)


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def _rescale_time(sc: Scenario, u0: Field) -> tuple[Scenario, float]:
    """With ``time_unit = tstar`` the times in the config are multiples of t_*."""
    if sc.param("time_unit", "", str) != "tstar":
        return sc, 1.0
    ts = analysis.t_star(u0, phi1(sc), sc.nonlinearity.m)
    step = dataclasses.replace(sc.step, h=sc.step.h * ts)
    return dataclasses.replace(
        sc, t0=sc.t0 * ts, t_end=sc.t_end * ts, outputs=tuple(t * ts for t in sc.outputs), step=step
    ), ts


def simulate(sc: Scenario) -> RunData:
    if sc.equation is Equation.STATIC:
        return RunData(sc)
    u0 = initial_field(sc)
    sc, ts = _rescale_time(sc, u0)
    run = RunData(sc, u0, extra={"tstar": ts} if ts != 1.0 else {})
    eq, ctl = sc.equation, sc.step
    if eq in (Equation.HE, Equation.FHE):
        s = 1.0 if eq is Equation.HE else sc.operator.s
        traj = Trajectory(fields=[u0])
        for t in output_schedule(sc.t0, sc.t_end, sc.outputs):
            traj.fields.append(Field(sc.grid, heat_convolve(u0, t - sc.t0, s).values, t))
    elif eq in (Equation.PME, Equation.FDE, Equation.FILTRATION):
        traj = run_filtration(u0, sc.t_end, ctl, sc.nonlinearity, sc.operator, sc.outputs)
    elif eq is Equation.FPME:
        traj = run_fpme(u0, sc.t_end, ctl, sc.nonlinearity.m, sc.operator, sc.outputs)
    elif eq is Equation.PMFP:
        traj = run_pmfp(u0, sc.t_end, ctl, sc.operator.s, sc.outputs)
    elif eq in (Equation.KPP, Equation.FRAC_KPP):
        f = Reaction("logistic", sc.param("rate", 1.0))
        op = sc.operator if eq is Equation.FRAC_KPP else OperatorSpec(OperatorKind.CLASSICAL_LAPLACIAN)
        traj = run_kpp(u0, sc.t_end, ctl.h, op, f, sc.outputs,
                       monitors={"front": front_position}, record_every=int(sc.param("front_every", 1)))
    else:  # pragma: no cover - enum is exhaustive
        raise ScenarioError(f"unsupported equation {eq.value}")
    run.traj = traj
    return run


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _slug(name: str) -> str:
    return name.replace("/", "__")


def write_field(path: Path, f: Field) -> None:
    with path.open("w") as fh:
        fh.write("x,u\n")
        for x, u in zip(f.x, f.values):
            fh.write(f"{FMT.format(x)},{FMT.format(u)}\n")


def write_series(path: Path, ser: analysis.DiagnosticSeries) -> None:
    with path.open("w") as fh:
        fh.write("time,value\n")
        for t, v in zip(ser.times, ser.values):
            fh.write(f"{FMT.format(t)},{FMT.format(v)}\n")


def _write_fields(sc: Scenario, run: RunData, folder: Path) -> None:
    if run.traj is None or sc.save_fields == "none":
        return
    fs = run.traj.fields if sc.save_fields == "all" else [run.traj.final]
    for i, f in enumerate(fs):
        write_field(folder / f"field_{i:04d}.csv", f)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj))


def _finite(v: float):
    return v if math.isfinite(v) else repr(v)


def write_summary(summary: RunSummary, path: Path) -> None:
    d = summary.to_dict()
    for item in d["diagnostics"]:
        item["value"] = _finite(float(item["value"]))
    path.write_text(json.dumps(d, indent=2, default=_json_default) + "\n")


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def scenario_parameters(sc: Scenario) -> dict:
    g = sc.grid
    return {
        "equation": sc.equation.value,
        "operator": sc.operator.kind.value,
        "s": sc.operator.s,
        "nonlinearity": sc.nonlinearity.kind.value,
        "m": sc.nonlinearity.m,
        "grid": {"left": g.left, "length": g.length, "n": g.n, "geometry": g.geometry.value},
        "initial": sc.initial.value,
        "t0": sc.t0,
        "t_end": sc.t_end,
        "h": sc.step.h,
    }


def run_case(sc: Scenario, out_dir: Path | None, summary: RunSummary, prefix: str = "") -> None:
    """Run one expanded case and append its diagnostics to ``summary``."""
    sc.validate()
    for name, _ in sc.diagnostics:
        if name not in REGISTRY:
            raise ScenarioError(f"unknown diagnostic {name!r}")
    folder = None
    if out_dir is not None:
        folder = out_dir / _slug(sc.name)
        folder.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        run = simulate(sc)
        if folder is not None:
            _write_fields(run.scenario, run, folder)
        checks = run.scenario.checks()
        for name, check in checks.items():
            dv = evaluate(name, run.scenario, run)
            passed = check.evaluate(dv.value) if check.active else None
            summary.diagnostics.append(DiagnosticResult(prefix + name, float(dv.value), check.text, passed, dv.detail))
            if folder is not None and dv.series is not None:
                write_series(folder / f"diag_{name}.csv", dv.series)
    summary.warnings.extend(f"{prefix}{w.category.__name__}: {w.message}" for w in caught)
    if run.traj is not None:
        summary.warnings.extend(prefix + w for w in run.traj.warnings)
    summary.parameters[sc.name] = scenario_parameters(run.scenario)


def run_scenario(sc: Scenario, out_dir: str | Path | None = None) -> RunSummary:
    """Run every case of ``sc``.  Runtime failures are recorded, not raised."""
    out = Path(out_dir) if out_dir is not None else None
    summary = RunSummary(sc.name)
    t_start = time.perf_counter()
    cases = sc.expand()
    for case in cases:
        prefix = case.name.split("/", 1)[1] + "." if "/" in case.name else ""
        try:
            run_case(case, out, summary, prefix)
        except ScenarioError:
            raise
        except Exception as exc:  # runtime abort: keep partial outputs
            summary.error = f"{case.name}: {type(exc).__name__}: {exc}"
            summary.warnings.append(traceback.format_exc(limit=3))
            break
    summary.wall_time = time.perf_counter() - t_start
    if out is not None:
        folder = out / _slug(sc.name)
        folder.mkdir(parents=True, exist_ok=True)
        write_summary(summary, folder / "summary.json")
    return summary
