"""Declarative scenario configs in INI form.

A config has the sections ``[scenario]``, ``[grid]``, ``[step]`` and
``[diagnostics]``; optional ``[initial]`` and ``[params]`` sections carry
initial-data and diagnostic parameters.  Sections named ``[case:NAME]`` hold
dotted overrides (``grid.n = 1024``, ``scenario.s = 0.25``,
``diagnostics.tail_slope = -1.5 +- 2%``); each case is run separately.
If a case sets any ``diagnostics.*`` key its diagnostics replace the base list.

Checks in ``[diagnostics]`` are written ``<= x``, ``>= x``, ``< x``, ``> x``,
``a +- b``, ``a +- b%`` or ``true``; an empty value records the diagnostic
without a check.
"""
from __future__ import annotations

import configparser
import dataclasses
import enum
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..domain import Geometry, Grid1D
from ..nonlocal_ops import OperatorKind, OperatorSpec
from ..solvers import NonlinKind, Nonlinearity, StepControl


class ScenarioError(ValueError):
    """Invalid scenario: unparsable config or an inconsistent combination."""


class Equation(str, enum.Enum):
    HE = "HE"
    FHE = "FHE"
    PME = "PME"
    FDE = "FDE"
    FILTRATION = "Filtration"
    FPME = "FPME"
    PMFP = "PMFP"
    KPP = "KPP"
    FRAC_KPP = "FracKPP"
    STATIC = "Static"  # no time stepping: operator, kernel and closed-form checks


class InitialKind(str, enum.Enum):
    BARENBLATT = "BarenblattSample"
    GAUSSIAN = "Gaussian"
    BOX = "Box"
    TWO_BUMPS = "TwoBumps"
    CUSTOM = "Custom"
    BUMP = "Bump"
    EIGEN = "Eigenfunction"
    STEP = "Step"
    NONE = "None"


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------

_CHECK_RE = re.compile(
    r"^\s*(?:(?P<cmp><=|>=|<|>)\s*(?P<bound>\S+)|(?P<target>\S+)\s*\+-\s*(?P<tol>[^%\s]+)\s*(?P<pct>%)?|(?P<true>true))\s*$"
)


@dataclass(frozen=True)
class Check:
    """A declared target for one diagnostic value."""

    text: str

    def __post_init__(self) -> None:
        if self.text.strip() and not _CHECK_RE.match(self.text):
            raise ScenarioError(f"cannot parse check {self.text!r}")

    @property
    def active(self) -> bool:
        return bool(self.text.strip())

    def evaluate(self, value: float) -> bool:
        """Does ``value`` satisfy the check?  Non-finite values never pass."""
        m = _CHECK_RE.match(self.text)
        if m is None:
            return True
        if m["true"]:
            return bool(value)
        v = float(value)
        if not math.isfinite(v):
            return False
        if m["cmp"]:
            b = float(m["bound"])
            return {"<=": v <= b, ">=": v >= b, "<": v < b, ">": v > b}[m["cmp"]]
        target, tol = float(m["target"]), float(m["tol"])
        if m["pct"]:
            tol = abs(target) * tol / 100.0
        return abs(v - target) <= tol

    def describe(self) -> dict:
        m = _CHECK_RE.match(self.text)
        if m is None or not self.active:
            return {}
        if m["true"]:
            return {"kind": "true"}
        if m["cmp"]:
            return {"kind": m["cmp"], "bound": float(m["bound"])}
        return {"kind": "+-", "target": float(m["target"]), "tol": float(m["tol"]), "relative": bool(m["pct"])}


# --------------------------------------------------------------------------
# scenario
# --------------------------------------------------------------------------

Pairs = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Scenario:
    """One experiment: equation, operator, grid, data, steps and diagnostics."""

    name: str
    equation: Equation = Equation.STATIC
    operator: OperatorSpec = OperatorSpec()
    nonlinearity: Nonlinearity = Nonlinearity()
    grid: Grid1D = Grid1D(-1.0, 2.0, 64, Geometry.PERIODIC)
    initial: InitialKind = InitialKind.NONE
    initial_params: Pairs = ()
    t0: float = 0.0
    t_end: float = 0.0
    step: StepControl = StepControl()
    outputs: tuple[float, ...] = ()
    diagnostics: Pairs = ()
    params: Pairs = ()
    cases: tuple[tuple[str, Pairs], ...] = ()
    anchor: str = ""
    save_fields: str = "all"

    # ------------------------------------------------------------------
    def param(self, key: str, default=None, cast=float):
        for k, v in self.params:
            if k == key:
                return cast(v)
        return default

    def param_list(self, key: str, default: tuple = ()) -> tuple[float, ...]:
        raw = self.param(key, None, str)
        return default if raw is None else parse_float_list(raw)

    def initial_param(self, key: str, default: float) -> float:
        for k, v in self.initial_params:
            if k == key:
                return float(v)
        return default

    def checks(self) -> dict[str, Check]:
        return {k: Check(v) for k, v in self.diagnostics}

    # ------------------------------------------------------------------
    def validate(self) -> None:
        """Raise :class:`ScenarioError` listing every violated constraint."""
        problems = []
        eq, op, g = self.equation, self.operator, self.grid
        if eq is Equation.PMFP and not g.is_periodic:
            problems.append("PMFP requires periodic geometry")
        if eq in (Equation.HE, Equation.FHE, Equation.FRAC_KPP) and not g.is_periodic:
            problems.append(f"{eq.value} requires periodic geometry")
        if eq is Equation.FHE and op.kind is OperatorKind.CLASSICAL_LAPLACIAN:
            problems.append("FHE requires a fractional operator")
        if eq is Equation.FRAC_KPP and op.kind is not OperatorKind.FRAC_SPECTRAL:
            problems.append("FracKPP requires the FracSpectral operator")
        if eq in (Equation.PME, Equation.FDE, Equation.KPP, Equation.HE, Equation.FILTRATION) \
                and op.kind is not OperatorKind.CLASSICAL_LAPLACIAN:
            problems.append(f"{eq.value} uses the classical Laplacian")
        if eq is Equation.PME and not (self.nonlinearity.kind is NonlinKind.POWER and self.nonlinearity.m > 1):
            problems.append("PME requires a Power nonlinearity with m > 1")
        if eq is Equation.FDE and not (self.nonlinearity.kind is NonlinKind.POWER and self.nonlinearity.m < 1):
            problems.append("FDE requires a Power nonlinearity with m < 1")
        if eq is Equation.FPME:
            if op.kind in (OperatorKind.CLASSICAL_LAPLACIAN, OperatorKind.INVERSE_RIESZ, OperatorKind.FRAC_SEMIGROUP):
                problems.append(f"FPME does not support the {op.kind.value} operator")
            if self.nonlinearity.kind is not NonlinKind.POWER:
                problems.append("FPME requires a Power nonlinearity")
            if op.is_bounded_domain and g.geometry is not Geometry.DIRICHLET_EXTERIOR:
                problems.append(f"{op.kind.value} requires DirichletExterior geometry")
            if op.kind is OperatorKind.FRAC_SPECTRAL and not g.is_periodic:
                problems.append("FracSpectral requires periodic geometry")
        if eq is not Equation.STATIC:
            if not self.t_end > self.t0:
                problems.append("t_end must exceed t0")
            if self.initial is InitialKind.NONE:
                problems.append(f"{eq.value} needs initial data")
        if self.initial is InitialKind.BARENBLATT and not self.t0 > 0:
            problems.append("BarenblattSample needs t0 > 0")
        if self.initial is InitialKind.CUSTOM and not any(k == "table" for k, _ in self.initial_params):
            problems.append("Custom initial data needs a 'table' path")
        if any(t < self.t0 or t > self.t_end for t in self.outputs):
            problems.append("output times must lie in [t0, t_end]")
        if self.save_fields not in ("all", "final", "none"):
            problems.append("save_fields must be all, final or none")
        if problems:
            raise ScenarioError(f"scenario {self.name!r}: " + "; ".join(problems))

    def expand(self) -> list["Scenario"]:
        """Concrete single-case scenarios (the scenario itself if it has no cases)."""
        if not self.cases:
            return [self]
        base = to_config(dataclasses.replace(self, cases=()))
        out = []
        for case, overrides in self.cases:
            cp = _copy_parser(base)
            if any(k.startswith("diagnostics.") for k, _ in overrides):
                cp.remove_section("diagnostics")
                cp.add_section("diagnostics")
            for key, val in overrides:
                sec, _, opt = key.partition(".")
                if not cp.has_section(sec):
                    cp.add_section(sec)
                cp.set(sec, opt, val)
            cp.set("scenario", "name", f"{self.name}/{case}")
            out.append(from_config(cp))
        return out


# --------------------------------------------------------------------------
# parsing and serialisation
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def parse_float_list(text: str) -> tuple[float, ...]:
    """``1, 2, 3``, ``geom:a:b:n`` (log-spaced) or ``lin:a:b:n``."""
    text = text.strip()
    if not text:
        return ()
    if text.startswith(("geom:", "lin:")):
        kind, a, b, n = text.split(":")
        fn = np.geomspace if kind == "geom" else np.linspace
        return tuple(float(v) for v in fn(float(a), float(b), int(n)))
    return tuple(float(v) for v in text.split(","))


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keep key case
    return cp


def _copy_parser(cp: configparser.ConfigParser) -> configparser.ConfigParser:
    buf = io.StringIO()
    cp.write(buf)
    out = _new_parser()
    out.read_string(buf.getvalue())
    return out


def from_config(cp: configparser.ConfigParser) -> Scenario:
    for sec in ("scenario", "grid"):
        if not cp.has_section(sec):
            raise ScenarioError(f"missing [{sec}] section")
    sc = cp["scenario"]
    try:
        name = sc["name"]
        equation = Equation(sc.get("equation", "Static"))
        operator = OperatorSpec(OperatorKind(sc.get("operator", "ClassicalLaplacian")), float(sc.get("s", "1.0")))
        nonlin = Nonlinearity(
            NonlinKind(sc.get("nonlinearity", "Identity")),
            m=float(sc.get("m", "1.0")),
            latent=float(sc.get("latent", "1.0")),
            eps=float(sc.get("eps", "1e-06")),
        )
        gs = cp["grid"]
        grid = Grid1D(float(gs["left"]), float(gs["length"]), int(gs["n"]), Geometry(gs.get("geometry", "Periodic")))
        st = cp["step"] if cp.has_section("step") else {}
        step = StepControl(
            h=float(st.get("h", "0.001")),
            newton_tol=float(st.get("newton_tol", "1e-10")),
            newton_max=int(st.get("newton_max", "50")),
            cfl_safety=float(st.get("cfl_safety", "0.45")),
        )
        scen = Scenario(
            name=name,
            equation=equation,
            operator=operator,
            nonlinearity=nonlin,
            grid=grid,
            initial=InitialKind(sc.get("initial", "None")),
            initial_params=tuple(cp["initial"].items()) if cp.has_section("initial") else (),
            t0=float(sc.get("t0", "0.0")),
            t_end=float(sc.get("t_end", "0.0")),
            step=step,
            outputs=parse_float_list(sc.get("outputs", "")),
            diagnostics=tuple(cp["diagnostics"].items()) if cp.has_section("diagnostics") else (),
            params=tuple(cp["params"].items()) if cp.has_section("params") else (),
            cases=tuple(
                (sec.split(":", 1)[1], tuple(cp[sec].items())) for sec in cp.sections() if sec.startswith("case:")
            ),
            anchor=sc.get("anchor", ""),
            save_fields=sc.get("save_fields", "all"),
        )
    except ScenarioError:
        raise
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"invalid config: {exc}") from exc
    for _, text in scen.diagnostics:
        Check(text)
    return scen


def parse_text(text: str) -> Scenario:
    cp = _new_parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"cannot parse config: {exc}") from exc
    return from_config(cp)


def load(path: str | Path) -> Scenario:
    return parse_text(Path(path).read_text())


def to_config(s: Scenario) -> configparser.ConfigParser:
    cp = _new_parser()
    cp["scenario"] = {
        "name": s.name,
        "anchor": s.anchor,
        "equation": s.equation.value,
        "operator": s.operator.kind.value,
        "s": _fmt(s.operator.s),
        "nonlinearity": s.nonlinearity.kind.value,
        "m": _fmt(s.nonlinearity.m),
        "latent": _fmt(s.nonlinearity.latent),
        "eps": _fmt(s.nonlinearity.eps),
        "initial": s.initial.value,
        "t0": _fmt(s.t0),
        "t_end": _fmt(s.t_end),
        "outputs": ", ".join(_fmt(t) for t in s.outputs),
        "save_fields": s.save_fields,
    }
    g = s.grid
    cp["grid"] = {"left": _fmt(g.left), "length": _fmt(g.length), "n": str(g.n), "geometry": g.geometry.value}
    st = s.step
    cp["step"] = {
        "h": _fmt(st.h),
        "newton_tol": _fmt(st.newton_tol),
        "newton_max": str(st.newton_max),
        "cfl_safety": _fmt(st.cfl_safety),
    }
    cp["initial"] = dict(s.initial_params)
    cp["params"] = dict(s.params)
    cp["diagnostics"] = dict(s.diagnostics)
    for case, overrides in s.cases:
        cp[f"case:{case}"] = dict(overrides)
    return cp


def dumps(s: Scenario) -> str:
    buf = io.StringIO()
    to_config(s).write(buf)
    return buf.getvalue()


def dump(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps(s))


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class DiagnosticResult:
    name: str
    value: float
    check: str = ""
    passed: bool | None = None
    detail: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    """Outcome of one scenario (all of its cases)."""

    scenario: str
    wall_time: float = 0.0
    diagnostics: list[DiagnosticResult] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[DiagnosticResult]:
        return [d for d in self.diagnostics if d.passed is False]

    @property
    def ok(self) -> bool:
        return self.error is None and not self.failed

    @property
    def n_checks(self) -> int:
        return sum(d.passed is not None for d in self.diagnostics)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "wall_time": self.wall_time,
            "ok": self.ok,
            "n_checks": self.n_checks,
            "error": self.error,
            "parameters": self.parameters,
            "warnings": list(self.warnings),
            "diagnostics": [
                {
                    "name": d.name,
                    "value": d.value,
                    "check": d.check,
                    "target": Check(d.check).describe() if d.check else {},
                    "passed": d.passed,
                    **({"detail": d.detail} if d.detail else {}),
                }
                for d in self.diagnostics
            ],
        }
