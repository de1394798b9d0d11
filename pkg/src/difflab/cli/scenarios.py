"""Built-in scenarios: one per acceptance check, plus two worked examples."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import Scenario, parse_text


@dataclass(frozen=True)
class BuiltIn:
    name: str
    criterion: int | None
    anchor: str
    text: str

    def scenario(self) -> Scenario:
        return parse_text(self.text)


_TARGET_8PI = repr(8.0 * math.pi)


def _cfg(name: str, anchor: str, body: str) -> str:
    return f"[scenario]\nname = {name}\nanchor = {anchor}\n" + body.strip() + "\n"


_SPECS: list[tuple[str, int | None, str, str]] = [
    (
        "fhe-cauchy-kernel", 1,
        "s=1/2 heat kernel equals the Cauchy distribution t/(pi(t^2+x^2))",
        """
equation = Static
operator = FracSpectral
s = 0.5
[grid]
left = -102.4
length = 204.8
n = 4096
geometry = Periodic
[params]
times = 0.5, 1.0, 2.0
xmax = 20
[diagnostics]
kernel_cauchy_error = <= 1e-6
""",
    ),
    (
        "fhe-bg-envelope", 2,
        "two-sided power-law envelope of the fractional heat kernel and its |x|^-(1+2s) tail",
        """
equation = Static
operator = FracSpectral
s = 0.5
[grid]
left = -1048.576
length = 2097.152
n = 2097152
geometry = Periodic
[params]
t = 1.0
xmax = 800
fit_window = 400, 800
[diagnostics]
bg_band_min = > 0
bg_band_ratio = < 100
[case:s0.25]
scenario.s = 0.25
diagnostics.bg_band_min = > 0
diagnostics.bg_band_ratio = < 100
diagnostics.kernel_tail_slope = -1.5 +- 2%
[case:s0.5]
scenario.s = 0.5
diagnostics.bg_band_min = > 0
diagnostics.bg_band_ratio = < 100
diagnostics.kernel_tail_slope = -2.0 +- 2%
[case:s0.75]
scenario.s = 0.75
diagnostics.bg_band_min = > 0
diagnostics.bg_band_ratio = < 100
diagnostics.kernel_tail_slope = -2.5 +- 2%
""",
    ),
    (
        "operator-equivalence", 3,
        "Fourier, semigroup and hypersingular-integral definitions of (-Delta)^s agree",
        """
equation = Static
operator = FracSpectral
s = 0.5
[grid]
left = -20.0
length = 40.0
n = 4096
geometry = Periodic
[diagnostics]
spectral_semigroup = <= 1e-6
spectral_quadrature = <= 1e-4
quadrature_truncated_exact = <= 1e-4
[case:s0.25]
scenario.s = 0.25
[case:s0.5]
scenario.s = 0.5
[case:s0.75]
scenario.s = 0.75
""",
    ),
    (
        "rfl-sfl-eigenvalues", 4,
        "restricted fractional Laplacian eigenvalues lie below the spectral ones and grow like j^(2s)",
        """
equation = Static
operator = RFL
s = 0.5
[grid]
left = -1.0
length = 2.0
n = 800
geometry = DirichletExterior
[params]
modes = 20
compare_modes = 10
[case:s0.3]
scenario.s = 0.3
diagnostics.rfl_sfl_max_ratio = <= 1.0
diagnostics.rfl_growth_exponent = 0.6 +- 10%
[case:s0.5]
scenario.s = 0.5
diagnostics.rfl_sfl_max_ratio = <= 1.0
diagnostics.rfl_growth_exponent = 1.0 +- 10%
[case:s0.7]
scenario.s = 0.7
diagnostics.rfl_sfl_max_ratio = <= 1.0
diagnostics.rfl_growth_exponent = 1.4 +- 10%
""",
    ),
    (
        "pme-barenblatt-m2", 5,
        "Barenblatt source solution of the porous medium equation, support radius ~ t^(1/3)",
        """
equation = PME
nonlinearity = Power
m = 2
initial = BarenblattSample
t0 = 1.0
t_end = 10.0
outputs = geom:1.0:10.0:41
save_fields = final
[grid]
left = -8.0
length = 16.0
n = 4096
geometry = TruncatedLine
[step]
h = 0.001
[diagnostics]
renormalized_sup_error = <= 0.01
support_exponent = 0.3333333333333333 +- 2%
support_monotone = true
""",
    ),
    (
        "pme-clt-two-bumps", 6,
        "asymptotic convergence of PME to the Barenblatt profile and the t^(-2 lambda) pressure rate",
        """
equation = PME
nonlinearity = Power
m = 2
initial = TwoBumps
t0 = 0.0
t_end = 100.0
outputs = geom:1.0:100.0:41
save_fields = final
[initial]
separation = 4.0
radius = 1.0
[grid]
left = -50.0
length = 100.0
n = 4096
geometry = TruncatedLine
[step]
h = 0.01
[params]
fit_window = 10, 100
[diagnostics]
clt_error_decreasing = true
clt_error_final_ratio =
pressure_error_exponent = 0.6666666666666666 +- 20%
""",
    ),
    (
        "pme-aronson-benilan", 7,
        "one-sided bound t * v_xx >= -N beta on the PME pressure",
        """
equation = PME
nonlinearity = Power
m = 2
initial = BarenblattSample
t0 = 1.0
t_end = 10.0
outputs = geom:1.0:10.0:41
save_fields = none
[grid]
left = -8.0
length = 16.0
n = 4096
geometry = TruncatedLine
[step]
h = 0.001
[diagnostics]
ab_min = >= -0.38333333333333336
""",
    ),
    (
        "propagation-dichotomy", 8,
        "finite speed for PME and the pressure model versus instant positivity for the fractional PME",
        """
equation = PME
nonlinearity = Power
m = 2
initial = Bump
t0 = 0.0
t_end = 0.001
[initial]
radius = 1.0
power = 2.0
[grid]
left = -4.0
length = 8.0
n = 512
geometry = Periodic
[step]
h = 0.001
[case:pme]
scenario.equation = PME
diagnostics.support_growth_cells = <= 3
[case:fpme]
scenario.equation = FPME
scenario.operator = FracQuadrature
scenario.s = 0.5
diagnostics.min_value = > 0
[case:pmfp]
scenario.equation = PMFP
scenario.operator = FracSpectral
scenario.s = 0.5
scenario.nonlinearity = Identity
scenario.m = 1.0
diagnostics.support_growth_cells = <= 3
""",
    ),
    (
        "fpme-fat-tail", 9,
        "fractional PME solutions develop a |x|^-(1+2s) tail",
        """
equation = FPME
operator = RFL
s = 0.25
nonlinearity = Power
m = 2
initial = Bump
t0 = 0.0
t_end = 10.0
save_fields = final
[initial]
radius = 1.0
[grid]
left = -100.0
length = 200.0
n = 1024
geometry = DirichletExterior
[step]
h = 0.05
[params]
fit_window = 15, 50
[case:s0.25]
scenario.s = 0.25
diagnostics.tail_slope = -1.5 +- 5%
[case:s0.75]
scenario.s = 0.75
diagnostics.tail_slope = -2.5 +- 5%
""",
    ),
    (
        "pmfp-self-similarity", 10,
        "pressure-model profile (A - B x^2)_+^(1-s), L-inf decay t^(-1/(3-2s)), entropy dissipation",
        """
equation = PMFP
operator = FracSpectral
s = 0.5
initial = BarenblattSample
t0 = 1.0
t_end = 100.0
outputs = geom:1.0:100.0:41
save_fields = final
[grid]
left = -100.0
length = 200.0
n = 4096
geometry = Periodic
[step]
h = 0.5
[params]
fit_window = 10, 100
[case:s0.25]
scenario.s = 0.25
grid.left = -100.0
grid.length = 200.0
diagnostics.linf_decay_exponent = 0.4 +- 3%
diagnostics.entropy_monotone = true
diagnostics.mass_drift = <= 1e-8
[case:s0.5]
scenario.s = 0.5
grid.left = -200.0
grid.length = 400.0
diagnostics.linf_decay_exponent = 0.5 +- 3%
diagnostics.entropy_monotone = true
diagnostics.mass_drift = <= 1e-8
[case:s0.75]
scenario.s = 0.75
grid.left = -400.0
grid.length = 800.0
diagnostics.linf_decay_exponent = 0.6666666666666666 +- 3%
diagnostics.entropy_monotone = true
diagnostics.mass_drift = <= 1e-8
""",
    ),
    (
        "kpp-speeds", 11,
        "KPP front speed 2 sqrt(f'(0)); exponentially accelerating fronts for fractional diffusion",
        """
equation = KPP
initial = Box
t0 = 0.0
t_end = 40.0
save_fields = final
[initial]
halfwidth = 1.0
[grid]
left = -128.0
length = 256.0
n = 4096
geometry = Periodic
[step]
h = 0.01
[params]
rate = 1.0
[case:classical]
scenario.equation = KPP
scenario.operator = ClassicalLaplacian
diagnostics.front_speed = 2.0 +- 3%
[case:fractional]
scenario.equation = FracKPP
scenario.operator = FracSpectral
scenario.s = 0.5
scenario.t_end = 14.0
grid.left = -4096.0
grid.length = 8192.0
grid.n = 4096
step.h = 0.05
params.fit_window = 6, 14
diagnostics.front_log_r2 = > 0.99
diagnostics.front_log_rate =
""",
    ),
    (
        "ghp-bounded", 12,
        "global Harnack band for the fractional PME on an interval; non-matching boundary powers for the SFL",
        """
equation = FPME
operator = RFL
s = 0.5
nonlinearity = Power
m = 2
initial = Bump
t0 = 0.0
t_end = 40.0
outputs = 10, 15, 20, 30, 40
save_fields = all
[initial]
radius = 0.5
[grid]
left = -1.0
length = 2.0
n = 256
geometry = DirichletExterior
[step]
h = 0.01
[params]
time_unit = tstar
after = 10
[case:rfl]
diagnostics.ghp_band = < 50
[case:sfl]
scenario.operator = SFL
scenario.initial = Eigenfunction
scenario.t_end = 0.01
scenario.outputs =
initial.amplitude = 0.001
params.time_unit =
step.h = 0.001
diagnostics.boundary_power = >= 0.75
""",
    ),
    (
        "separable-asymptotics", 13,
        "relative error to the separable solution decays like t0/(t0+t) on bounded domains",
        """
equation = FPME
operator = RFL
s = 0.5
nonlinearity = Power
m = 2
initial = Bump
t0 = 0.0
t_end = 10.0
outputs = 1, 2, 3, 5, 7, 10
save_fields = final
[initial]
radius = 0.5
[grid]
left = -1.0
length = 2.0
n = 256
geometry = DirichletExterior
[step]
h = 0.01
[params]
time_unit = tstar
at = 10
[diagnostics]
separable_margin = > 0
""",
    ),
    (
        "closed-form-residuals", 14,
        "closed-form solutions are second-order consistent; log-diffusion ball loses mass at rate 8 pi",
        f"""
equation = Static
[grid]
left = -1.0
length = 2.0
n = 64
geometry = Periodic
[params]
dx = 0.1
[diagnostics]
residual_ratio_pme_barenblatt = 4.0 +- 20%
residual_ratio_fde_barenblatt = 4.0 +- 20%
residual_ratio_logdiff_ball = 4.0 +- 20%
residual_ratio_gaussian = 4.0 +- 20%
residual_ratio_cauchy = 4.0 +- 20%
residual_ratio_kpp_wave = 4.0 +- 20%
logdiff_mass_loss_rate = {_TARGET_8PI} +- 1%
""",
    ),
    (
        "semigroup-structure", 15,
        "implicit steps are L1 contractions and preserve order",
        """
equation = Static
[grid]
left = -1.0
length = 2.0
n = 64
geometry = Periodic
[step]
h = 0.01
newton_tol = 1e-12
[params]
pairs = 100
seed = 0
amplitude = 2.5
[diagnostics]
contraction_violation = <= 1e-10
order_violation = <= 1e-10
""",
    ),
    (
        "fpme-extinction", None,
        "fast-diffusion fractional PME on an interval vanishes in finite time",
        """
equation = FPME
operator = RFL
s = 0.75
nonlinearity = Power
m = 0.2
initial = Bump
t0 = 0.0
t_end = 2.0
outputs = lin:0.05:2.0:40
save_fields = none
[initial]
radius = 0.5
[grid]
left = -1.0
length = 2.0
n = 128
geometry = DirichletExterior
[step]
h = 0.001
[diagnostics]
extinction_time = < 2.0
""",
    ),
    (
        "pmfp-burgers-limit", None,
        "as s -> 1 the integrated pressure model approaches the inviscid Burgers equation",
        """
equation = Static
[grid]
left = 0.0
length = 6.283185307179586
n = 4096
geometry = Periodic
[params]
amplitude = 0.5
t = 1.0
s_values = 0.9, 0.95, 0.99
[diagnostics]
burgers_decreasing = true
""",
    ),
]

BUILTINS: dict[str, BuiltIn] = {
    name: BuiltIn(name, crit, anchor, _cfg(name, anchor, body)) for name, crit, anchor, body in _SPECS
}


def get(name: str) -> Scenario:
    try:
        return BUILTINS[name].scenario()
    except KeyError:
        raise KeyError(f"unknown built-in scenario {name!r}; see list-scenarios") from None


def by_criterion() -> dict[int, BuiltIn]:
    return {b.criterion: b for b in BUILTINS.values() if b.criterion is not None}
