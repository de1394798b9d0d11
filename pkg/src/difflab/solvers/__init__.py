"""Time steppers: implicit filtration/FPME, pressure model, reaction-diffusion."""
from .burgers import BurgersReport, antiderivative, burgers_check, shock_time
from .filtration import run_filtration, run_fpme
from .implicit import StepInfo, StepRejected, fpme_step, fpme_step_info, implicit_step, itd_step
from .nonlinearity import NonlinKind, Nonlinearity, StepControl
from .pmfp import pmfp_advance, pmfp_pressure, pmfp_step, run_pmfp
from .reaction import RangeViolation, Reaction, front_position, rd_step, run_kpp
from .trajectory import Trajectory, evolve

__all__ = [
    "BurgersReport", "antiderivative", "burgers_check", "shock_time",
    "run_filtration", "run_fpme",
    "StepInfo", "StepRejected", "fpme_step", "fpme_step_info", "implicit_step", "itd_step",
    "NonlinKind", "Nonlinearity", "StepControl",
    "pmfp_advance", "pmfp_pressure", "pmfp_step", "run_pmfp",
    "RangeViolation", "Reaction", "front_position", "rd_step", "run_kpp",
    "Trajectory", "evolve",
]
