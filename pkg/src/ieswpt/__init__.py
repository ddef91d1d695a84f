"""Time-division multi-device wireless charging with intermediate energy storage."""

from .analytic import (
    FormulaId,
    TocBreakdown,
    classify_regime,
    conventional_t_oc,
    n_max,
    phase_durations,
    t_oc_analytic,
    t_oc_upper_bound,
)
from .config import ParseError, dump_config, load_config
from .ledger import LedgerReport, LedgerViolation, energy_ledger_check
from .model import (
    ConstraintViolation,
    Constant,
    Piecewise3,
    ReceiverSpec,
    ScenarioSpec,
    ValidatedScenario,
    profile_cumulative,
    profile_power,
    soc_to_time_offset,
    validate_spec,
)
from .optimize import DegenerateObjective, grid_search_qies, minimize_bound
from .oracle import run_fixed_step
from .sim import DecoupleRule, EventKind, NonTermination, SimResult, run_event_sim

__version__ = "0.1.0"

__all__ = [
    "classify_regime",
    "Constant",
    "ConstraintViolation",
    "conventional_t_oc",
    "DecoupleRule",
    "DegenerateObjective",
    "dump_config",
    "energy_ledger_check",
    "EventKind",
    "FormulaId",
    "grid_search_qies",
    "LedgerReport",
    "LedgerViolation",
    "load_config",
    "minimize_bound",
    "n_max",
    "NonTermination",
    "ParseError",
    "phase_durations",
    "Piecewise3",
    "profile_cumulative",
    "profile_power",
    "ReceiverSpec",
    "run_event_sim",
    "run_fixed_step",
    "ScenarioSpec",
    "SimResult",
    "soc_to_time_offset",
    "t_oc_analytic",
    "t_oc_upper_bound",
    "TocBreakdown",
    "validate_spec",
    "ValidatedScenario",
]
