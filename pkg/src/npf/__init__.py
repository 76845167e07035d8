"""Nonlocal phase-field system: operators, potentials, IMEX stepping and long-time checks."""

__version__ = "0.1.0"

from .grid import Grid, read_snapshot, write_snapshot
from .nonlocal_op import BoundReport, KernelSpec, NonlocalOperator, SpectralDecomp
from .potentials import (DomainViolation, DoubleWell, LambdaField, Logarithmic, PowerLaw,
                         Regularized, ZeroPotential, build_lambda, certify_family,
                         comparison_threshold, separation_constant, yosida)
from .stepper import IMEXStepper, Model, Recorder, SchemeConfig, State, StepFailure, run, step
from .diagnostics import (absorbing_monitor, bounds_series, decay_check, dissipation_ledger,
                          energy, separation_monitor)
from .longtime import (delta_continuation, omega_limit_check, squeezing_experiment,
                       steady_state)
from .config import ConfigError, RunConfig, emit, parse_config

__all__ = [
    "Grid", "read_snapshot", "write_snapshot",
    "KernelSpec", "NonlocalOperator", "BoundReport", "SpectralDecomp",
    "DomainViolation", "DoubleWell", "LambdaField", "Logarithmic", "PowerLaw", "Regularized",
    "ZeroPotential", "build_lambda", "certify_family", "comparison_threshold",
    "separation_constant", "yosida",
    "IMEXStepper", "Model", "Recorder", "SchemeConfig", "State", "StepFailure", "run", "step",
    "absorbing_monitor", "bounds_series", "decay_check", "dissipation_ledger", "energy",
    "separation_monitor",
    "delta_continuation", "omega_limit_check", "squeezing_experiment", "steady_state",
    "ConfigError", "RunConfig", "emit", "parse_config",
]
