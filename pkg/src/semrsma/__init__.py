"""Rate regions of semantic and bit users sharing an uplink under FDMA, NOMA and RSMA."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    FitError,
    InfeasiblePoint,
    InfeasibleRate,
    InfeasibleUser,
    PointInfeasible,
    SemRsmaError,
)
from .semantic_model import LogisticParams, SemanticConfig  # noqa: E402
from .scenario import PathLossModel, Scenario, explicit_scenario, generate_scenario  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "FitError",
    "InfeasiblePoint",
    "InfeasibleRate",
    "InfeasibleUser",
    "PointInfeasible",
    "SemRsmaError",
    "LogisticParams",
    "SemanticConfig",
    "PathLossModel",
    "Scenario",
    "explicit_scenario",
    "generate_scenario",
]
