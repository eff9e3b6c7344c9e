"""Simulation and analysis toolkit for crowdsourced binary labeling with an unsure option."""

from . import aggregation, bounds, crowd, harness, mechanisms, olu
from .errors import AssumptionViolation, ConfigError, DomainError

__all__ = [
    "aggregation", "bounds", "crowd", "harness", "mechanisms", "olu",
    "AssumptionViolation", "ConfigError", "DomainError",
]

__version__ = "0.1.0"
