"""Coherent risk, capital allocation and no-good-deal pricing on finite scenario spaces."""

__version__ = "0.1.0"

from .errors import (CohDealsError, DomainError, ModelError, NgdViolation, NumericalError,
                     StructuralError)
from .scenario import (ConvHull, Density, ExtremeResult, Mixture, Pnl, Polytope, RiskSpec,
                       ScenarioSpace, TailVaR, WeightedVaR, contains, extreme_measure, ground,
                       risk, utility)
