"""Exception hierarchy.

``StructuralError`` and ``ModelError`` are validation failures (CLI exit 2),
``NgdViolation`` signals an infeasible pricing problem (exit 3) and
``NumericalError`` a solver or root-finder breakdown (exit 4).
"""


class CohDealsError(Exception):
    pass


class StructuralError(CohDealsError, ValueError):
    """Malformed input: dimension mismatch, foreign scenario space, bad field."""


class ModelError(CohDealsError, ValueError):
    """Inputs are well-formed but violate a modelling assumption."""


class DomainError(ModelError):
    """Parameters outside the domain where a closed form is valid."""


class NgdViolation(CohDealsError):
    """No risk-neutral measure exists inside the determining set."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NumericalError(CohDealsError, ArithmeticError):
    pass
