"""Shared exception types."""


class DomainError(ValueError):
    """Argument outside the declared domain of a function or model."""


class RangeError(ValueError):
    """Requested value outside the attainable range."""


class NonMonotoneError(RuntimeError):
    """A bracketing or certification step found a monotonicity violation."""


class CertificationError(RuntimeError):
    """A construction-time numerical certificate failed."""


class BudgetError(RuntimeError):
    """A norm or search budget was exceeded."""
