"""Exception hierarchy shared across the toolkit."""


class DeconflictError(Exception):
    """Base class for all toolkit errors."""


class DomainError(DeconflictError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ParameterError(DeconflictError, ValueError):
    """A configuration parameter is out of its allowed range."""


class ContractViolation(DeconflictError):
    """A caller broke a documented pre-condition."""


class ResourceLimitError(DeconflictError):
    """A configured size/effort budget would be exceeded."""


class UnsolvableInstanceError(DeconflictError):
    """An aircraft has no legal trajectory at the current discretisation."""

    def __init__(self, aircraft_id: int, message: str = ""):
        self.aircraft_id = aircraft_id
        super().__init__(message or f"aircraft {aircraft_id} has no legal trajectory")


class InstanceFormatError(DeconflictError, ValueError):
    """An instance file does not follow the documented schema."""
