"""Exception types shared across the package."""


class LedgerObataError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LedgerObataError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateMetricError(LedgerObataError, ValueError):
    """A frame is singular or too close to singular to define a metric."""


class CapacityError(LedgerObataError):
    """A request exceeds a configured enumeration or arithmetic budget."""


class ReferenceUnavailableError(LedgerObataError):
    """No embedded reference data exists for the requested dimension."""
