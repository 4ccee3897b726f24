"""Exception hierarchy for graphbalance.

All errors raised by the library derive from :class:`GraphBalanceError` so
callers can catch library failures with a single except clause while still
distinguishing validation problems from capacity and configuration problems.
"""

from __future__ import annotations

__all__ = [
    "GraphBalanceError",
    "ValidationError",
    "CapacityError",
    "ConfigurationError",
    "DegenerateStatisticError",
]


class GraphBalanceError(Exception):
    """Base class for all graphbalance errors."""


class ValidationError(GraphBalanceError, ValueError):
    """An input value violates a documented precondition."""


class CapacityError(GraphBalanceError, ValueError):
    """A request exceeds a hard size cap (e.g. exact methods on large N)."""


class ConfigurationError(GraphBalanceError, ValueError):
    """An invalid combination of options (e.g. ranks with an extremum form)."""


class DegenerateStatisticError(GraphBalanceError, ValueError):
    """A statistic is undefined for the given data (e.g. zero null variance)."""
