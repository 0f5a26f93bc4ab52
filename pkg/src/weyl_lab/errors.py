"""Shared exception types.

Every operation that can fail does so through one of these, so callers
(including the command line driver) can separate bad inputs (exit status 1)
from failed mathematical verdicts (exit status 2).
"""


class WeylLabError(Exception):
    """Base class for all library errors."""


class UnsupportedVariantError(WeylLabError, ValueError):
    """Operation not defined for this model space variant."""


class DomainError(WeylLabError, ValueError):
    """Point or parameter outside the admissible domain."""


class BoundaryPointError(DomainError):
    """Pointwise quantity requested at a boundary or singular point."""


class NoncompactSpaceError(WeylLabError, ValueError):
    """Compactness-only quantity requested on a noncompact space."""


class DegenerateGridError(WeylLabError, ValueError):
    """Discretization grid too small to carry the requested data."""


class ConvergenceError(WeylLabError, RuntimeError):
    """Iterative solver exceeded its iteration budget."""


class BracketingError(WeylLabError, RuntimeError):
    """Root bracket failed to contain a sign change."""


class IncompleteBaseError(WeylLabError, ValueError):
    """Base spectrum does not reach far enough for the requested assembly."""


class CountingRangeError(WeylLabError, ValueError):
    """Counting query beyond the certified completeness threshold."""


class TruncationError(WeylLabError, ValueError):
    """Truncated sum cannot be certified against its tail bound."""


class InsufficientModesError(TruncationError):
    """Spectral sum dropped a tail that the mode budget cannot control."""


class TailCoverageError(WeylLabError, ValueError):
    """Sweep grid leaves the atom range without a tail model."""


class DisagreementError(WeylLabError, RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""
