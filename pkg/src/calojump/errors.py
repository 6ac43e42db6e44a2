"""Exception taxonomy. Every error carries a short machine-readable code
that the CLI prints as ``error_code=<code>`` on stderr."""


class CalojumpError(Exception):
    """Base class for all simulator errors."""

    code = "error"


class DomainError(CalojumpError):
    """Input outside the mathematical domain of an operation."""

    code = "domain"


class RefusalError(CalojumpError):
    """A guard or enumeration bound refused the requested computation."""

    code = "refusal"


class GridEscapeError(CalojumpError):
    """A trajectory left the precomputed energy grid."""

    code = "grid_escape"


class StationarityError(CalojumpError):
    """The steady-state drift criterion was not met within the horizon."""

    code = "stationarity"


class UsageError(CalojumpError):
    """Bad CLI flags or config-file contents (exit code 1)."""

    code = "usage"
