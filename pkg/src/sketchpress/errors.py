"""Exception hierarchy shared across the package."""


class SketchpressError(Exception):
    """Base class for all package errors."""


class ConfigError(SketchpressError, ValueError):
    """Invalid parameters or violated preconditions."""


class FormatError(SketchpressError):
    """Malformed snapshot or archive bytes (I/O-class failure)."""


class StreamPoisonedError(SketchpressError):
    """Stream hit an I/O failure mid-pass and refuses further reads."""


class PassAuditError(SketchpressError):
    """Operation would corrupt the pass-count accounting."""


class NumericalError(SketchpressError):
    """Numerical failure: rank deficiency, non-finite data, non-convergence."""


class RankDeficiencyWarning(RuntimeWarning):
    """Emitted when a computation falls back to a regularized path."""


class SanityWarning(UserWarning):
    """Emitted when a measured quantity violates a structural expectation."""
