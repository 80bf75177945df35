"""Exception hierarchy and warnings shared across the package."""


class SpdeDriftError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpdeDriftError):
    """Invalid or inconsistent specification (unsupported operator kind,
    dealiasing violation, size mismatch, bad config file key)."""


class DomainError(SpdeDriftError):
    """A mathematical admissibility condition is violated (e.g. beta <= 0,
    V <= 0, contrast parameter below the required threshold)."""


class BlowUpError(SpdeDriftError):
    """NaN/Inf detected while stepping a trajectory."""

    def __init__(self, step: int, mode: int, message: str | None = None):
        self.step = step
        self.mode = mode
        super().__init__(
            message or f"trajectory blew up at step {step}, mode {mode}"
        )


class DegenerateTrajectoryError(SpdeDriftError):
    """The observed-information denominator is (numerically) zero."""


class StudyError(SpdeDriftError):
    """Too many trial failures to produce a trustworthy Monte Carlo report."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class AdmissibilityWarning(UserWarning):
    """The contrast parameter alpha is at or below the admissibility
    threshold alpha > gamma - (1 + 1/beta)/8; asymptotic guarantees for the
    estimators no longer apply."""
