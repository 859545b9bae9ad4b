"""Exception types raised across the package."""


class BoussinesqError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BoussinesqError, ValueError):
    """Invalid grid, parameter or configuration value."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorruptedSpectrumError(BoussinesqError):
    """Inverse transform produced a non-negligible imaginary part."""


class IncompatibleDataError(BoussinesqError, ValueError):
    """Data violates a solvability condition on the torus (e.g. nonzero mean)."""


class ContractViolationError(BoussinesqError, ValueError):
    """An input does not satisfy a structural precondition."""


class BuoyancyEvaluationError(BoussinesqError):
    """The buoyancy law returned a non-finite value."""


class FormatError(BoussinesqError):
    """A snapshot or data file does not match the expected binary layout."""


class BlowUpError(BoussinesqError):
    """Non-finite values appeared during time integration.

    Attributes:
        t: simulation time at which the failure was detected.
        last_record: last finite diagnostics record, if one was taken.
    """

    def __init__(self, t, last_record=None, message=None):
        super().__init__(message or f"blow-up detected at t={t:.6g}")
        self.t = t
        self.last_record = last_record
