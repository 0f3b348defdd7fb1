"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition; message names the field."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values or failed to converge."""


class ConfigError(ValueError):
    """An experiment configuration failed validation before any run started."""


class DiagnosticUnavailableError(RuntimeError):
    """A diagnostic needs data the run did not record (e.g. realized noise)."""
