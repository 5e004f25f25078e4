"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid input to a comparison-geometry or space computation."""


class MeasureError(ValueError):
    """A discrete measure failed validation.

    ``code`` is a short stable identifier so callers (and the CLI) can tell
    failures apart without parsing messages.
    """

    def __init__(self, message, code="invalid_measure"):
        super().__init__(message)
        self.code = code


class SolverError(ValueError):
    """Malformed transport problem or solver failure."""


class ChartError(ValueError):
    """Point or curve outside a chart's domain, or a malformed chart."""


class ConfigError(ValueError):
    """Bad scenario configuration or CLI input."""
