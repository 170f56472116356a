"""Exception hierarchy shared by all qhlab modules."""


class QHLabError(Exception):
    """Base class for every error raised by qhlab."""


class ConfigurationError(QHLabError, ValueError):
    """Invalid grid, parameters or run configuration."""


class NodeError(QHLabError):
    """The density vanishes where a phase or velocity is required."""


class NodeFormationError(NodeError):
    """A node appeared during hydrodynamic integration.

    ``step`` is the index of the step that produced it, when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InstabilityError(QHLabError):
    """A time stepper produced non-finite values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class CalibrationError(QHLabError):
    """A calibration target cannot be reached."""


class SpecError(QHLabError, ValueError):
    """A recurrence specification is degenerate."""
