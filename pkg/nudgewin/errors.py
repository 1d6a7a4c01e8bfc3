class NudgewinError(Exception):
    """Base class for every error raised by nudgewin."""


class ConfigurationError(NudgewinError, ValueError):
    """An invalid parameter, interpolant or configuration line."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SnapshotFormatError(NudgewinError, ValueError):
    """A snapshot or checkpoint file that cannot be read."""


class BlowUpError(NudgewinError, RuntimeError):
    """A state developed NaN or Inf coefficients."""

    def __init__(self, message, t=None, trajectory=None):
        self.t = t
        self.trajectory = trajectory
        super().__init__(message)
