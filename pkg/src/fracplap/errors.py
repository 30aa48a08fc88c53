"""Exception types shared across the package."""


class FracplapError(Exception):
    """Base class for package errors."""


class ParameterError(FracplapError):
    """A numerical parameter is outside its admissible range."""


class WindowError(FracplapError):
    """Window/domain mismatch, or a window is not closed under the reflection."""


class DegenerateDomainError(FracplapError):
    """A constructed domain has an empty mask."""


class ConvergenceError(FracplapError):
    """An iterative solver failed to converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class ConfigError(FracplapError):
    """Invalid experiment configuration; carries a JSON path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
