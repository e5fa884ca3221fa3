"""Exception types shared by the package."""


class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class ConsistencyError(RuntimeError):
    """An identity that must hold exactly was found to fail."""


class AccuracyError(RuntimeError):
    """A numerical tolerance could not be reached."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConfigError(ValueError):
    """Invalid job configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
