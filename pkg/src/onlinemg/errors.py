"""Exception types shared across the package."""


class InvalidGameError(ValueError):
    """A game or policy failed validation; ``violations`` lists what broke."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SolverError(RuntimeError):
    """A matrix-game solve did not reach the requested duality gap."""

    def __init__(self, message, h=None, s=None, certificate=None):
        super().__init__(message)
        self.h = h
        self.s = s
        self.certificate = certificate


class CapacityError(RuntimeError):
    """A requested computation would exceed a configured size budget."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or incomplete."""
