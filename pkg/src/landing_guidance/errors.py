"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration value. ``key`` is the dotted path of the offending entry."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DomainError(ValueError):
    """Argument outside the domain of a barrier or guidance function."""


class InfeasibleScenarioError(ValueError):
    """Scenario cannot be flown with the given thrust limit."""


class UndefinedStatisticError(ValueError):
    """Statistic is undefined for the given sample (e.g. zero variance)."""


class PropagationError(RuntimeError):
    """Simulation stopped early. ``log`` holds the trajectory up to the last valid step."""

    def __init__(self, message, log=None, reason="non-finite"):
        self.log = log
        self.reason = reason
        super().__init__(message)
