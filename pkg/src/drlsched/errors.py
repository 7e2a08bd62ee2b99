class ConfigError(ValueError):
    """Raised for invalid simulator, agent or run configuration."""


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's preconditions."""


class TrainingDiverged(FloatingPointError):
    """Raised when a loss or parameter becomes NaN/Inf during training."""
