"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config value is structurally invalid (bad parameters, unreachable stop rule)."""


class DomainError(ValueError):
    """Inputs are outside the region where a formula is defined or meaningful."""


class AssumptionViolation(DomainError):
    """A named precondition of a cost-bound formula does not hold for these inputs."""
