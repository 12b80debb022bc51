class ConfigurationError(ValueError):
    """Invalid parameters for a sampler, mechanism, audit or command."""


class DomainError(ValueError):
    """An argument lies outside the domain of a quantile function."""
