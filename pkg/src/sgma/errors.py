"""Exception types shared across the package."""


class SgmaError(Exception):
    """Base class for package-specific failures."""


class DomainError(SgmaError):
    """A mathematically valid request evaluated outside its domain of validity."""


class MetricSingularError(DomainError):
    """The pull-back metric is degenerate (within tolerance) at the query point."""


class ConfigError(SgmaError):
    """Invalid run configuration (CLI/config-file layer)."""
