"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific one that applies.
"""


class ConfigurationError(ValueError):
    """A run configuration, domain, or kernel parameter is invalid."""


class NumericalError(RuntimeError):
    """A solve produced an unusable result (singular system, negative
    mean exit time, non-convergence)."""
