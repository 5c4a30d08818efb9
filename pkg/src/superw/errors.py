"""Exception types shared across the package.

The CLI maps ConfigurationError to exit code 2 and IntegrationError to exit
code 3; everything else is a genuine bug.
"""


class ConfigurationError(ValueError):
    """Invalid configuration: bad keys, values, units, or step sizing."""


class IntegrationError(RuntimeError):
    """Numerical failure during propagation (positivity, trace, or norm loss)."""
