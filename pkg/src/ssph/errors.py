"""Exception types shared across the package.

The CLI maps these onto exit codes, so solver code should raise the most
specific type that applies rather than a bare RuntimeError.
"""


class ConfigError(ValueError):
    """A problem definition or run configuration is invalid."""


class CapacityError(ConfigError):
    """A requested discretization exceeds a configured size cap."""


class NumericalError(RuntimeError):
    """Integration failed: CFL guard rejection, singularity, or non-finite state."""
