"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent parameter set."""


class DimensionError(ValueError):
    """Antenna count too small for the requested null-space construction."""


class DegenerateBeam(RuntimeError):
    """Beamforming matrix delivers (numerically) nothing to its user."""


class InfeasibleAtAnyT(RuntimeError):
    """Robust constraints cannot be met at any positive auxiliary rate."""
