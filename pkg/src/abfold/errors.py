"""Exception types shared across the package."""


class AbfoldError(Exception):
    """Base class for all package errors."""


class InvalidResidueError(AbfoldError):
    """A residue character outside the accepted alphabet."""


class DimensionError(AbfoldError):
    """Sequence length and conformation dimension do not match."""


class GeometryError(AbfoldError):
    """Positions violate chain geometry (non-unit bonds, bad shapes)."""


class ConfigError(AbfoldError):
    """Invalid optimizer or experiment configuration."""


class DataError(AbfoldError):
    """Malformed input file or unknown sequence label."""
