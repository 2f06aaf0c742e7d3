"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates one of its invariants."""


class DimensionError(ValueError):
    """Array shapes are inconsistent for the requested operation."""


class FileFormatError(Exception):
    """A dataset or checkpoint file is corrupt, truncated, or mislabeled."""
