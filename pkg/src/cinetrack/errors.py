"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a documented invariant (shape, range, dimensions)."""


class FormatError(ValueError):
    """On-disk data is malformed or structurally incomplete."""


class ConfigError(ValueError):
    """Invalid configuration value."""


class SequencingError(ValueError):
    """Frames were presented out of order."""


class MemoryStoreError(RuntimeError):
    """Illegal operation on a memory store (read before write, nothing evictable)."""
