"""Shared exception types."""


class SizeGuardError(Exception):
    """An instance exceeds a hard size cap; refusing rather than truncating."""


class ConfigError(ValueError):
    """Invalid user-supplied configuration."""
