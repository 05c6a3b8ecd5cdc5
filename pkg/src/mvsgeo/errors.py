"""Exception types shared across the package.

The CLI maps FormatError (and OSError) to exit code 1 and
ConfigurationError to exit code 2.
"""

__all__ = ["ConfigurationError", "FormatError", "ColorPfmError"]


class ConfigurationError(ValueError):
    """A constraint violation: parameters inconsistent with the data."""


class FormatError(ValueError):
    """Malformed input file content."""


class ColorPfmError(FormatError):
    """Three-channel 'PF' files are not depth maps and are rejected."""
