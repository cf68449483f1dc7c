"""Shared exception base for the package.

Every error raised by library code derives from :class:`DendritesError`,
so callers (notably the CLI) can distinguish domain failures from bugs.
"""


class DendritesError(Exception):
    """Base class for all validation and domain errors in this package."""
