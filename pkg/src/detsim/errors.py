"""Shared exception hierarchy.

Everything raised on purpose by this package derives from DetsimError, so
callers can catch one type at the top level.  More specific subclasses live
next to the code that raises them.
"""


class DetsimError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DetsimError):
    """A configuration document is malformed (syntax or document shape)."""


class ValidationError(DetsimError):
    """A structurally valid input violates a semantic rule."""
