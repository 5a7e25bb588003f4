"""Exceptions shared across the package."""


class RCMError(Exception):
    """Base class for all package errors."""


class ValidationError(RCMError):
    """Invalid argument or domain data (maps to CLI exit code 2)."""


class TooLargeError(ValidationError):
    """Edge count exceeds the exhaustive-enumeration cap."""


class UnsupportedDomainError(ValidationError):
    """Operation not defined for this domain (e.g. duality on covers)."""


class ConstructionBugError(RCMError):
    """Internal invariant violated; indicates a bug, not bad input."""
