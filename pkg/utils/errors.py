"""
Exception types shared by the services and the CLI.
"""


class CantorError(Exception):
    """Base class for toolkit errors."""
    pass


class DomainError(CantorError, ValueError):
    """Argument outside the domain of an operation."""
    pass


class SpecValidationError(CantorError, ValueError):
    """Invalid IFS spec, non-canonical target or bad configuration."""
    pass


class ResourceCapError(CantorError):
    """Requested construction exceeds the configured interval cap."""
    pass
