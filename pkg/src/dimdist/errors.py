"""Exception types shared across the package."""


class DimdistError(Exception):
    """Base class for all package errors."""


class DomainError(DimdistError, ValueError):
    """An argument is outside the documented domain of an operation."""


class CapacityError(DimdistError):
    """An exact/brute-force path was asked for on an input that is too large."""


class InputError(DimdistError):
    """Malformed external input (CSV files, config files)."""
