"""
Module exceptions.py

This module contains the exception hierarchy raised by the library.
Only the command line front-end catches these and turns them into exit codes.

"""


class NomfsimError(Exception):
    """
    Base class of every error raised by the package.

    """


class EventParseError(NomfsimError):
    """
    Raised when an event stream cannot be decoded.

    Attributes
    ----------
    line : int
        The 1-based line (CSV) or record (binary) number, 0 if not applicable

    """

    def __init__(self, message: str, line: int = 0):
        if line > 0:
            message = f'line {line}: {message}'
        super().__init__(message)
        self.line = line


class GeometryError(NomfsimError):
    """
    Raised when coordinates or frame shapes do not fit a sensor geometry.

    """


class OrderError(NomfsimError):
    """
    Raised when an event stream is not sorted by timestamp.

    """


class ConfigError(NomfsimError):
    """
    Raised for invalid parameters, unknown methods and unsupported kernels.

    """


class CalibrationError(NomfsimError):
    """
    Raised when the mismatch calibration targets cannot be met.

    """


class EvaluationError(NomfsimError):
    """
    Raised for misaligned or empty evaluation inputs.

    """


class CostError(NomfsimError):
    """
    Raised for missing energy/latency entries or degenerate cost ratios.

    """
