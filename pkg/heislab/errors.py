"""
Errors
------
Exception types raised across heislab.

Flagged numerical results never raise; they come back with a ``flags``
tuple instead. Everything here is a hard error.
"""


class HeislabError(Exception):
    """Base class for every heislab error"""


class DimensionMismatch(HeislabError, ValueError):
    """Points or fields of different dimension n were combined"""


class DomainError(HeislabError, ValueError):
    """A parameter lies outside the domain of the formula"""


class GridResolutionError(HeislabError):
    """The sampling grid cannot resolve the requested dyadic levels"""


class UnknownCubeError(HeislabError, KeyError):
    """A cube does not belong to any built dyadic system"""


class ConfigError(HeislabError):
    """Invalid run configuration"""


class SuiteFailure(HeislabError):
    """A verification suite assertion failed"""

    def __init__(self, message: str, instance: dict = None):
        super().__init__(message)
        self.instance = instance or {}
