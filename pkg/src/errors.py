"""
Exception hierarchy for the MCMC-VQA simulator.
"""


class SimulatorError(Exception):
    """Base exception for simulator errors."""
    pass


class InvalidArgumentError(SimulatorError, ValueError):
    """An operation received an argument outside its domain."""
    pass


class ResourceLimitError(SimulatorError):
    """A request exceeds a fixed resource guard (e.g. exhaustive enumeration size)."""
    pass


class InvalidConfigurationError(SimulatorError, ValueError):
    """Configuration values violate their constraints."""
    pass


class CellIOError(SimulatorError, OSError):
    """An experiment file is missing or cannot be written."""
    pass
