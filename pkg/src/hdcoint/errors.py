"""Exception hierarchy shared across the toolkit.

The command line maps these onto exit codes: parameter/configuration
problems exit 1, data problems exit 2 and numerical failures exit 3.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ToolkitError):
    """An argument or configuration value violates a documented contract."""


class DataError(ToolkitError):
    """Input data violates a documented precondition."""


class NumericalError(ToolkitError):
    """A numerical routine failed (singularity, instability, overflow)."""


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its iteration budget."""
