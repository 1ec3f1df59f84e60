"""Exception types shared across the package."""


class RecLabError(Exception):
    """Base class for all package-specific failures."""


class RejectedInputError(RecLabError, ValueError):
    """Input outside an operation's documented domain."""


class DimensionMismatchError(RejectedInputError):
    """Operands live in spaces of different dimension."""


class InexactRegimeError(RecLabError):
    """Requested quantity has no exact closed form in this regime."""


class UnsupportedPairingError(RecLabError):
    """Measure kind and metric kind cannot be combined exactly."""


class DegenerateSupportError(RecLabError):
    """Every probed ball has zero mass; nothing to fit."""


class DegenerateMassError(RecLabError):
    """Cumulative target mass is zero; ratio undefined."""


class NumericalFailureError(RecLabError):
    """An iterative routine failed to converge within its budget."""


class ConfigError(RecLabError):
    """Experiment configuration is invalid; carries the full violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
