"""Exception types raised across the package."""


class RdpgLinkError(Exception):
    """Base class for all package errors."""


class EdgeListParseError(RdpgLinkError, ValueError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class UnknownNodeError(RdpgLinkError, KeyError):
    def __init__(self, line_number, label):
        self.line_number = line_number
        self.label = label
        super().__init__(f"line {line_number}: label {label!r} is not in the node census")

    def __str__(self):
        return self.args[0]


class StructureError(RdpgLinkError, ValueError):
    """Input matrix violates a structural requirement (symmetry, shape, binary)."""


class ConvergenceError(RdpgLinkError, RuntimeError):
    def __init__(self, message, residual=None, trace=None):
        self.residual = residual
        self.trace = trace
        super().__init__(message)


class InfeasibleSizeError(RdpgLinkError, MemoryError):
    """Requested construction exceeds a configured size cap."""


class NonCausalFitError(RdpgLinkError, RuntimeError):
    """No causal optimum was found for an autoregressive specification."""


class UndefinedCriterionError(RdpgLinkError, ValueError):
    """Information criterion is undefined for the effective sample size."""


class UndefinedMetricError(RdpgLinkError, ValueError):
    """Metric is undefined for the given labels (e.g. a single class)."""


class InvalidLatentPositionError(RdpgLinkError, ValueError):
    """Latent positions produce link probabilities outside [0, 1]."""


class ConfigurationError(RdpgLinkError, ValueError):
    """Experiment configuration is invalid or inconsistent."""
