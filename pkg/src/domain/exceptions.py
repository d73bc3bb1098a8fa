class QkdAnalysisError(Exception):
    """Base class for every failure raised by the analysis library."""


class InvalidArgumentError(QkdAnalysisError, ValueError):
    """An input violates an operation's precondition."""


class SingularChannelError(QkdAnalysisError, ArithmeticError):
    """The effective transmittance reached 1 and an asymptotic formula diverges."""


class InfiniteCapacityError(SingularChannelError):
    """The repeaterless capacity of a lossless channel is unbounded."""


class NoThresholdError(QkdAnalysisError):
    """The key rate never crossed zero while growing the noise bracket."""


class EstimationError(QkdAnalysisError):
    """Sample statistics are too degenerate to estimate channel parameters."""


class NumericalError(QkdAnalysisError):
    """An internal linear-algebra step failed (e.g. a singular conditioning matrix)."""
