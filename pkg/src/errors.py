"""Exception hierarchy shared by the simulator modules."""


class AlignmentError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(AlignmentError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NotPositiveDefinite(DomainError):
    """A covariance or P(Θ,ρ) matrix failed its Cholesky factorization."""


class NotValidJoint(DomainError):
    """The joint covariance of a correlation model has a negative eigenvalue."""


class SizeError(AlignmentError, ValueError):
    pass


class DimensionMismatch(AlignmentError, ValueError):
    pass


class ShapeError(AlignmentError, ValueError):
    pass


class SizeMismatch(AlignmentError, ValueError):
    pass


class TooLarge(AlignmentError, ValueError):
    """Exhaustive enumeration refused because the instance is too big."""


class EmptyInput(AlignmentError, ValueError):
    pass


class ConfigError(AlignmentError):
    """Invalid experiment configuration or model file."""


class InfeasibleRho(AlignmentError):
    """The requested signal strength needs a correlation of 1 or more."""


class IoError(AlignmentError, OSError):
    pass
