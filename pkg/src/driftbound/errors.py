"""Exception hierarchy shared by all driftbound modules."""


class DriftBoundError(Exception):
    """Base class for every error raised by the package."""


# numerical kernel
class NonSquareError(DriftBoundError, ValueError):
    pass


class NotSymmetricError(DriftBoundError, ValueError):
    pass


class NonFiniteError(DriftBoundError, ValueError):
    pass


class DimensionMismatchError(DriftBoundError, ValueError):
    pass


class NoConvergenceError(DriftBoundError, ArithmeticError):
    pass


class NotHurwitzError(DriftBoundError, ValueError):
    pass


class SingularSystemError(DriftBoundError, ArithmeticError):
    pass


class NotSPDError(DriftBoundError, ValueError):
    pass


class BadBracketError(DriftBoundError, ValueError):
    pass


class MaxDepthError(DriftBoundError, ArithmeticError):
    pass


# linear-Gaussian analysis
class NotHurwitzNominalError(NotHurwitzError):
    pass


class NotHurwitzPerturbedError(NotHurwitzError):
    pass


class NotControllableError(DriftBoundError, ValueError):
    pass


class NotEllipticError(DriftBoundError, ValueError):
    pass


class NotReversibleError(DriftBoundError, ValueError):
    pass


class NotInvertibleBError(DriftBoundError, ValueError):
    pass


class NotContractiveError(DriftBoundError, ValueError):
    """Raised when the H-infinity norm of N F is not below one."""


# CGF machinery
class OutOfDomainError(DriftBoundError, ValueError):
    pass


class KTooLargeError(DriftBoundError, ValueError):
    """K is not below theta_star / 2, so the entropy bound is unavailable."""


class DegenerateError(DriftBoundError, ValueError):
    """The CGF vanishes identically (zero noise drift)."""


class EpsBeyondRangeError(DriftBoundError, ValueError):
    def __init__(self, message, supremum=None):
        super().__init__(message)
        self.supremum = supremum


class NegativeInputError(DriftBoundError, ValueError):
    pass


# 1-D Fokker-Planck
class NotNormalizableError(DriftBoundError, ValueError):
    pass


class GridMismatchError(DriftBoundError, ValueError):
    pass


class NonPositiveDensityError(DriftBoundError, ValueError):
    pass


class NonPositiveRatioError(DriftBoundError, ValueError):
    pass


# simulation
class UnstableError(DriftBoundError, ArithmeticError):
    """Euler-Maruyama state left the divergence guard."""


class SimConfigError(DriftBoundError, ValueError):
    pass


# cli
class ParseError(DriftBoundError, ValueError):
    pass
