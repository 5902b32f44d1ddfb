"""Exception hierarchy shared by all modules."""


class PseudospecError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(PseudospecError, ValueError):
    pass


class DomainError(PseudospecError, ValueError):
    """Argument lies outside the region where a formula is valid."""


class SingularMatrix(PseudospecError, ArithmeticError):
    pass


class NoConvergence(PseudospecError, ArithmeticError):
    pass


class ExpOverflow(PseudospecError, OverflowError):
    """``||tA||`` too large for a safe exponential; reduce ``t``."""


class EmptyLevelSet(PseudospecError):
    pass


class NoTrustedNodes(PseudospecError):
    pass


class EnclosureViolation(PseudospecError):
    """A Riesz contour would enclose more than one eigenvalue."""


class QuadratureNotConverged(PseudospecError, ArithmeticError):
    pass


class RankDetectionFailure(PseudospecError, ArithmeticError):
    pass


class BlockSingular(PseudospecError, ArithmeticError):
    pass


class InsufficientData(PseudospecError, ValueError):
    pass


class NoCrossing(PseudospecError):
    pass


class StabilityLoss(PseudospecError, ArithmeticError):
    pass
