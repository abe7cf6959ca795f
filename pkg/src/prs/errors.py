"""Exception hierarchy for the p-regularized subproblem solvers."""


class PrsError(Exception):
    """Base class for all solver errors."""


class InvalidInstance(PrsError, ValueError):
    pass


class NonSymmetric(InvalidInstance):
    pass


class DimensionMismatch(PrsError, ValueError):
    pass


class EigFailure(PrsError, ArithmeticError):
    pass


class PoleHit(PrsError, ArithmeticError):
    """sigma*t + alpha_i vanished for a term with a non-negligible numerator."""


class NegativeT(PrsError, ValueError):
    pass


class ZeroT(PrsError, ValueError):
    pass


class NoRoot(PrsError, ArithmeticError):
    pass


class ConvergenceFailure(PrsError, ArithmeticError):
    pass


class CertificateFailure(PrsError, ArithmeticError):
    pass


class GenericityViolated(PrsError, ValueError):
    pass


class Infeasible(PrsError, ValueError):
    pass


class CapExceeded(PrsError, ValueError):
    pass


class DegenerateRow(PrsError, ValueError):
    pass


class InvalidK(PrsError, ValueError):
    pass


class TooLarge(PrsError, ValueError):
    pass


class NoFeasibleGridPoint(PrsError, ValueError):
    pass
