"""Exception hierarchy shared by all modules."""


class DepositionError(Exception):
    """Base class for every error raised by the package."""


class DomainError(DepositionError, ValueError):
    """An input lies outside the region where an operation is defined."""


class NotStrictlyHyperbolic(DomainError):
    pass


class OutsideDomain(DomainError):
    pass


class DegenerateJump(DomainError):
    pass


class ZeroSpeed(DomainError):
    pass


class NoRealSpeed(DomainError):
    pass


class NotRankineHugoniot(DomainError):
    pass


class SingularInterval(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class OutsideValidity(DomainError):
    pass


class NonHyperbolicCell(DomainError):
    pass


class NonPhysicalState(DomainError):
    pass


class NoShockFound(DomainError):
    pass


class InconsistentInitialHeight(DomainError):
    pass


class FrozenState(DomainError):
    pass


class CflViolation(DepositionError, ValueError):
    """Requested time step exceeds the stability bound."""


class ConvergenceError(DepositionError, ArithmeticError):
    pass


class NonConvergent(ConvergenceError):
    pass


class NewtonDiverged(ConvergenceError):
    pass
