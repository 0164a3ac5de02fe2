"""Exception types raised by the zcf package."""


class ZCFError(Exception):
    """Base class for all numerical/contract failures in zcf."""


class PoleHit(ZCFError):
    pass


class DomainError(ZCFError, ValueError):
    pass


class DerivativeUnavailable(ZCFError):
    pass


class StepOverflow(ZCFError):
    pass


class SectorError(ZCFError, ValueError):
    """Spectral parameter outside the half-plane or sector an operation requires."""


class SingularDenominator(ZCFError):
    pass


class NoConvergence(ZCFError):
    pass


class TailTooFat(ZCFError):
    pass


class EtaViolation(ZCFError, ValueError):
    pass


class GridTooCoarse(ZCFError):
    pass


class SolveFailure(ZCFError):
    pass


class PhaseJump(ZCFError):
    pass


class SpectraClash(ZCFError):
    pass


class OutsideDS(ZCFError):
    pass


class ResolventSingular(ZCFError):
    pass


class PolesPresent(ZCFError, ValueError):
    pass


class StructureBroken(ZCFError):
    pass


class DSViolation(ZCFError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
