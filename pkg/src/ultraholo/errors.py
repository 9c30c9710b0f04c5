"""Exception hierarchy shared by all modules."""


class UltraholoError(Exception):
    """Base class for library errors."""


class HorizonTooSmall(UltraholoError):
    pass


class AnchorSlopeViolation(UltraholoError):
    def __init__(self, j, message=None):
        self.j = j
        super().__init__(message or f"anchor slope decreases at j={j}")


class HorizonExhausted(UltraholoError):
    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"sequence horizon too short to evaluate at t={t!r}")


class NegativeArgument(UltraholoError):
    pass


class DivergentTail(UltraholoError):
    pass


class UnboundedObjective(UltraholoError):
    pass


class NoDecay(UltraholoError):
    pass


class Omega1Fails(UltraholoError):
    pass


class GammaOutOfRange(UltraholoError):
    pass


class NearAxisInstability(UltraholoError):
    pass


class OutsideSector(UltraholoError):
    pass


class TruncationFailure(UltraholoError):
    pass


class UnstableFit(UltraholoError):
    pass


class ClassViolation(UltraholoError):
    def __init__(self, p, message=None):
        self.p = p
        super().__init__(message or f"sequence exceeds its class envelope at p={p}")


class TailTooLarge(UltraholoError):
    pass


class PrecisionExhausted(UltraholoError):
    pass


class ExtrapolationDiverges(UltraholoError):
    pass


class UnknownCheck(UltraholoError):
    pass


class UnanchoredCheck(UltraholoError):
    pass
