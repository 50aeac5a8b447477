"""Exception hierarchy. Everything raised on purpose derives from HarperlabError."""


class HarperlabError(Exception):
    pass


class PrecisionExhausted(HarperlabError):
    """The continued-fraction expansion cannot certify the next coefficient."""


class SingularPhase(HarperlabError):
    """Some off-diagonal coefficient b_n(theta) vanishes along the requested orbit."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class BudgetExceeded(HarperlabError):
    """Adaptive refinement hit its cell cap before reaching the requested tolerance."""


class InvalidFamily(HarperlabError):
    pass


class HalfIntegerMode(HarperlabError):
    """R was applied to a Fourier mode outside the integer lattice."""


class InsufficientData(HarperlabError):
    pass


class Inconclusive(HarperlabError):
    pass
