"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`LapextError`,
so callers (the CLI in particular) can map failures to exit codes.
"""


class LapextError(Exception):
    """Base class for library errors."""


class DimensionMismatch(LapextError, ValueError):
    pass


class NotUnitary(LapextError, ValueError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(f"matrix is not unitary: deviation {deviation:.3e} exceeds {tol:.3e}")


class NoGap(LapextError, ValueError):
    """The unitary has -1 as an accumulation point (discretely: a phase too close to pi)."""


class NotIsotropic(LapextError, ValueError):
    pass


class NotMaximal(LapextError, ValueError):
    pass


class DegenerateBasis(LapextError, ValueError):
    pass


class BracketFailure(LapextError, RuntimeError):
    def __init__(self, branch: int, message: str = ""):
        self.branch = branch
        super().__init__(f"no sign change on branch {branch}" + (f": {message}" if message else ""))


class SolverFailure(LapextError, RuntimeError):
    pass


class IncompatibleElements(LapextError, ValueError):
    pass


class RangeViolation(LapextError, ValueError):
    pass


class ConfigError(LapextError, ValueError):
    pass
