"""Exception types raised by projdual."""


class ProjDualError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""


class ZeroVector(ProjDualError):
    pass


class OutsideChart(ProjDualError):
    pass


class RetractionUndefined(ProjDualError):
    pass


class DegenerateParametrization(ProjDualError):
    def __init__(self, message, u=None):
        super().__init__(message if u is None else f"{message} at u={list(map(float, u))}")
        self.u = u


class SingularSystem(ProjDualError):
    pass


class OriginOnTangent(ProjDualError):
    pass


class NoCriticalPoints(ProjDualError):
    pass


class TooFewPoints(ProjDualError):
    pass


class InsufficientDirections(ProjDualError):
    pass


class IllConditionedNeighborhood(ProjDualError):
    pass


class SingularMatrix(ProjDualError):
    pass


class EmptyOutline(ProjDualError):
    pass


class UnsupportedFormat(ProjDualError):
    pass


class ShapeSpecError(ProjDualError):
    pass
