"""Exception types raised by the geometry and sampling routines."""


class CubeShadowError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(CubeShadowError, ValueError):
    pass


class RankDeficient(CubeShadowError):
    """Input rows do not span a subspace of the requested dimension."""


class NumericalFailure(CubeShadowError):
    """A computation could not be completed reliably in floating point.

    Distinct from a well-defined negative answer (e.g. an infeasible LP).
    """


class DegenerateDirection(NumericalFailure):
    """The generic direction lies on a cone facet for some subset."""


class DegenerateSubspace(NumericalFailure):
    pass


class TooManySubsets(CubeShadowError):
    """A subset enumeration would exceed the configured cap."""


class Outside(CubeShadowError):
    """Point is not covered by any tile."""


class AcceptanceTooLow(NumericalFailure):
    pass


class EmptyBatch(CubeShadowError, ValueError):
    pass
