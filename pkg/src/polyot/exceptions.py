"""Exception types shared across the package."""


class PolyotError(Exception):
    """Base class for polyot errors."""


class DuplicateSites(PolyotError, ValueError):
    """Two target sites coincide; the power diagram is not defined."""


class OverlappingComponents(PolyotError, ValueError):
    """Source components must be pairwise disjoint."""


class InstanceTooLarge(PolyotError, ValueError):
    """Exhaustive subset-sum enumeration exceeds its size budget."""


class EmptyInput(PolyotError, ValueError):
    """An operation received an empty list where values are required."""


class NotCoprime(PolyotError, ValueError):
    """The rational separation bound needs coprime denominators."""


class DimensionMismatch(PolyotError, ValueError):
    """Vectors or diagrams of different lengths were combined."""


class SingularHessian(PolyotError, RuntimeError):
    """The transport Hessian is singular beyond its one-dimensional kernel,
    typically because a cell emptied outside the convergence zone."""


class MaxBacktracks(PolyotError, RuntimeError):
    """Newton backtracking hit its exponent cap without an acceptable step."""


class MissingPWData(PolyotError, ValueError):
    """Bound reporting needs the optional Poincare-Wirtinger data (q, kappa)."""


class TooFewIterates(PolyotError, ValueError):
    """Rate extraction needs at least three iterates in a stage."""


class DegenerateInstance(PolyotError, ValueError):
    """The weight separation constant is zero; the solver guarantees are void."""


class ProblemFormatError(PolyotError, ValueError):
    """A problem or result file failed validation."""
