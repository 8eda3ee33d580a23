"""Exception hierarchy shared by all pcvt modules."""


class PcvtError(Exception):
    """Base class for every error raised by pcvt."""


class DegenerateInput(PcvtError):
    """Two generators coincide on the torus, or a MACN direction is undefined."""


class DegeneratePolygon(PcvtError):
    """Polygon with fewer than three vertices or zero area."""


class NumericalFailure(PcvtError):
    """The periodic triangulation could not be constructed consistently."""


class Unsupported(PcvtError):
    """Operation not defined for the given input (e.g. Hessian with N = 1)."""


class MaxIterationsExceeded(PcvtError):
    """An iterative method hit its iteration cap before converging."""


class LineSearchFailure(PcvtError):
    """No step satisfying the strong Wolfe conditions was found."""


class PreconditionFailure(PcvtError):
    """The shifted graph Laplacian could not be factorized."""


class EmptySample(PcvtError):
    """An ECDF or statistic was requested from an empty sample."""


class InsufficientData(PcvtError):
    """A summary needs at least one sample per batch."""
