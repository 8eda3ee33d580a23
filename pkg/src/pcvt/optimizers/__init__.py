from .cvt import CvtObjective, OptimizerReport, default_tol, lbfgs, lloyd, plbfgs
from .lbfgs import LbfgsResult, LbfgsState, minimize_lbfgs
from .line_search import LineSearchResult, WolfeCertificate, strong_wolfe
from .preconditioner import SHIFT_LADDER, ShiftedFactor, solve_preconditioner

__all__ = [
    "CvtObjective",
    "LbfgsResult",
    "LbfgsState",
    "LineSearchResult",
    "OptimizerReport",
    "SHIFT_LADDER",
    "ShiftedFactor",
    "WolfeCertificate",
    "default_tol",
    "lbfgs",
    "lloyd",
    "minimize_lbfgs",
    "plbfgs",
    "solve_preconditioner",
    "strong_wolfe",
]
