"""Numerical laboratory for graded families of function and sequence
spaces: explicit maps whose differentials defeat classical inverse- and
implicit-function arguments, germs with the level-wise contraction
property, and quantitative probes that verify the claimed bounds at desk
scale."""

from .scale_core import (
    AnalyticTailFunction,
    GridFunction,
    LogScalar,
    SeqVector,
    WeightSchedule,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticTailFunction",
    "GridFunction",
    "LogScalar",
    "SeqVector",
    "WeightSchedule",
    "__version__",
]
