"""HSIC sensitivity indices, weighted estimators and second-level analysis."""

from ._core import (
    HsicgsaError,
    Law,
    Prior,
    analytical_priors,
    double_loop,
    hsic,
    ishigami,
    single_loop,
    weighted_hsic,
)

__all__ = [
    "HsicgsaError",
    "Law",
    "Prior",
    "analytical_priors",
    "double_loop",
    "hsic",
    "ishigami",
    "single_loop",
    "weighted_hsic",
]
