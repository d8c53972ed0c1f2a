"""Randomized quasi-Monte Carlo estimators and consistency studies."""

from .core import BudgetExceeded, EstimateRecord, Integrand, PointSet, RngStream, derive_stream, uniform01
from .estimators import EstimatorSpec, MedianConfig, median_of_k, realize

__all__ = [
    "BudgetExceeded", "EstimateRecord", "EstimatorSpec", "Integrand", "MedianConfig",
    "PointSet", "RngStream", "derive_stream", "median_of_k", "realize", "uniform01",
]
__version__ = "0.1.0"
