"""Randomized sketches made robust to adaptive queries through private-median replicas."""

from .dp import OutputGrid, PrivacyParams, advanced_composition, framework_params, private_median, subsampling_amplification
from .framework import BudgetExhaustedError, RobustWrapper, robust_build, robust_query
from .transforms import FastJlMap, GaussianJlMap, SrhtStack, TruncationParams, fwht, jl_apply, psi_r, quantile, ret_norm, srht_apply

__version__ = "0.1.0"

__all__ = [
    "BudgetExhaustedError",
    "FastJlMap",
    "GaussianJlMap",
    "OutputGrid",
    "PrivacyParams",
    "RobustWrapper",
    "SrhtStack",
    "TruncationParams",
    "advanced_composition",
    "framework_params",
    "fwht",
    "jl_apply",
    "private_median",
    "psi_r",
    "quantile",
    "ret_norm",
    "robust_build",
    "robust_query",
    "srht_apply",
    "subsampling_amplification",
]
