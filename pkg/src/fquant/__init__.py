"""Kernel conditional quantiles of a right-censored response given a curve covariate."""

from .bandwidth import BandwidthSelection, select_bandwidth
from .estimator import IntervalPrediction, QuantileInterval, QuantileModel
from .functional import Curve, SemiMetricSpec, distance, second_derivative, small_ball_cdf
from .kernels import KernelMoments, estimate_tau, eval_H, eval_H1, eval_K, kernel_moments
from .simulate import SimModel, generate, true_quantile
from .survival import CensoredPair, KaplanMeierFit, fit_km, survival_at
from .workflow import DayRecord, extract_response, interval_coverage, mape

__version__ = "0.1.0"

__all__ = [
    "BandwidthSelection",
    "CensoredPair",
    "Curve",
    "DayRecord",
    "IntervalPrediction",
    "KaplanMeierFit",
    "KernelMoments",
    "QuantileInterval",
    "QuantileModel",
    "SemiMetricSpec",
    "SimModel",
    "distance",
    "estimate_tau",
    "eval_H",
    "eval_H1",
    "eval_K",
    "extract_response",
    "fit_km",
    "generate",
    "interval_coverage",
    "kernel_moments",
    "mape",
    "second_derivative",
    "select_bandwidth",
    "small_ball_cdf",
    "survival_at",
    "true_quantile",
]
