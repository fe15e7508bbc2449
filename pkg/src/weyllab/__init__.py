"""Measurability diagnostics for regularly varying spectral sequences."""

__version__ = "0.1.0"

from .asymptotics import LimitEstimate, MeasurabilityReport, analyze, estimate_limit
from .estimators import MeasurabilityEstimator
from .rv_calculus import RegVarFunction, make_power_log, parse_rv
from .spectra import SpectralSequence

__all__ = [
    "LimitEstimate", "MeasurabilityEstimator", "MeasurabilityReport", "RegVarFunction",
    "SpectralSequence", "analyze", "estimate_limit", "make_power_log", "parse_rv",
]
