"""Estimator-style wrapper around the measurability pipeline.

Follows the fit / trailing-underscore convention so results can be inspected
uniformly, but a fit consumes one spectral sequence rather than a
samples-by-features matrix, so there is no predict or transform.
"""

import numpy as np

from .asymptotics import DEFAULT_W, analyze
from .rv_calculus import RegVarFunction, parse_rv
from .spectra import SpectralSequence


class MeasurabilityEstimator:
    """Fit the tau functional and Weyl detector of a sequence against g.

    Parameters
    ----------
    g : str or RegVarFunction
        Normalizing function, as an object or a spec string.
    rate : str or None
        Convergence-rate hint (``power``, ``log`` or ``log2``); None derives it from g.
    W : int
        Number of trailing windows in each band.
    max_n : int or None
        Truncate the prefix before fitting.
    """

    def __init__(self, g="power-log:-1,0", rate=None, W=DEFAULT_W, max_n=None):
        self.g = g
        self.rate = rate
        self.W = W
        self.max_n = max_n

    def get_params(self, deep=True):
        return {"g": self.g, "rate": self.rate, "W": self.W, "max_n": self.max_n}

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"invalid parameter {key!r}")
            setattr(self, key, value)
        return self

    def _g(self):
        return self.g if isinstance(self.g, RegVarFunction) else parse_rv(self.g)

    def fit(self, X, y=None):
        s = X if isinstance(X, SpectralSequence) else SpectralSequence.singular(np.asarray(X))
        rep = analyze(s, self._g(), rate=self.rate, W=self.W, max_n=self.max_n)
        self.report_ = rep
        self.tau_ = rep.tau
        self.lambda_plus_ = rep.lambda_plus
        self.lambda_minus_ = rep.lambda_minus
        self.nc_integral_ = rep.nc_integral
        self.spectrally_measurable_ = rep.spectrally_measurable
        self.commutator_flag_ = rep.commutator_flag
        self.n_terms_ = len(s) if self.max_n is None else min(len(s), int(self.max_n))
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"
