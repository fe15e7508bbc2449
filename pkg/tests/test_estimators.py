import math

import numpy as np
import pytest

from weyllab import MeasurabilityEstimator, make_power_log
from weyllab.models import generator_sequence, planted_sequence


def test_fit_sets_attributes():
    g = make_power_log(-1, 1)
    est = MeasurabilityEstimator(g=g).fit(generator_sequence(g, 1 << 18))
    assert est.spectrally_measurable_
    assert est.nc_integral_ == pytest.approx(1.0, abs=5e-3)
    assert est.lambda_plus_.verdict == "convergent"
    assert est.n_terms_ == 1 << 18


def test_fit_accepts_array_and_spec_string():
    j = np.arange(1 << 16, dtype=float)
    est = MeasurabilityEstimator(g="power-log:-1,0").fit(2.0 / (j + 1))
    assert est.lambda_plus_.estimate == pytest.approx(2.0, rel=1e-14)


def test_params_round_trip():
    est = MeasurabilityEstimator(W=5)
    assert est.get_params()["W"] == 5
    est.set_params(W=6, max_n=1024)
    assert est.W == 6 and est.max_n == 1024
    with pytest.raises(ValueError):
        est.set_params(alpha=1)
    assert "W=6" in repr(est)


def test_max_n_truncates():
    s = planted_sequence(1.0, -1, 0, 1 << 14)
    est = MeasurabilityEstimator(max_n=1 << 10).fit(s)
    assert est.n_terms_ == 1 << 10
    assert est.tau_.windows[-1][0] == 1 << 10


def test_divergent_input_gives_no_integral():
    s = planted_sequence(1.0, -1, 0, 1 << 16, "osc/0.5")
    est = MeasurabilityEstimator().fit(s)
    assert est.nc_integral_ is None and not est.spectrally_measurable_
    assert math.isfinite(est.tau_.estimate)
