import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq
from scipy.special import gamma as sp_gamma

from weyllab.asymptotics import weyl_detector
from weyllab.counting import counting_from_sequence
from weyllab.errors import (DomainError, EmptyInput, NotAscending, ParseError, PrefixExhausted,
                            SpecError)
from weyllab.models import (ball_volume, cusp_constants, gamma, generator_sequence,
                            parse_model_spec, parse_perturbation, planted_sequence,
                            podles_spectrum, podles_torus_sequence, q_number, r2, r2_table,
                            read_zeros, simon_constant, simon_constant_limit_form, sphere_area,
                            zeta_file_sequence, zeta_rvm_counting, zeta_rvm_counting_small,
                            zeta_rvm_sequence)
from weyllab.rv_calculus import make_power_log


def test_gamma_half_and_factorials():
    assert abs(gamma(0.5) - math.sqrt(math.pi)) <= 1e-12
    for n in range(1, 21):
        assert gamma(n + 1) == math.factorial(n)
    with pytest.raises(DomainError):
        gamma(-2)


@given(st.floats(0.5, 30))
def test_gamma_matches_reference(x):
    assert gamma(x) == pytest.approx(float(sp_gamma(x)), rel=1e-12)


@given(st.floats(-5.5, 0.45).filter(lambda x: abs(x - round(x)) > 1e-3))
def test_gamma_reflection(x):
    assert gamma(x) == pytest.approx(float(sp_gamma(x)), rel=1e-11)


def test_ball_and_sphere():
    assert ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)


def test_simon_constants():
    assert abs(simon_constant(2, math.inf) - 1 / math.pi) <= 1e-12
    assert abs(simon_constant_limit_form(2) - 1 / math.pi) <= 1e-12
    assert abs(simon_constant(2, 1000) - 1 / math.pi) <= 1e-3
    with pytest.raises(DomainError):
        simon_constant(1, 1)
    with pytest.raises(DomainError):
        simon_constant(2, 0)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_simon_limit_forms_agree(n):
    assert simon_constant(n, math.inf) == pytest.approx(simon_constant_limit_form(n), rel=1e-12)


def test_simon_error_is_order_one_over_alpha():
    alphas = [1e2, 1e3, 1e4, 1e5]
    errs = [abs(simon_constant(3, a) - simon_constant(3, math.inf)) for a in alphas]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    scaled = [e * a for e, a in zip(errs, alphas)]
    assert max(scaled) / min(scaled) < 1.1


def test_cusp_constants():
    c1, c2 = cusp_constants(2)
    assert abs(c1 - 1) <= 1e-12 and abs(c2 - 2) <= 1e-12
    c1, _ = cusp_constants(3)
    assert c1 == pytest.approx(2 * (2 * math.pi) ** -1.5 * 4 * math.pi / 3, rel=1e-14)


def test_q_number():
    assert abs(q_number(3, 0.999) - 3) < 1e-4
    assert q_number(1.5, 0.5) == pytest.approx((0.5 ** 1.5 - 0.5 ** -1.5) / (0.5 - 2), rel=1e-14)
    assert q_number(1.5, 0.5) == pytest.approx(1.64992, abs=1e-5)
    assert q_number(1, 0.3) == pytest.approx(1.0, rel=1e-15)


def test_r2_gauss_circle():
    table = r2_table(100 ** 2)
    for R in (1, 2, 5, 17, 50, 100):
        k = np.arange(-R, R + 1)
        brute = int(np.sum(k[:, None] ** 2 + k[None, :] ** 2 <= R * R))
        assert int(table[:R * R + 1].sum()) == brute


def test_r2_scalar_matches_table():
    table = r2_table(3000)
    assert [r2(n) for n in range(3001)] == table.tolist()
    assert r2(25) == 12 and r2(3) == 0 and r2(0) == 1


def _podles_brute(q, lam_max):
    # spins l = 1/2, 3/2, ... with multiplicity 2l + 1, torus modes k in Z^2
    out = Counter()
    ell = 0.5
    R = int(math.isqrt(int(lam_max)))
    while True:
        x = ell + 0.5
        qx = (q ** x - q ** -x) / (q - 1 / q)
        if qx > lam_max:
            break
        for k1 in range(-R, R + 1):
            for k2 in range(-R, R + 1):
                v = qx + k1 * k1 + k2 * k2
                if v <= lam_max:
                    out[v] += int(2 * ell + 1)
        ell += 1
    return out


@pytest.mark.parametrize("q", [0.5, 0.8])
def test_podles_matches_brute_force(q):
    sp = podles_spectrum(q, 50)
    brute = _podles_brute(q, 50)
    ref = np.repeat(np.array(sorted(brute)), [brute[v] for v in sorted(brute)])
    got = np.repeat(sp.values, sp.mults)
    assert len(got) == len(ref) == sp.total
    assert np.allclose(got, ref, rtol=1e-13, atol=0)


def test_podles_counting_and_limits():
    sp = podles_spectrum(0.5, 1000)
    assert sp.count_le(1.0) == 2
    assert sp.count_le(0.5) == 0
    with pytest.raises(PrefixExhausted):
        sp.count_le(1001)
    assert podles_spectrum(0.5, 1000, doubled=True).total == 2 * sp.total
    with pytest.raises(DomainError):
        podles_spectrum(1.5, 10)


def test_podles_torus_sequence_head_and_cap():
    s = podles_torus_sequence(0.5, 1000, max_len=1000)
    assert len(s) == 1000
    assert s.values[0] == 1.0
    full = podles_torus_sequence(0.5, 1000)
    assert np.array_equal(full.values[:1000], s.values)


def test_rvm_counting_point_value():
    assert zeta_rvm_counting(100.0) == pytest.approx(2 * (100 / (2 * math.pi)) * (math.log(100 / (2 * math.pi)) - 1), rel=1e-15)
    assert zeta_rvm_counting(100.0) == pytest.approx(56.2547, abs=1e-4)
    assert zeta_rvm_counting(10.0) == 0.0


def test_rvm_sequence_first_values_match_root_finding():
    s = zeta_rvm_sequence(2)
    for j in range(2):
        gam = brentq(lambda x: zeta_rvm_counting(x) - (j + 1), 2 * math.pi * math.e, 1e3,
                     xtol=1e-14, rtol=1e-15)
        assert s.values[j] == pytest.approx(1 / gam, rel=1e-11)
    with pytest.raises(DomainError):
        zeta_rvm_sequence(1)


def test_rvm_counting_round_trip():
    s = zeta_rvm_sequence(10_000)
    N = counting_from_sequence(s)
    lam = s.values[:-1]
    diff = np.asarray(N(lam), dtype=float) - zeta_rvm_counting_small(lam)
    # bisection to 1e-12 relative width leaves about 1e-8 in the steep model count
    assert np.all(np.abs(diff) <= 1 + 1e-6)


def test_rvm_weyl_ratio_trends_to_one_over_pi():
    s = zeta_rvm_sequence(1 << 18)
    plus, _ = weyl_detector(s, make_power_log(-1, 1), conv_tol=5e-2)
    vals = plus.values[-6:]
    assert np.all(np.diff(vals) > 0) and vals[-1] < 1 / math.pi


def test_read_zeros(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("# zeros\n14.134725\n\n21.022040  # second\n")
    assert read_zeros(p).tolist() == [14.134725, 21.022040]
    p.write_text("14.134725\n")
    s = zeta_file_sequence(p, 2)
    assert s.values.tolist() == [1 / 14.134725, 1 / 14.134725]
    with pytest.raises(PrefixExhausted):
        zeta_file_sequence(p, 3)
    p.write_text("# nothing\n")
    with pytest.raises(EmptyInput):
        read_zeros(p)
    p.write_text("10.0\n9.0\n")
    with pytest.raises(NotAscending) as ei:
        read_zeros(p)
    assert ei.value.line == 2
    p.write_text("14.1\nfourteen\n")
    with pytest.raises(ParseError, match=":2"):
        read_zeros(p)
    p.write_text("-1\n")
    with pytest.raises(ParseError):
        read_zeros(p)


def test_generator_sequence_is_g():
    g = make_power_log(-1, 1)
    s = generator_sequence(g, 1024)
    assert np.array_equal(s.values, g(np.arange(1024, dtype=float)))


def test_planted_none_and_og():
    g = make_power_log(-1, 0)
    plus, _ = weyl_detector(planted_sequence(1.0, -1, 0, 1 << 16), g)
    assert plus.verdict == "convergent" and plus.estimate == pytest.approx(1.0, rel=1e-14)
    s = planted_sequence(1.0, -1, 0, 1 << 20, "og")
    plus, _ = weyl_detector(s, g)
    # the o(g) correction is 1/log(j + 3): visible, decreasing, not yet below tolerance
    for n, v in plus.windows:
        assert v == pytest.approx(1 + 1 / math.log(n + 3), rel=1e-14)
    assert np.all(np.diff(plus.values) < 0)


def test_planted_finite_rank_and_signed():
    s = planted_sequence(2.0, -1, 0, 100, "fr/3/50")
    assert s.values[:3].tolist() == [50.0, 50.0, 50.0]
    sg = planted_sequence(2.0, -1, 0, 100, "none", c_minus=0.5)
    assert sg.kind == "eigen_real_signed" and sg.minus[0] == 0.5
    with pytest.raises(SpecError):
        parse_perturbation("wobble")


def test_parse_model_spec(tmp_path):
    assert parse_model_spec("zeta-rvm:1000").params == {"M": 1000}
    assert parse_model_spec("podles:0.5,100").params == {"q": 0.5, "lambda_max": 100.0}
    spec = parse_model_spec("planted:1,-1,0,osc/0.25", size=64)
    assert spec.params["M"] == 64 and spec.build().values.shape == (64,)
    gen = parse_model_spec("generator:power-log:-1,1,1024")
    assert len(gen.build()) == 1024
    z = tmp_path / "z,with,commas.txt"
    z.write_text("14.13\n21.02\n")
    assert len(parse_model_spec(f"zeta-file:{z},4").build()) == 4
    for bad in ("zeta-rvm:0", "zeta-rvm:x", "podles:2,100", "podles:0.5", "planted:1,2",
                "nope:1", "generator:power-log:-1,1"):
        with pytest.raises((SpecError, DomainError)):
            parse_model_spec(bad).build()


def test_models_deterministic():
    a = planted_sequence(1.0, -1, 1, 4096, "osc/0.3", c_minus=0.4)
    b = planted_sequence(1.0, -1, 1, 4096, "osc/0.3", c_minus=0.4)
    assert a.plus.tobytes() == b.plus.tobytes() and a.minus.tobytes() == b.minus.tobytes()
