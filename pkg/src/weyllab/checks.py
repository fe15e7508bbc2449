"""Property suites run by ``weyllab check``.

Each check returns a record ``{"suite", "name", "ok", "margin", "detail"}``;
margins are positive when the property holds with room to spare.  Two tiers
exist: ``small`` for quick runs and ``full`` for the sizes the acceptance
criteria use.
"""

import math
import time

import numpy as np

from .counting import (counting_from_sequence, equivalence_check,
                       sequence_from_counting)
from .matrix_harness import jacobi_eigen, run_triple, triple_pair
from .models import (cusp_constants, gamma, podles_spectrum, r2_table, simon_constant,
                     simon_constant_limit_form, zeta_rvm_counting, zeta_rvm_sequence)
from .rv_calculus import (asymptotic_inverse, gauss_kronrod, karamata_ratio, make_power_log,
                          reciprocal_rv, verify_index)
from .spectra import (SpectralSequence, check_r_triangle, lorentz_norm_G, quasi_norm_g)

SUITES = ("rv", "counting", "spectra", "harness", "models")
TIERS = {"small": 0, "full": 1}


def _rec(suite, name, ok, margin=None, **detail):
    return {"suite": suite, "name": name, "ok": bool(ok),
            "margin": None if margin is None else float(margin), "detail": detail}


def _rv_functions():
    return [make_power_log(-1, 0), make_power_log(-1, 1), make_power_log(-1, 2),
            make_power_log(-0.5, 0), make_power_log(-0.75, 1), make_power_log(1, 2),
            reciprocal_rv(make_power_log(-1, 1))]


def suite_rv(seed=0, tier="small"):
    out = []
    for g in _rv_functions():
        r = verify_index(g, relative=True)
        worst = min(tol - err for row in r["table"] for _, err, tol in row["errors"])
        finals = []
        for row in r["table"]:
            errs = [e for k, e, _ in row["errors"] if k >= 31]
            finals.append(all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(errs, errs[1:])))
        out.append(_rec("rv", f"index:{g.label}", r["passed"] and all(finals), worst))
    top = 40 if TIERS[tier] else 30
    for rho in (-0.5, -0.75):
        g = make_power_log(rho, 0)
        val = karamata_ratio(g, 2.0 ** top)
        out.append(_rec("rv", f"karamata:{rho:g}", abs(val - (rho + 1)) <= 2e-2,
                        2e-2 - abs(val - (rho + 1)), ratio=val))
    for q in (0, 1, 2):
        g = make_power_log(-1, q)
        vals = [karamata_ratio(g, 2.0 ** k) for k in range(10, top + 1)]
        dec = all(b < a for a, b in zip(vals, vals[1:]))
        out.append(_rec("rv", f"karamata_to_zero:-1,{q}", dec and vals[-1] <= vals[0] / 2,
                        vals[0] / 2 - vals[-1], final=vals[-1]))
    for p, q in ((1, 2), (2, 0), (0.5, 1), (1, -1)):
        h = make_power_log(p, q)
        hs = asymptotic_inverse(h, method="numeric")
        ks = range(10, 41, 3)
        eps = [max(abs(h(hs(2.0 ** k)) / 2.0 ** k - 1), abs(hs(h(2.0 ** k)) / 2.0 ** k - 1))
               for k in ks]
        ok = all(b <= a + 1e-12 for a, b in zip(eps, eps[1:])) and eps[-1] < 1e-6
        out.append(_rec("rv", f"inverse_roundtrip:{p:g},{q:g}", ok, 1e-6 - eps[-1]))
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 1e6, 200)
    g = make_power_log(-1, 1)
    rr = reciprocal_rv(reciprocal_rv(g))
    err = float(np.max(np.abs(rr(t) - g(t)) / g(t)))
    out.append(_rec("rv", "reciprocal_involution", err <= 1e-15, 1e-15 - err))
    for g in (make_power_log(-1, 1), make_power_log(-0.75, 2)):
        G = g.primitive()
        ts = np.sort(rng.uniform(0, 1e5, 5 if tier == "small" else 20))
        ref = np.array([gauss_kronrod(g, 0, x, rtol=1e-12) for x in ts])
        rel = float(np.max(np.abs(G(ts) - ref) / ref))
        grid = np.geomspace(1e-3, 1e12, 200)
        inc = bool(np.all(np.diff(G(grid)) > 0)) and G(0.0) == 0.0
        out.append(_rec("rv", f"primitive:{g.label}", rel <= 1e-10 and inc, 1e-10 - rel))
    return out


def suite_spectra(seed=0, tier="small"):
    out = []
    rng = np.random.default_rng(seed)
    M = 4096 if tier == "small" else 1 << 16
    for g in (make_power_log(-1, 0), make_power_log(-0.5, 0), make_power_log(-0.75, 1)):
        G = g.primitive()
        gj = g(np.arange(M, dtype=float))
        s = SpectralSequence.singular(np.sort(gj * rng.uniform(0.2, 3.0, M))[::-1])
        c = float(rng.uniform(0.1, 10))
        a, b = quasi_norm_g(s, g), lorentz_norm_G(s, G)
        a2, b2 = quasi_norm_g(s.scaled(c), g), lorentz_norm_G(s.scaled(c), G)
        hom = max(abs(a2 - c * a) / (c * a), abs(b2 - c * b) / (c * b))
        out.append(_rec("spectra", f"homogeneity:{g.label}", hom <= 1e-12, 1e-12 - hom))
        C = float(np.max(np.cumsum(gj) / G.at_integers(M)[1:]))
        out.append(_rec("spectra", f"marcinkiewicz_i:{g.label}", b <= C * a * (1 + 1e-12),
                        C * a - b))
        if -1 < g.index < 0:
            N = np.arange(1, M + 1, dtype=float)
            Cp = float(np.max(G(N) / (N * g(N))))
            out.append(_rec("spectra", f"marcinkiewicz_ii:{g.label}",
                            a <= Cp * b * (1 + 1e-12), Cp * b - a))
    n = 64 if tier == "small" else 128
    g = make_power_log(-1, 0)
    for k in range(3 if tier == "small" else 10):
        S, T = triple_pair(g, n, seed + k)
        eS, eT, eST = (jacobi_eigen(X).singular for X in (S, T, S + T))
        r = check_r_triangle(eS, eT, eST, g, tail_window=n // 8)
        out.append(_rec("spectra", f"r_triangle:seed{seed + k}", r["ok"], r["margin"]))
    return out


def suite_counting(seed=0, tier="small"):
    out = []
    rng = np.random.default_rng(seed)
    M = 2000
    vals = np.sort(rng.pareto(1.5, M) + 1e-3)[::-1]
    s = SpectralSequence.singular(vals)
    back = sequence_from_counting(counting_from_sequence(s), M)
    out.append(_rec("counting", "step_roundtrip", np.array_equal(back.values, s.values)))
    N = counting_from_sequence(s)
    grid = np.sort(rng.uniform(vals[-1], vals[0] * 1.1, 500))[::-1]
    cnt = N(grid)
    out.append(_rec("counting", "monotone", bool(np.all(np.diff(cnt) >= 0))))
    Mb = 1 << (16 if tier == "small" else 20)
    ps = (1.0,) if tier == "small" else (0.5, 1.0, 2.0)
    qs = (0.0, 1.0) if tier == "small" else (-1.0, 0.0, 1.0, 2.0)
    for p in ps:
        for q in qs:
            h = make_power_log(p, q)
            hs = asymptotic_inverse(h, method="numeric")
            lam = 0.5 / hs(np.arange(Mb, dtype=float) + 4.0)
            rep = equivalence_check(SpectralSequence.singular(lam), h)
            gaps = rep.gaps()[-3:]
            ok = all(b[i] <= a[i] * (1 + 1e-9) + 1e-12 for a, b in zip(gaps, gaps[1:])
                     for i in (1, 2))
            out.append(_rec("counting", f"equivalence_gaps_nonincreasing:{p:g},{q:g}", ok,
                            detail_gaps=[list(x) for x in gaps]))
    return out


def suite_models(seed=0, tier="small"):
    out = []
    e = abs(gamma(0.5) - math.sqrt(math.pi))
    out.append(_rec("models", "gamma_half", e <= 1e-12, 1e-12 - e))
    worst = max(abs(gamma(n + 1) - math.factorial(n)) / math.factorial(n) for n in range(21))
    out.append(_rec("models", "gamma_factorials", worst <= 4 * np.finfo(float).eps,
                    4 * np.finfo(float).eps - worst))
    a, b = simon_constant(2, math.inf), simon_constant_limit_form(2)
    out.append(_rec("models", "simon_two_forms", abs(a - b) <= 1e-12 and abs(a - 1 / math.pi) <= 1e-12,
                    1e-12 - abs(a - 1 / math.pi)))
    alphas = [10.0, 100.0, 1000.0, 10000.0]
    errs = [abs(simon_constant(3, al) - simon_constant(3, math.inf)) for al in alphas]
    scaled = [al * er for al, er in zip(alphas, errs)]
    ok = all(b < a for a, b in zip(errs, errs[1:])) and max(scaled) <= 2 * min(scaled)
    out.append(_rec("models", "simon_limit_rate", ok, detail_scaled=scaled))
    c1, c2 = cusp_constants(2)
    out.append(_rec("models", "cusp_n2", abs(c1 - 1) <= 1e-12 and abs(c2 - 2) <= 1e-12))
    R = 30 if tier == "small" else 100
    table = r2_table(R * R)
    ks = np.arange(-R, R + 1)
    direct = int(np.sum((ks[:, None] ** 2 + ks[None, :] ** 2) <= R * R))
    out.append(_rec("models", f"gauss_circle:R{R}", int(table.sum()) == direct))
    lam_max = 50.0
    sp = podles_spectrum(0.5, lam_max)
    brute = {}
    x = 1
    while True:
        qx = (0.5 ** x - 0.5 ** -x) / (0.5 - 2.0)
        if qx > lam_max:
            break
        for k1 in range(-8, 9):
            for k2 in range(-8, 9):
                v = qx + k1 * k1 + k2 * k2
                if v <= lam_max:
                    brute[v] = brute.get(v, 0) + 2 * x
        x += 1
    same = (len(brute) == len(sp.values)
            and all(abs(v - bv) <= 1e-12 * v and m == brute[bv]
                    for v, m, bv in zip(sp.values, sp.mults, sorted(brute))))
    out.append(_rec("models", "podles_bruteforce_50", same))
    Mz = 2000 if tier == "small" else 100000
    s = zeta_rvm_sequence(Mz)
    Nstep = counting_from_sequence(s)
    gam = 1.0 / s.values
    probe = s.values[:-1] * (1 - 1e-9)
    diff = np.abs(Nstep(probe) - zeta_rvm_counting(1.0 / probe))
    out.append(_rec("models", "rvm_counting_roundtrip", float(diff.max()) <= 1.0,
                    1.0 - float(diff.max()), gamma_min=float(gam[0])))
    return out


def suite_harness(seed=0, tier="small"):
    out = []
    g = make_power_log(-1, 0)
    plan = [(16, 4), (64, 2)] if tier == "small" else [(16, 20), (64, 20), (256, 5)]
    for n, count in plan:
        for k in range(count):
            r = run_triple(g, n, seed + k, commutator=n >= 64)
            for key, v in r.checks.items():
                ok = v["ok"] if isinstance(v, dict) else v.ok
                out.append(_rec("harness", f"{key}:n{n}:seed{seed + k}", ok))
            if r.commutator_bounded is not None:
                out.append(_rec("harness", f"commutator:n{n}:seed{seed + k}", r.commutator_bounded))
    return out


_SUITE_FUNCS = {"rv": suite_rv, "counting": suite_counting, "spectra": suite_spectra,
                "harness": suite_harness, "models": suite_models}


def run_suites(suite="all", seed=0, tier="small"):
    if tier not in TIERS:
        raise ValueError(f"unknown tier {tier!r}")
    names = SUITES if suite == "all" else (suite,)
    records = []
    timings = {}
    for name in names:
        if name not in _SUITE_FUNCS:
            raise ValueError(f"unknown suite {name!r}")
        t0 = time.perf_counter()
        records.extend(_SUITE_FUNCS[name](seed=seed, tier=tier))
        timings[name] = time.perf_counter() - t0
    failed = [r["name"] for r in records if not r["ok"]]
    return {"suite": suite, "tier": tier, "seed": seed, "passed": not failed,
            "failed": failed, "checks": records}, timings
