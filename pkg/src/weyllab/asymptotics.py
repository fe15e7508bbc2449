"""Windowed limit estimation and the measurability functionals.

Limits are judged on dyadic windows N_k = 2**k.  A curve is called
convergent when its last three deltas do not increase and the band of the
last W windows is narrower than the tolerance; divergent when the band of
consecutive window triples stops shrinking while staying wide; otherwise
inconclusive.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (DomainError, NotAsymptoticallyEqual, PrefixExceeded,
                     TooFewSamples)
from .rv_calculus import KaramataPrimitive, RegVarFunction, index_tolerance
from .spectra import COMPLEX, SIGNED, SINGULAR, SpectralSequence, partial_sums

DEFAULT_W = 4
RATE_TOL = {"power": 1e-3, "log": 5e-2, "log2": 1e-1}

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"


def default_rate(g):
    """Rate hint implied by g: log-type normalizers converge at a logarithmic rate."""
    return "log" if g.index == -1.0 else "power"


def conv_tol_for(rate):
    try:
        return RATE_TOL[rate]
    except KeyError:
        raise ValueError(f"unknown rate hint {rate!r}; use one of {sorted(RATE_TOL)}")


@dataclass
class LimitEstimate:
    windows: list
    estimate: float
    band: tuple
    verdict: str
    deltas: list
    conv_tol: float
    W: int

    @property
    def band_width(self):
        return self.band[1] - self.band[0]

    @property
    def values(self):
        return np.array([v for _, v in self.windows])

    def as_dict(self):
        return {
            "windows": [[_num(n), float(v)] for n, v in self.windows],
            "estimate": float(self.estimate),
            "band": [float(self.band[0]), float(self.band[1])],
            "verdict": self.verdict,
        }


def _num(n):
    n = float(n)
    return int(n) if n.is_integer() and abs(n) < 2 ** 53 else n


def estimate_limit(samples, conv_tol=1e-3, W=DEFAULT_W):
    """Build a :class:`LimitEstimate` from ``(N, value)`` samples sorted by N."""
    samples = [(n, float(v)) for n, v in samples]
    if W < 3:
        raise ValueError("W must be at least 3")
    if len(samples) < W:
        raise TooFewSamples(f"need at least {W} windows, got {len(samples)}")
    Ns = [n for n, _ in samples]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("samples must be sorted by strictly increasing N")
    v = np.array([x for _, x in samples])
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite sample values")
    d = np.abs(np.diff(v))
    tail = v[-W:]
    band = (float(tail.min()), float(tail.max()))
    width = band[1] - band[0]
    # rounding-level noise must not break monotonicity of deltas
    eps = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(v))))
    last = d[-3:]
    nonincreasing = bool(np.all(last[1:] <= last[:-1] + eps))
    if nonincreasing and d[-1] <= conv_tol and width <= conv_tol:
        verdict = CONVERGENT
    else:
        tw = np.array([np.ptp(v[i - 2:i + 1]) for i in range(2, len(v))])
        growing = tw[-1] > conv_tol and (len(tw) < 2 or tw[-1] >= tw[-2] - eps)
        verdict = DIVERGENT if growing else INCONCLUSIVE
    return LimitEstimate(samples, float(v[-1]), band, verdict, d.tolist(), conv_tol, W)


def dyadic_grid(M, start=1):
    """Powers of two from ``start`` up to M inclusive."""
    out = []
    n = start
    while n <= M:
        out.append(n)
        n *= 2
    return out


def _primitive(G):
    if isinstance(G, RegVarFunction):
        return G.primitive()
    if isinstance(G, KaramataPrimitive):
        return G
    raise TypeError("expected a KaramataPrimitive or a RegVarFunction")


def tau_curve_values(s, G, grid):
    G = _primitive(G)
    S = partial_sums(s)
    grid = np.asarray(grid, dtype=np.int64)
    if grid.max() > len(s):
        raise PrefixExceeded(f"grid reaches N={grid.max()} beyond the prefix {len(s)}")
    sums = S[grid]
    if np.iscomplexobj(sums):
        sums = sums.real
    return sums / G(grid.astype(float))


def tau_functional(s, G, grid=None, conv_tol=1e-3, W=DEFAULT_W):
    """Windowed limit of ``tau_N = G(N)^-1 sum_{j<N} lam_j`` (real part for complex input)."""
    if grid is None:
        grid = dyadic_grid(len(s))
    vals = tau_curve_values(s, G, grid)
    return estimate_limit(list(zip(grid, vals.tolist())), conv_tol=conv_tol, W=W)


def _channels(s):
    if s.kind == SINGULAR:
        return s.values, None
    if s.kind == SIGNED:
        return s.plus, s.minus
    raise ValueError("the Weyl detector needs a signed or singular sequence")


def _ratio_estimate(vals, g, grid, conv_tol, W):
    j = np.asarray(grid, dtype=float)
    r = np.asarray(vals)[np.asarray(grid, dtype=np.int64)] / g(j)
    return estimate_limit(list(zip(grid, r.tolist())), conv_tol=conv_tol, W=W)


def _zero_estimate(grid, conv_tol, W):
    return estimate_limit([(n, 0.0) for n in grid], conv_tol=conv_tol, W=W)


def weyl_detector(s, g, grid=None, conv_tol=1e-3, W=DEFAULT_W):
    """Windowed limits of ``lam_j^pm / g(j)`` at dyadic j.

    Singular input yields only the plus channel.  For signed input an empty
    channel is reported as identically zero on the other channel's grid.
    """
    plus, minus = _channels(s)

    def grid_for(vals):
        return dyadic_grid(len(vals) - 1) if grid is None else [n for n in grid if n < len(vals)]

    if minus is None:
        return _ratio_estimate(plus, g, grid_for(plus), conv_tol, W), None
    if len(plus) == 0:
        gm = grid_for(minus)
        return _zero_estimate(gm, conv_tol, W), _ratio_estimate(minus, g, gm, conv_tol, W)
    if len(minus) == 0:
        gp = grid_for(plus)
        return _ratio_estimate(plus, g, gp, conv_tol, W), _zero_estimate(gp, conv_tol, W)
    return (_ratio_estimate(plus, g, grid_for(plus), conv_tol, W),
            _ratio_estimate(minus, g, grid_for(minus), conv_tol, W))


def additivity_residual(s1, s2, s12, G, grid=None, conv_tol=1e-3, W=DEFAULT_W):
    """Windowed ``R_N / G(N)`` with ``R_N = sum lam(S+T) - sum lam(S) - sum lam(T)``."""
    G = _primitive(G)
    M = min(len(s1), len(s2), len(s12))
    if grid is None:
        grid = dyadic_grid(M)
    grid = np.asarray(grid, dtype=np.int64)
    if grid.max() > M:
        raise PrefixExceeded("grid exceeds the shortest prefix")
    R = (partial_sums(s12)[grid] - partial_sums(s1)[grid] - partial_sums(s2)[grid]).real
    vals = R / G(grid.astype(float))
    return estimate_limit(list(zip(grid.tolist(), vals.tolist())), conv_tol=conv_tol, W=W)


@dataclass
class CommutatorReport:
    windows: list
    running_max: list
    bounded: bool
    stab_tol: float

    def as_dict(self):
        return {"windows": [[int(n), float(v)] for n, v in self.windows],
                "running_max": [float(x) for x in self.running_max],
                "bounded": self.bounded}


def commutator_diagnostic(s, g, grid=None, stab_tol=0.05):
    """``|sum_{j<N} lam_j| / (N g(N))`` on dyadic N with running-max stabilization.

    The flag is set when the running max grows by at most ``stab_tol``
    (relative) across the last three windows.
    """
    if grid is None:
        grid = dyadic_grid(len(s))
    grid = np.asarray(grid, dtype=np.int64)
    S = np.abs(partial_sums(s)[grid])
    stat = S / (grid * g(grid.astype(float)))
    run = np.maximum.accumulate(stat)
    if len(run) < 3:
        bounded = False
    else:
        tiny = 64 * np.finfo(float).eps
        bounded = bool(run[-1] <= (1.0 + stab_tol) * run[-3] + tiny)
    return CommutatorReport(list(zip(grid.tolist(), stat.tolist())), run.tolist(),
                            bounded, stab_tol)


def _window_stats(vals, g, start, stop):
    vals = np.asarray(vals)
    j = np.arange(start, stop)
    v = np.zeros(len(j))
    inside = j < len(vals)
    v[inside] = vals[j[inside]]
    r = v / g(j.astype(float))
    return float(r.max()), float(r.min())


def perturbation_bound_check(sS, sT, sD, g, tail_window, prefix=None, r=None, slack=0.05):
    """Tail-window check of ``|L(T)^r - L(S)^r| <= q(T - S)^r``.

    L runs over the upper (max) and lower (min) proxies of ``lam_j^pm / g(j)``
    on indices ``[prefix - tail_window, prefix)``; q is the max of
    ``mu_j(T - S) / g(j)`` on the same indices.  Margins are RHS - LHS and
    pass when they are at least ``-slack * RHS``.
    """
    if r is None:
        r = 1.0 / (abs(g.index) + 1.0)
    if prefix is None:
        prefix = min(len(sS.plus), len(sS.minus), len(sT.plus), len(sT.minus))
    w = int(tail_window)
    start, stop = prefix - w, prefix
    if start < 0 or w < 1:
        raise ValueError("tail window does not fit the prefix")
    muD = sD.values if sD.kind == SINGULAR else sD.moduli()
    q, _ = _window_stats(muD, g, start, stop)
    rhs = q ** r
    margins = {}
    for part in ("plus", "minus"):
        up_S, lo_S = _window_stats(getattr(sS, part), g, start, stop)
        up_T, lo_T = _window_stats(getattr(sT, part), g, start, stop)
        margins[f"upper_{part}"] = rhs - abs(up_T ** r - up_S ** r)
        margins[f"lower_{part}"] = rhs - abs(lo_T ** r - lo_S ** r)
    ok = all(m >= -slack * rhs for m in margins.values())
    return {"rhs": rhs, "r": r, "window": [start, stop], "margins": margins, "ok": bool(ok)}


def finite_rank_bracket(sS, sT, g, K, part="plus"):
    """Interlacing check for a rank-K perturbation T of S.

    Weyl's inequalities give ``lam_{j+K}(S) <= lam_j(T) <= lam_{j-K}(S)``, so
    the windowed ratio ``lam_j(T)/g(j)`` must sit in the bracket formed by the
    shifted ratios of S.  Checked at dyadic j from ``2**(ceil(log2 K) + 2)``.
    """
    a, b = getattr(sS, part), getattr(sT, part)
    n = max(len(a), len(b))
    start = 2 ** (math.ceil(math.log2(max(K, 1))) + 2)
    rows = []
    ok = True
    scale = max(float(np.max(a)) if len(a) else 0.0, float(np.max(b)) if len(b) else 0.0, 1e-300)
    for j in dyadic_grid(n - 1, start=start):
        gj = g(float(j))
        t_val = (b[j] if j < len(b) else 0.0) / gj
        lo = (a[j + K] if j + K < len(a) else 0.0) / gj
        hi = (a[j - K] if j - K < len(a) else 0.0) / gj
        tol = 1e-8 * scale / gj
        inside = lo - tol <= t_val <= hi + tol
        ok &= inside
        rows.append({"j": j, "value": t_val, "bracket": [lo, hi], "inside": bool(inside)})
    return {"start": start, "rows": rows, "ok": bool(ok)}


def asymptotic_ratio_check(g1, g2, ks=range(10, 41)):
    """Verify ``g1/g2 -> 1`` on t = 2**k; returns the list of |ratio - 1|."""
    errs = []
    for k in ks:
        t = 2.0 ** k
        errs.append(abs(g1(t) / g2(t) - 1.0))
    tols = [index_tolerance(g1.index, 2.0 ** k) for k in ks]
    n = len(errs)
    tail = errs[-max(1, n // 3):]
    head = errs[:max(1, n // 3)]
    ok = all(e <= t for e, t in zip(errs[-max(1, n // 3):], tols[-max(1, n // 3):]))
    ok = ok and max(tail) <= max(head) + 1e-15
    return ok, errs


def g_independence_check(s, g1, g2, grid=None, conv_tol=None, W=DEFAULT_W):
    """Compare the tau and Weyl curves computed with two equivalent normalizers."""
    ok_ratio, errs = asymptotic_ratio_check(g1, g2)
    if not ok_ratio:
        raise NotAsymptoticallyEqual(
            f"g1/g2 does not tend to 1 (final |ratio - 1| = {errs[-1]:.3g})")
    tol = conv_tol if conv_tol is not None else conv_tol_for(default_rate(g1))
    t1 = tau_functional(s, g1.primitive(), grid, conv_tol=tol, W=W)
    t2 = tau_functional(s, g2.primitive(), grid, conv_tol=tol, W=W)
    out = {"tau": _compare(t1, t2)}
    if s.kind in (SINGULAR, SIGNED):
        w1 = weyl_detector(s, g1, grid, conv_tol=tol, W=W)
        w2 = weyl_detector(s, g2, grid, conv_tol=tol, W=W)
        out["lambda_plus"] = _compare(w1[0], w2[0])
        if w1[1] is not None:
            out["lambda_minus"] = _compare(w1[1], w2[1])
    out["ok"] = all(v["agree"] for v in out.values())
    out["ratio_errors"] = errs
    return out


def _compare(a, b):
    same = a.verdict == b.verdict
    diff = abs(a.estimate - b.estimate)
    width = max(a.band_width, b.band_width)
    agree = same and (a.verdict != CONVERGENT or diff <= width)
    return {"verdicts": [a.verdict, b.verdict], "estimates": [a.estimate, b.estimate],
            "difference": diff, "band_width": width, "agree": bool(agree)}


def nc_integral_from_weyl_law(c, p, q):
    """Integral of A^-p for a Weyl law ``N(A; lam) ~ c lam^p (log lam)^q``: ``c p^-q``."""
    if not (c > 0 and p > 0 and q >= -1):
        raise DomainError("need c > 0, p > 0 and q >= -1")
    return c * p ** (-q)


@dataclass
class MeasurabilityReport:
    tau: LimitEstimate
    lambda_plus: Optional[LimitEstimate]
    lambda_minus: Optional[LimitEstimate]
    nc_integral: Optional[float]
    spectrally_measurable: bool
    commutator_flag: bool
    curve: list = field(default_factory=list)

    def as_dict(self):
        return {
            "tau": self.tau.as_dict(),
            "lambda_plus": self.lambda_plus.as_dict() if self.lambda_plus else None,
            "lambda_minus": self.lambda_minus.as_dict() if self.lambda_minus else None,
            "nc_integral": self.nc_integral,
            "spectrally_measurable": self.spectrally_measurable,
            "commutator_flag": self.commutator_flag,
        }


def analyze(s, g, rate=None, W=DEFAULT_W, max_n=None):
    """Run the measurability pipeline on one sequence.

    Non-negative singular input is read as the spectrum of a positive
    operator, so its minus channel is identically zero.  When both Weyl
    channels converge the integral is reported as ``Lambda+ - Lambda-``;
    otherwise it is the tau estimate, and only if tau converges.
    """
    if rate is None:
        rate = default_rate(g)
    tol = conv_tol_for(rate)
    M = len(s) if max_n is None else min(len(s), int(max_n))
    grid = dyadic_grid(M)
    tau = tau_functional(s, g.primitive(), grid, conv_tol=tol, W=W)
    lp = lm = None
    if s.kind != COMPLEX:
        lp, lm = weyl_detector(s, g, [n for n in grid if n < M], conv_tol=tol, W=W)
        if lm is None:
            lm = _zero_estimate([n for n, _ in lp.windows], tol, W)
    spectral = (lp is not None and lp.verdict == CONVERGENT and lm.verdict == CONVERGENT)
    nc = None
    if tau.verdict == CONVERGENT:
        nc = lp.estimate - lm.estimate if spectral else tau.estimate
    comm = commutator_diagnostic(s, g, grid).bounded
    curve = _curve_rows(s, g, grid, tau)
    return MeasurabilityReport(tau, lp, lm, nc, bool(spectral), comm, curve)


def _curve_rows(s, g, grid, tau):
    plus, minus = (s.values, None) if s.kind == SINGULAR else (
        (s.plus, s.minus) if s.kind == SIGNED else (None, None))
    rows = []
    for (n, t) in tau.windows:
        gn = g(float(n))
        lp = plus[n] / gn if plus is not None and n < len(plus) else None
        if s.kind == SINGULAR:
            lm = 0.0 if n < len(plus) else None
        else:
            lm = minus[n] / gn if minus is not None and n < len(minus) else None
        rows.append((n, t, lp, lm))
    return rows
