"""Counting functions ``N(lam) = #{j : lam_j > lam}`` and their generalized inverses."""

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import estimate_limit, DEFAULT_W
from .errors import NotDivergent, PrefixExhausted, SpecError
from .rv_calculus import asymptotic_inverse
from .spectra import SpectralSequence, SIGNED, SINGULAR


class CountingFunction:
    """Non-increasing map ``lam -> N(lam)``.

    ``step`` functions count stored values (optionally with multiplicities)
    and refuse to evaluate below the smallest stored value; ``model``
    functions wrap a vectorized callable.
    """

    def __init__(self, kind, func=None, values=None, counts=None, label=None):
        self.kind = kind
        self.label = label or kind
        self._func = func
        if kind == "step":
            v = np.asarray(values, dtype=float)
            if counts is None:
                order = np.argsort(v, kind="stable")
                self._asc = v[order]
                self._cum = None
            else:
                c = np.asarray(counts, dtype=np.int64)
                order = np.argsort(v, kind="stable")
                self._asc = v[order]
                # _cum[i] = total multiplicity of asc[i:]
                self._cum = np.concatenate([np.cumsum(c[order][::-1])[::-1], [0]])
            self._asc.setflags(write=False)
            self.floor = float(self._asc[0]) if len(self._asc) else 0.0
            self.top = float(self._asc[-1]) if len(self._asc) else 0.0
        elif kind != "model":
            raise ValueError(f"unknown counting kind {kind!r}")

    @classmethod
    def from_values(cls, values, counts=None, label="step"):
        return cls("step", values=values, counts=counts, label=label)

    @classmethod
    def model(cls, func, label="model"):
        return cls("model", func=func, label=label)

    def __call__(self, lam):
        lam_arr = np.asarray(lam, dtype=float)
        if self.kind == "model":
            out = np.asarray(self._func(lam_arr), dtype=float)
        else:
            if np.any(lam_arr < self.floor):
                raise PrefixExhausted(
                    f"cannot count below the prefix floor {self.floor!r}")
            pos = np.searchsorted(self._asc, lam_arr, side="right")
            if self._cum is None:
                out = len(self._asc) - pos
            else:
                out = self._cum[pos]
        return out.item() if np.ndim(out) == 0 else out


def counting_from_sequence(s, part=None):
    """Step counting function of a sequence.

    ``part`` is ``singular``, ``plus``, ``minus`` or ``modulus``; by default
    singular sequences use their values and others their moduli.
    """
    if part is None:
        part = "singular" if s.kind == SINGULAR else "modulus"
    if part == "singular":
        if s.kind != SINGULAR:
            raise ValueError("part=singular needs a singular sequence")
        vals = s.values
    elif part in ("plus", "minus"):
        if s.kind != SIGNED:
            raise ValueError(f"part={part} needs a signed sequence")
        vals = getattr(s, part)
    elif part == "modulus":
        vals = s.moduli()
    else:
        raise ValueError(f"unknown part {part!r}")
    return CountingFunction.from_values(vals, label=f"step:{part}")


def sequence_from_counting(N, M, rtol=1e-12):
    """``lam_j = sup{lam > 0 : N(lam) >= j + 1}`` for j < M.

    For integer-valued N this is ``sup{lam : N(lam) > j}``; for continuous
    models the ``>= j + 1`` form keeps lam_0 finite, so ``N(lam) = 1/lam``
    gives ``lam_j = 1/(j + 1)``.  Step functions are inverted exactly.
    """
    M = int(M)
    if M < 1:
        raise ValueError("M must be positive")
    if N.kind == "step":
        if N._cum is None:
            vals = N._asc[::-1]
        else:
            vals = np.repeat(N._asc, N._cum[:-1] - N._cum[1:])[::-1]
        if M > len(vals):
            raise PrefixExhausted(f"step data holds only {len(vals)} values")
        return SpectralSequence.singular(vals[:M])
    need = np.arange(1, M + 1, dtype=float)
    lo = np.ones(M)
    hi = np.ones(M)
    # grow hi until N(hi) < need, shrink lo until N(lo) >= need
    for _ in range(2200):
        m = N(hi) >= need
        if not np.any(m):
            break
        hi[m] *= 2.0
    else:
        raise NotDivergent("N does not decrease below the requested counts")
    for _ in range(2200):
        m = N(lo) < need
        if not np.any(m):
            break
        lo[m] *= 0.5
        if np.any(lo[m] < 1e-300):
            raise NotDivergent(f"N stays below {int(need[m][-1])} as lam -> 0")
    else:
        raise NotDivergent("N is bounded")
    for _ in range(200):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = np.sqrt(lo * hi)
        mid = np.where((mid <= lo) | (mid >= hi), 0.5 * (lo + hi), mid)
        ok = N(mid) >= need
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    vals = np.minimum.accumulate(lo)
    return SpectralSequence.singular(vals)


def dyadic_lambda_grid(lam_max, floor):
    """``lam_max * 2**-k`` for k = 0, 1, ... while the value stays >= floor."""
    if floor <= 0:
        raise ValueError("the grid floor must be positive")
    k = int(math.floor(math.log2(lam_max / floor))) if lam_max >= floor else -1
    grid = lam_max * np.exp2(-np.arange(k + 1, dtype=float))
    return grid[grid >= floor]


def scaled_counting_limit(N, h, grid=None, conv_tol=1e-3, W=DEFAULT_W):
    """Windowed limit of ``N(lam) / h(1/lam)`` along a decreasing lam-grid.

    The window coordinate stored in the estimate is ``1/lam``.
    """
    if not h.index > 0:
        raise ValueError("h must have positive index")
    if grid is None:
        if N.kind != "step":
            raise ValueError("model counting functions need an explicit grid")
        grid = dyadic_lambda_grid(N.top, max(N.floor, 1e-300))
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) >= 0):
        raise ValueError("grid must decrease toward 0")
    vals = np.asarray(N(grid), dtype=float) / h(1.0 / grid)
    return estimate_limit(list(zip((1.0 / grid).tolist(), vals.tolist())), conv_tol=conv_tol, W=W)


@dataclass
class EquivalenceWindow:
    k: int
    seq_sup: float
    seq_inf: float
    cnt_sup: float
    cnt_inf: float

    @property
    def gap_sup(self):
        return abs(self.seq_sup - self.cnt_sup)

    @property
    def gap_inf(self):
        return abs(self.seq_inf - self.cnt_inf)


@dataclass
class EquivalenceReport:
    p: float
    windows: list
    W: int

    def trailing(self, upto=None):
        """(limsup, liminf) pairs for both sides over the last W blocks ending at ``upto``."""
        ws = self.windows if upto is None else self.windows[:upto + 1]
        tail = ws[-self.W:]
        return {
            "seq_limsup": max(w.seq_sup for w in tail),
            "seq_liminf": min(w.seq_inf for w in tail),
            "cnt_limsup": max(w.cnt_sup for w in tail),
            "cnt_liminf": min(w.cnt_inf for w in tail),
        }

    def gaps(self):
        """Trailing-window gaps for limsup and liminf, one pair per block."""
        out = []
        for i in range(len(self.windows)):
            t = self.trailing(i)
            out.append((self.windows[i].k, abs(t["seq_limsup"] - t["cnt_limsup"]),
                        abs(t["seq_liminf"] - t["cnt_liminf"])))
        return out

    def relative_gaps(self):
        t = self.trailing()
        sup = abs(t["seq_limsup"] - t["cnt_limsup"]) / max(abs(t["cnt_limsup"]), 1e-300)
        inf = abs(t["seq_liminf"] - t["cnt_liminf"]) / max(abs(t["cnt_liminf"]), 1e-300)
        return sup, inf

    def as_dict(self):
        t = self.trailing() if self.windows else {}
        return {"p": self.p, "final": t,
                "gaps": [list(x) for x in self.gaps()],
                "windows": [[w.k, w.seq_sup, w.seq_inf, w.cnt_sup, w.cnt_inf]
                            for w in self.windows]}


def equivalence_check(s, h, inverse="numeric", W=2):
    """Compare both sides of the counting/eigenvalue equivalence on dyadic blocks.

    Block k collects indices j in (2^k, 2^(k+1)].  The sequence side is
    ``h#(j) lam_j``.  On the counting side ``N(lam) = j`` on [lam_j, lam_{j-1}),
    so the exact sup and inf of ``(N(lam) / h(1/lam))**(1/p)`` over the block
    are attained at the interval ends.  ``inverse`` selects how h# is formed
    (``numeric`` is an exact inverse, ``auto`` the closed form when available).
    """
    p = h.index
    if not p > 0:
        raise ValueError("h must have positive index")
    lam = s.moduli() if s.kind != SINGULAR else s.values
    M = len(lam)
    hs = asymptotic_inverse(h, method=inverse)
    windows = []
    k = 0
    while 2 ** (k + 1) <= M - 1:
        j = np.arange(2 ** k + 1, 2 ** (k + 1) + 1)
        lj = lam[j]
        lprev = lam[j - 1]
        seq = hs(j.astype(float)) * lj
        strict = lj < lprev
        if not np.any(strict) or np.any(lj <= 0):
            if np.all(lj == 0):
                windows.append(EquivalenceWindow(k, 0.0, 0.0, 0.0, 0.0))
            k += 1
            continue
        js = j[strict].astype(float)
        sup_c = (js / h(1.0 / lprev[strict])) ** (1.0 / p)
        inf_c = (js / h(1.0 / lj[strict])) ** (1.0 / p)
        windows.append(EquivalenceWindow(k, float(seq.max()), float(seq.min()),
                                float(sup_c.max()), float(inf_c.min())))
        k += 1
    return EquivalenceReport(p, windows, W)


def parse_counting(spec):
    """``rvm`` or ``smalllam:<c>,<p>,<q>`` (N(lam) = c lam^-p |log lam|^q below 1/e)."""
    spec = spec.strip()
    if spec == "rvm":
        from .models import zeta_rvm_counting_small
        return CountingFunction.model(zeta_rvm_counting_small, label="rvm")
    kind, _, rest = spec.partition(":")
    if kind == "smalllam":
        try:
            c, p, q = (float(x) for x in rest.split(","))
        except ValueError:
            raise SpecError(f"bad counting spec {spec!r}; expected smalllam:<c>,<p>,<q>")
        return CountingFunction.model(small_lambda_model(c, p, q), label=spec)
    raise SpecError(f"unknown counting spec {spec!r}")


def small_lambda_model(c, p, q):
    """``c lam^-p |log lam|^q`` for lam < 1/e, continued as ``c lam^-p`` above."""
    def N(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore"):
            L = np.maximum(-np.log(lam), 1.0)
        return c * lam ** (-p) * L ** q
    return N


# name kept for callers of the published interface
equivalence_check_B5 = equivalence_check
