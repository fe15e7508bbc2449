"""Finite prefixes of eigenvalue and singular-value sequences.

Norms, partial sums and the elementary majorization inequalities live here.
Signed prefixes keep their positive and negative parts separately; the merged
eigenvalue stream orders them by modulus with positive entries first on ties.
"""

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import PrefixExceeded, WindowTooLarge, ParseError

SINGULAR = "singular"
SIGNED = "eigen_real_signed"
COMPLEX = "eigen_complex"


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


def _check_nonincreasing(a, what):
    if len(a) > 1 and np.any(np.diff(a) > 0):
        i = int(np.nonzero(np.diff(a) > 0)[0][0])
        raise ValueError(f"{what} must be non-increasing (entry {i + 1} exceeds entry {i})")


@dataclass(frozen=True, eq=False)
class SpectralSequence:
    """Immutable prefix of a spectral sequence.

    ``values`` holds the singular values or complex eigenvalues; signed
    sequences store ``plus`` and ``minus`` (both non-negative) and expose the
    merged signed stream through :meth:`eigenvalues`.
    """

    kind: str
    values: Optional[np.ndarray] = None
    plus: Optional[np.ndarray] = None
    minus: Optional[np.ndarray] = None
    _merged: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def singular(cls, values):
        v = _frozen(values)
        if len(v) == 0:
            raise ValueError("a spectral sequence needs at least one entry")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("singular values must be finite and non-negative")
        _check_nonincreasing(v, "singular values")
        return cls(SINGULAR, values=v)

    @classmethod
    def eigen_complex(cls, values):
        v = _frozen(values, dtype=complex)
        if len(v) == 0:
            raise ValueError("a spectral sequence needs at least one entry")
        _check_nonincreasing(np.abs(v), "eigenvalue moduli")
        return cls(COMPLEX, values=v)

    @classmethod
    def signed(cls, plus, minus):
        p, m = _frozen(plus), _frozen(minus)
        if len(p) + len(m) == 0:
            raise ValueError("a spectral sequence needs at least one entry")
        for name, a in (("lambda_plus", p), ("lambda_minus", m)):
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite and non-negative")
            _check_nonincreasing(a, name)
        return cls(SIGNED, plus=p, minus=m)

    @classmethod
    def from_real_eigenvalues(cls, eigs):
        """Split real eigenvalues into sorted positive and negative parts; zeros go to plus."""
        e = np.asarray(eigs, dtype=float)
        pos = np.sort(e[e >= 0])[::-1]
        neg = np.sort(-e[e < 0])[::-1]
        return cls.signed(pos, neg)

    def __len__(self):
        if self.kind == SIGNED:
            return len(self.plus) + len(self.minus)
        return len(self.values)

    @property
    def length(self):
        return len(self)

    def eigenvalues(self):
        """The eigenvalue stream, sorted by non-increasing modulus."""
        if self.kind != SIGNED:
            return self.values
        if not self._merged:
            vals = np.concatenate([self.plus, -self.minus])
            mod = np.abs(vals)
            neg_flag = np.concatenate([np.zeros(len(self.plus)), np.ones(len(self.minus))])
            order = np.lexsort((neg_flag, -mod))
            merged = vals[order]
            merged.setflags(write=False)
            self._merged.append(merged)
        return self._merged[0]

    def moduli(self):
        return np.abs(self.eigenvalues())

    def scaled(self, c):
        if c < 0:
            raise ValueError("scale must be non-negative")
        if self.kind == SIGNED:
            return SpectralSequence.signed(c * self.plus, c * self.minus)
        if self.kind == COMPLEX:
            return SpectralSequence.eigen_complex(c * self.values)
        return SpectralSequence.singular(c * self.values)


def as_sequence(x):
    """Coerce an array-like into a singular sequence (sorting is not applied)."""
    if isinstance(x, SpectralSequence):
        return x
    return SpectralSequence.singular(x)


def _ratio_values(s):
    # norms accept raw non-negative arrays so unsorted test profiles can be measured
    if isinstance(s, SpectralSequence):
        if s.kind != SINGULAR:
            raise ValueError("norms are defined on singular sequences")
        return s.values
    v = np.asarray(s, dtype=float).reshape(-1)
    if np.any(v < 0):
        raise ValueError("singular values must be non-negative")
    return v


def quasi_norm_g(s, g):
    """Finite-prefix proxy of ``sup_j mu_j / g(j)``."""
    mu = _ratio_values(s)
    return float(np.max(mu / g(np.arange(len(mu), dtype=float))))


def lorentz_norm_G(s, G):
    """``max over 1 <= N <= M of G(N)^-1 sum_{j<N} mu_j``."""
    mu = _ratio_values(s)
    Gs = G.at_integers(len(mu))[1:]
    return float(np.max(np.cumsum(mu) / Gs))


class TailStatistic(NamedTuple):
    value: float
    penultimate: Optional[float]
    full: float


def quotient_norm(s, g, tail_window):
    """Tail-window proxy of ``limsup_j mu_j / g(j)``.

    Returns the maximum ratio on the final ``tail_window`` indices, on the
    window before it (None if the prefix is too short) and on the whole prefix.
    """
    mu = _ratio_values(s)
    M = len(mu)
    w = int(tail_window)
    if w < 1 or w > M:
        raise WindowTooLarge(f"tail window {w} does not fit a prefix of length {M}")
    r = mu / g(np.arange(M, dtype=float))
    pen = float(np.max(r[M - 2 * w:M - w])) if 2 * w <= M else None
    return TailStatistic(float(np.max(r[M - w:])), pen, float(np.max(r)))


def partial_sums(s):
    """Array ``S_0 = 0, S_1, ..., S_M`` of partial sums of the eigenvalue stream."""
    ev = s.eigenvalues() if isinstance(s, SpectralSequence) else np.asarray(s)
    out = np.zeros(len(ev) + 1, dtype=ev.dtype)
    np.cumsum(ev, out=out[1:])
    return out


def partial_sum(s, N):
    """``sum_{j<N} lambda_j``; N = 0 gives 0.  Complex input gives a complex result."""
    N = int(N)
    if N < 0 or N > len(s):
        raise PrefixExceeded(f"N={N} exceeds the prefix length {len(s)}")
    ev = s.eigenvalues()
    total = ev[:N].sum() if N else ev.dtype.type(0)
    return complex(total) if s.kind == COMPLEX else float(total)


@dataclass
class InequalityReport:
    name: str
    checked: int
    violations: int
    min_margin: float
    first_violation: Optional[dict] = None

    @property
    def ok(self):
        return self.violations == 0

    def as_dict(self):
        return {"name": self.name, "checked": self.checked, "violations": self.violations,
                "min_margin": self.min_margin, "first_violation": self.first_violation}


def _pad(a, n):
    out = np.zeros(n)
    k = min(n, len(a))
    out[:k] = a[:k]
    return out


def _pairwise(lhs_of_sum, a, b, M, slack, name):
    """Check ``lhs[j+k] <= a[j] + b[k]`` for all j + k < M, chunked over j."""
    checked = 0
    violations = 0
    min_margin = np.inf
    first = None
    a = _pad(a, M)
    b = _pad(b, M)
    lhs = _pad(lhs_of_sum, M)
    chunk = max(1, 4_000_000 // max(M, 1))
    for j0 in range(0, M, chunk):
        js = np.arange(j0, min(M, j0 + chunk))
        ks = np.arange(M)
        J, K = np.meshgrid(js, ks, indexing="ij")
        valid = J + K < M
        margin = np.where(valid, a[J] + b[K] - lhs[np.minimum(J + K, M - 1)], np.inf)
        checked += int(valid.sum())
        bad = margin < -slack
        nbad = int(bad.sum())
        if nbad and first is None:
            jj, kk = np.argwhere(bad)[0]
            first = {"j": int(js[jj]), "k": int(kk),
                     "lhs": float(lhs[js[jj] + kk]),
                     "rhs": float(a[js[jj]] + b[kk])}
        violations += nbad
        min_margin = min(min_margin, float(margin.min()))
    return InequalityReport(name, checked, violations, min_margin, first)


def _cumulative(lhs, rhs, slack, name):
    margin = rhs - lhs
    bad = margin < -slack
    first = None
    if bad.any():
        i = int(np.argmax(bad))
        first = {"N": i + 1, "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return InequalityReport(name, len(margin), int(bad.sum()),
                            float(margin.min()) if len(margin) else np.inf, first)


def check_fan(s1, s2, s12, slack=0.0):
    """Fan inequalities for singular values of S, T and S + T.

    Pointwise ``mu_{j+k}(S+T) <= mu_j(S) + mu_k(T)`` and the partial-sum form.
    """
    mu1, mu2, mu12 = (as_sequence(x).values for x in (s1, s2, s12))
    M = len(mu12)
    point = _pairwise(mu12, mu1, mu2, M, slack, "fan_pointwise")
    lhs = np.cumsum(mu12)
    rhs = np.cumsum(_pad(mu1, M)) + np.cumsum(_pad(mu2, M))
    summed = _cumulative(lhs, rhs, slack, "fan_partial_sums")
    return {"pointwise": point, "partial_sums": summed,
            "ok": point.ok and summed.ok}


def check_weyl_modulus(eigs, sing, slack=0.0):
    """``sum_{j<N} |lambda_j| <= sum_{j<N} mu_j`` for every N up to the shorter prefix."""
    lam = np.abs(eigs.eigenvalues() if isinstance(eigs, SpectralSequence) else np.asarray(eigs))
    mu = as_sequence(sing).values
    n = min(len(lam), len(mu))
    return _cumulative(np.cumsum(lam[:n]), np.cumsum(mu[:n]), slack, "weyl_modulus")


def check_weyl_pm(sS, sT, sST, slack=0.0):
    """``lambda^pm_{j+k}(S+T) <= lambda^pm_j(S) + lambda^pm_k(T)`` for both signs.

    Finite sequences are extended by zeros, as for the eigenvalue sequences
    of finite-rank operators.
    """
    reports = {}
    for part in ("plus", "minus"):
        a, b, c = (getattr(x, part) for x in (sS, sT, sST))
        M = max(len(a), len(b), len(c), 1)
        reports[part] = _pairwise(c, a, b, M, slack, f"weyl_{part}")
    reports["ok"] = reports["plus"].ok and reports["minus"].ok
    return reports


def check_r_triangle(s1, s2, s12, g, tail_window, r=None, factor=1.05):
    """r-convexity of the quotient norm on tail-window proxies.

    ``q(S+T)^r <= factor * (q(S)^r + q(T)^r)`` with r = 1/(|rho| + 1).
    """
    if r is None:
        r = 1.0 / (abs(g.index) + 1.0)
    q12 = quotient_norm(s12, g, tail_window).value
    q1 = quotient_norm(s1, g, tail_window).value
    q2 = quotient_norm(s2, g, tail_window).value
    lhs = q12 ** r
    rhs = factor * (q1 ** r + q2 ** r)
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "ok": lhs <= rhs}


def _fmt(x):
    return repr(float(x))


def _fmt_complex(z):
    re, im = repr(float(z.real)), repr(float(z.imag))
    if not im.startswith("-"):
        im = "+" + im
    return f"{re}{im}j"


def write_spectrum_csv(s, path):
    """Write a sequence with shortest round-trip decimals."""
    with open(path, "w", newline="") as fh:
        write_spectrum(s, fh)


def write_spectrum(s, fh, chunk=1 << 16):
    if s.kind == SIGNED:
        fh.write("index,lambda_plus,lambda_minus\n")
        n = max(len(s.plus), len(s.minus))
        for i in range(n):
            a = _fmt(s.plus[i]) if i < len(s.plus) else ""
            b = _fmt(s.minus[i]) if i < len(s.minus) else ""
            fh.write(f"{i},{a},{b}\n")
        return
    fh.write("index,value\n")
    fmt = _fmt_complex if s.kind == COMPLEX else _fmt
    vals = s.values
    for start in range(0, len(vals), chunk):
        block = vals[start:start + chunk]
        fh.write("".join(f"{start + i},{fmt(v)}\n" for i, v in enumerate(block.tolist())))


def read_spectrum_csv(path):
    """Read a spectrum CSV written by :func:`write_spectrum_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty spectrum file", path=path)
        rows = list(reader)
    if header == ["index", "lambda_plus", "lambda_minus"]:
        plus, minus = [], []
        for lineno, row in enumerate(rows, start=2):
            try:
                if len(row) != 3:
                    raise ValueError
                if row[1].strip():
                    plus.append(float(row[1]))
                if row[2].strip():
                    minus.append(float(row[2]))
            except ValueError:
                raise ParseError(f"bad row {row!r}", line=lineno, path=path)
        return SpectralSequence.signed(plus, minus)
    if header != ["index", "value"]:
        raise ParseError(f"unknown header {header!r}", line=1, path=path)
    vals = []
    is_complex = False
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ParseError(f"bad row {row!r}", line=lineno, path=path)
        text = row[1].strip()
        try:
            if text.endswith("j"):
                is_complex = True
                vals.append(complex(text))
            else:
                vals.append(float(text))
        except ValueError:
            raise ParseError(f"cannot parse value {text!r}", line=lineno, path=path)
    if is_complex:
        return SpectralSequence.eigen_complex(vals)
    return SpectralSequence.singular(vals)
