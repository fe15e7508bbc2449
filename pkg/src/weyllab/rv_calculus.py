"""Regularly varying functions, Karamata primitives and asymptotic inverses.

The canonical family is ``g(t) = (t + 1)**rho * log(t + 2)**q``, which is
positive and finite on the whole half-line.  Every function carries its
declared index and a threshold ``monotone_from`` past which it is monotone.
"""

import csv
import math
import threading

import numpy as np

from .errors import NonIntegrable, NotInvertible, SpecError

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights sit on the odd Kronrod positions.
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[7] = _WG[3]
_WG15[[9, 11, 13]] = _WG[2::-1]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def gauss_kronrod(f, a, b, rtol=1e-13, atol=0.0, max_depth=60):
    """Adaptive G7/K15 integral of a vectorized ``f`` over [a, b]."""
    if b == a:
        return 0.0
    total = 0.0
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        fx = f(mid + half * _NODES15)
        k = half * float(np.dot(_WK15, fx))
        gauss = half * float(np.dot(_WG15, fx))
        err = abs(k - gauss)
        if not math.isfinite(k):
            raise NonIntegrable(f"non-finite integrand on [{lo}, {hi}]")
        if err <= max(atol, rtol * abs(k)) or depth >= max_depth or half < 1e-300:
            total += k
        else:
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


class RegVarFunction:
    """A positive regularly varying function with a declared index.

    Instances are immutable; the only mutable state is the lazily built
    Karamata primitive, which is guarded by a lock.
    """

    __slots__ = ("index", "family", "params", "monotone_from", "label",
                 "_f", "_lock", "_primitive")

    def __init__(self, f, index, family, params=None, monotone_from=0.0, label=None):
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "index", float(index))
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", dict(params or {}))
        object.__setattr__(self, "monotone_from", float(monotone_from))
        object.__setattr__(self, "label", label or family)
        object.__setattr__(self, "_lock", threading.Lock())
        object.__setattr__(self, "_primitive", None)

    def __setattr__(self, name, value):
        raise AttributeError("RegVarFunction is immutable")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._f(arr)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def __repr__(self):
        return f"RegVarFunction({self.label}, index={self.index:g})"

    def primitive(self):
        """Return the cached :class:`KaramataPrimitive` of this function."""
        prim = self._primitive
        if prim is None:
            with self._lock:
                prim = self._primitive
                if prim is None:
                    prim = KaramataPrimitive(self)
                    object.__setattr__(self, "_primitive", prim)
        return prim

    @classmethod
    def from_callable(cls, f, index, monotone_from=0.0, label="composed"):
        return cls(f, index, "composed", {"callable": f},
                   monotone_from=monotone_from, label=label)


def _power_log_eval(rho, q, shift):
    def f(t):
        with np.errstate(divide="ignore"):
            val = np.power(t + shift, rho)
        if q != 0.0:
            val = val * np.power(np.log(t + 2.0), q)
        return val
    return f


def _dlog_power_log(t, rho, q, shift):
    with np.errstate(divide="ignore", invalid="ignore"):
        return rho / (t + shift) + q / ((t + 2.0) * np.log(t + 2.0))


def _monotone_threshold(dlog, direction):
    """Last point where ``direction * dlog`` is non-positive, refined by bisection."""
    if direction == 0:
        return 0.0
    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e15, 4000)])
    bad = direction * dlog(grid) <= 0
    if not bad.any():
        return 0.0
    i = int(np.nonzero(bad)[0][-1])
    if i == len(grid) - 1:
        return math.inf
    lo, hi = grid[i], grid[i + 1]
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if direction * dlog(np.array(mid)) <= 0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def make_power_log(rho, q, shift=1.0):
    """``g(t) = (t + shift)**rho * log(t + 2)**q``; shift 1 is the canonical form.

    ``shift=0`` gives the pure power ``t**rho`` (for q = 0), which is only
    finite at 0 when rho >= 0.
    """
    rho, q, shift = float(rho), float(q), float(shift)
    if shift < 0:
        raise ValueError("shift must be non-negative")
    direction = -1 if rho < 0 else (1 if rho > 0 else (int(np.sign(q))))
    t0 = _monotone_threshold(lambda t: _dlog_power_log(t, rho, q, shift), direction)
    label = f"power-log:{rho:g},{q:g}" + ("" if shift == 1.0 else f"@{shift:g}")
    return RegVarFunction(_power_log_eval(rho, q, shift), rho, "power_log",
                          {"rho": rho, "q": q, "shift": shift},
                          monotone_from=t0, label=label)


def reciprocal_rv(g):
    """``h = 1/g``, a regularly varying function of index ``-g.index``."""
    if g.family == "reciprocal":
        return g.params["of"]
    f = g._f
    return RegVarFunction(lambda t: 1.0 / f(t), -g.index, "reciprocal", {"of": g},
                          monotone_from=g.monotone_from, label=f"reciprocal:{g.label}")


def scale_rv(g, c):
    """``c * g``; same index, not asymptotically equivalent to g unless c = 1."""
    c = float(c)
    f = g._f
    return RegVarFunction(lambda t: c * f(t), g.index, "composed", {"of": g, "scale": c},
                          monotone_from=g.monotone_from, label=f"{c:g}*{g.label}")


def shift_rv(g, b):
    """``t -> g(t + b)``, asymptotically equivalent to g for fixed b >= 0."""
    b = float(b)
    f = g._f
    return RegVarFunction(lambda t: f(t + b), g.index, "composed", {"of": g, "shift": b},
                          monotone_from=max(g.monotone_from - b, 0.0),
                          label=f"{g.label}(t+{b:g})")


class _Table:
    """Piecewise linear interpolation of log g against log(1 + t)."""

    def __init__(self, t, g):
        t = np.asarray(t, dtype=float)
        g = np.asarray(g, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or len(t) < 2:
            raise ValueError("table needs at least two (t, g) rows")
        if np.any(np.diff(t) <= 0) or t[0] < 0:
            raise ValueError("table abscissae must be non-negative and strictly increasing")
        if np.any(g <= 0):
            raise ValueError("table values must be positive")
        self.t = t
        self.u = np.log1p(t)
        self.y = np.log(g)
        self.slope = np.diff(self.y) / np.diff(self.u)

    def __call__(self, t):
        u = np.log1p(t)
        y = np.interp(u, self.u, self.y)
        lo = u < self.u[0]
        hi = u > self.u[-1]
        if np.any(lo):
            y = np.where(lo, self.y[0] + self.slope[0] * (u - self.u[0]), y)
        if np.any(hi):
            y = np.where(hi, self.y[-1] + self.slope[-1] * (u - self.u[-1]), y)
        return np.exp(y)

    def _segments(self):
        # (u_start, y_start, slope) including both extrapolation pieces
        starts = [(0.0, self.y[0] - self.slope[0] * self.u[0], self.slope[0])]
        for i in range(len(self.slope)):
            starts.append((self.u[i], self.y[i], self.slope[i]))
        starts.append((self.u[-1], self.y[-1], self.slope[-1]))
        return starts

    def integral(self, t):
        """Exact integral over [0, t] of the interpolant."""
        u_end = np.log1p(np.asarray(t, dtype=float))
        knots = np.concatenate([[0.0], self.u, [np.inf]])
        segs = self._segments()
        total = np.zeros_like(u_end)
        for i, (u0, y0, b) in enumerate(segs):
            a_, b_ = max(knots[i], 0.0), knots[i + 1]
            if not b_ > a_:
                continue
            lo = np.clip(u_end, a_, b_)
            total = total + _seg_integral(u0, y0, b, a_, lo)
        return total


def _seg_integral(u0, y0, b, ua, ub):
    # integral of exp(y0 + b (u - u0)) * e^u du over [ua, ub]
    k = b + 1.0
    base = np.exp(y0 + b * (ua - u0) + ua)
    d = ub - ua
    if abs(k) < 1e-14:
        return base * d
    return base * np.expm1(k * d) / k


def make_tabulated(t, g, index=None, label="table"):
    """Tabulated function, log-log interpolated; index defaults to the tail slope."""
    table = _Table(t, g)
    if index is None:
        index = float(table.slope[-1])
    direction = -1 if index < 0 else 1
    steps = np.sign(np.diff(table.y))
    bad = np.nonzero(steps * direction < 0)[0]
    t0 = float(table.t[bad[-1] + 1]) if len(bad) else 0.0
    return RegVarFunction(table, index, "tabulated", {"table": table},
                          monotone_from=t0, label=label)


def read_table_csv(path, index=None):
    ts, gs = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                ts.append(float(row[0]))
                gs.append(float(row[1]))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise SpecError(f"{path}:{lineno}: bad table row {row!r}")
    return make_tabulated(ts, gs, index=index, label=f"table:{path}")


def parse_rv(spec):
    """Parse ``power-log:<rho>,<q>``, ``reciprocal:<spec>`` or ``table:<path>``."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    if kind == "power-log":
        try:
            rho, q = (float(x) for x in rest.split(","))
        except ValueError:
            raise SpecError(f"bad power-log spec {spec!r}; expected power-log:<rho>,<q>")
        return make_power_log(rho, q)
    if kind == "reciprocal":
        return reciprocal_rv(parse_rv(rest))
    if kind == "table":
        return read_table_csv(rest)
    raise SpecError(f"unknown function spec {spec!r}")


class KaramataPrimitive:
    """``G(t) = integral of g over [0, t]``.

    Closed forms are used for ``power_log`` with q = 0 and for tabulated
    functions.  Otherwise G is assembled from adaptive Gauss-Kronrod panel
    integrals on the geometric grid 0, 1, 2, 4, 8, ... whose prefix sums are
    cached.
    """

    def __init__(self, g, rtol=1e-13):
        self.source = g
        self.rtol = rtol
        self._lock = threading.Lock()
        self._prefix = [0.0]  # prefix[k] = G(edge_k)
        self._exact = None
        if g.family == "power_log" and g.params["q"] == 0.0:
            rho, s = g.params["rho"], g.params["shift"]
            if s == 0.0 and rho <= -1:
                raise NonIntegrable("t**rho is not integrable at 0 for rho <= -1")
            self._exact = _power_primitive(rho, s)
        elif g.family == "tabulated":
            self._exact = g.params["table"].integral

    @property
    def exact(self):
        return self._exact is not None

    @staticmethod
    def _edge(k):
        return 0.0 if k == 0 else float(2 ** (k - 1))

    def _panel_prefix(self, k):
        if k < len(self._prefix):
            return self._prefix[k]
        with self._lock:
            while len(self._prefix) <= k:
                j = len(self._prefix) - 1
                a, b = self._edge(j), self._edge(j + 1)
                val = self._prefix[j] + gauss_kronrod(self.source._f, a, b, rtol=self.rtol)
                if not math.isfinite(val):
                    raise NonIntegrable(f"primitive overflowed beyond t={a}")
                self._prefix.append(val)
        return self._prefix[k]

    def _scalar(self, t):
        if t < 0:
            raise ValueError("G is defined for t >= 0")
        if t == 0:
            return 0.0
        k = 0 if t <= 1.0 else int(math.floor(math.log2(t))) + 1
        if k > 0 and self._edge(k) > t:  # guard float rounding in log2
            k -= 1
        a = self._edge(k)
        return self._panel_prefix(k) + gauss_kronrod(self.source._f, a, t, rtol=self.rtol)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if self._exact is not None:
            out = self._exact(arr)
        else:
            out = np.vectorize(self._scalar, otypes=[float])(arr)
        if not np.all(np.isfinite(out)):
            raise NonIntegrable("primitive is not finite on the requested range")
        return float(out) if np.ndim(out) == 0 else out

    def at_integers(self, M):
        """Array ``G(0), G(1), ..., G(M)``."""
        M = int(M)
        if self._exact is not None:
            return np.asarray(self._exact(np.arange(M + 1, dtype=float)), dtype=float)
        out = np.empty(M + 1)
        out[0] = 0.0
        acc = 0.0
        chunk = 1 << 15
        nodes = 0.5 * (_GL_NODES + 1.0)
        w = 0.5 * _GL_WEIGHTS
        for start in range(0, M, chunk):
            k = np.arange(start, min(M, start + chunk), dtype=float)
            vals = self.source._f(k[:, None] + nodes[None, :]) @ w
            cs = np.cumsum(vals) + acc
            out[start + 1:start + 1 + len(k)] = cs
            acc = cs[-1]
        if not np.all(np.isfinite(out)):
            raise NonIntegrable("primitive is not finite on the requested range")
        return out

    def asymptotic_model(self, t):
        """Leading-order closed form of G for large t, or None when unknown."""
        g = self.source
        if g.family != "power_log":
            return None
        rho, q = g.params["rho"], g.params["q"]
        t = np.asarray(t, dtype=float)
        if rho == -1.0:
            if q > -1.0:
                return np.log(t) ** (q + 1) / (q + 1)
            if q == -1.0:
                return np.log(np.log(t))
            return None
        if rho > -1.0:
            return t ** (rho + 1) * np.log(t) ** q / (rho + 1)
        return None


def _power_primitive(rho, s):
    k = rho + 1.0
    if k == 0.0:
        return lambda t: np.log1p(t / s)
    if s == 0.0:
        return lambda t: np.power(t, k) / k
    sk = s ** k
    return lambda t: sk * np.expm1(k * np.log1p(t / s)) / k


def karamata_integral(g):
    return g.primitive()


def karamata_ratio(g, t):
    """``t g(t) / G(t)``, which tends to rho + 1 (to 0 in the divergent rho = -1 case)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return float(t * g(t) / g.primitive()(t))


def index_tolerance(rho, t):
    return 5.0 * max(abs(rho), 1.0) / math.log(t)


def verify_index(g, lambdas=(0.5, 2.0, 3.0), ks=range(10, 41), relative=False):
    """Check ``g(lam t)/g(t)`` against ``lam**rho`` along t = 2**k.

    Returns a dict with the error table and a pass flag; the tolerance is
    ``5 max(|rho|, 1) / log t``.  ``relative=True`` divides the error by
    ``lam**rho``, which keeps the tolerance meaningful when ``lam**rho`` is large.
    """
    rows = []
    ok = True
    for lam in lambdas:
        target = lam ** g.index
        errs = []
        for k in ks:
            t = 2.0 ** k
            err = abs(g(lam * t) / g(t) - target)
            if relative:
                err /= target
            tol = index_tolerance(g.index, t)
            errs.append((k, err, tol))
            ok &= err <= tol
        rows.append({"lambda": lam, "errors": errs})
    return {"passed": bool(ok), "table": rows}


def asymptotic_inverse(h, method="auto"):
    """Asymptotic inverse ``h#`` of an increasing RV function of index p > 0.

    ``method="auto"`` uses the closed form ``p**(q/p) t**(1/p) log(t+2)**(-q/p)``
    for the power-log family (the exact inverse for a pure power) and numeric
    bisection otherwise; ``method="numeric"`` forces the exact numeric inverse,
    which converges much faster in round-trip tests at moderate t.
    """
    p = h.index
    if not p > 0:
        raise NotInvertible(f"asymptotic inverse needs a positive index, got {p:g}")
    if method not in ("auto", "closed", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    if h.family == "power_log" and method != "numeric":
        q, s = h.params["q"], h.params["shift"]
        if q == 0.0 and s == 0.0:
            return RegVarFunction(lambda t: np.power(t, 1.0 / p), 1.0 / p, "inverse",
                                  {"of": h, "method": "exact"}, label=f"inverse:{h.label}")
        c = p ** (q / p)

        def f(t):
            return c * np.power(t, 1.0 / p) * np.power(np.log(t + 2.0), -q / p)
        return RegVarFunction(f, 1.0 / p, "inverse", {"of": h, "method": "closed"},
                              label=f"inverse:{h.label}")
    if method == "closed":
        raise NotInvertible("closed form is only available for the power-log family")
    return RegVarFunction(lambda t: numeric_inverse(h, t), 1.0 / p, "inverse",
                          {"of": h, "method": "numeric"}, label=f"inverse:{h.label}")


def numeric_inverse(h, y, iterations=80):
    """Solve ``h(t) = y`` by bisection on [monotone_from, t_hi], t_hi doubling.

    Below ``h(monotone_from)`` the inverse continues linearly to 0.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    t0 = h.monotone_from
    h0 = float(h(t0))
    out = np.empty_like(y)
    below = y < h0
    out[below] = t0 * y[below] / h0 if h0 > 0 else 0.0
    idx = np.nonzero(~below)[0]
    if len(idx):
        target = y[idx]
        start = max(t0, 1.0)
        hi = np.full(len(idx), start)
        for _ in range(2100):
            need = h._f(hi) < target
            if not need.any():
                break
            hi[need] *= 2.0
        else:
            raise NotInvertible("h does not reach the requested values")
        if not np.all(np.isfinite(hi)):
            raise NotInvertible("inverse overflowed")
        lo = np.where(hi > start, 0.5 * hi, t0)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            m = h._f(mid) < target
            lo = np.where(m, mid, lo)
            hi = np.where(m, hi, mid)
            if np.all(hi - lo <= 2.0 * np.spacing(hi)):
                break
        out[idx] = 0.5 * (lo + hi)
    return float(out[0]) if scalar else out
