"""Explicit spectra, Weyl-law constants and synthetic test sequences."""

import math
from dataclasses import dataclass, field

import numpy as np

from .counting import CountingFunction, sequence_from_counting
from .errors import (DomainError, EmptyInput, NotAscending, Overflow, ParseError,
                     PrefixExhausted, SpecError)
from .rv_calculus import make_power_log, parse_rv
from .spectra import SpectralSequence

# Lanczos coefficients for g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x):
    """Gamma function: exact factorials at positive integers, Lanczos elsewhere."""
    x = float(x)
    if x <= 0 and x.is_integer():
        raise DomainError(f"gamma has a pole at {x:g}")
    if x.is_integer() and x <= 171:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    a = _LANCZOS[0]
    t = x + _LANCZOS_G + 0.5
    for i, c in enumerate(_LANCZOS[1:], start=1):
        a += c / (x + i)
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


def ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_area(n):
    """Surface area of the unit sphere S^(n-1) in R^n."""
    return 2 * math.pi ** (n / 2) / gamma(n / 2)


def _check_dim(n):
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
    return int(n)


def simon_constant(n, alpha):
    """Weyl-law constant c(n, alpha) of -Laplace + |x_1 ... x_n|^alpha; alpha may be inf."""
    n = _check_dim(n)
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if math.isinf(alpha):
        return 2 * n ** n / math.factorial(n) * (2 * math.pi) ** (-n) * ball_volume(n)
    a = 1.0 / alpha
    return ((n / 2 + a) ** (n - 1) / math.factorial(n - 1)
            * math.pi ** (-n / 2) * gamma(a + 1) / gamma(n / 2 + a + 1))


def simon_constant_limit_form(n):
    """The alpha -> inf limit of the finite-alpha formula, as an independent route to c(n, inf)."""
    n = _check_dim(n)
    return (n / 2) ** (n - 1) / math.factorial(n - 1) * math.pi ** (-n / 2) / gamma(n / 2 + 1)


def cusp_constants(n):
    """Weyl-law constants (c1, c2) for manifolds with cusps in dimension n."""
    n = _check_dim(n)
    pref = 2 ** (n // 2) * (2 * math.pi) ** (-n / 2)
    return pref * ball_volume(n), pref * sphere_area(n)


def q_number(x, q):
    """``[x]_q = (q^x - q^-x) / (q - q^-1)``, evaluated as a ratio of sinh."""
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    lq = math.log(q)
    try:
        return math.sinh(x * lq) / math.sinh(lq)
    except OverflowError:
        raise Overflow(f"[{x}]_{q} overflows")


def r2(n):
    """Number of representations of n as a sum of two squares (ordered, signed)."""
    n = int(n)
    if n < 0:
        return 0
    if n == 0:
        return 1
    out = 4
    m = n
    while m % 2 == 0:
        m //= 2
    p = 3
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p % 4 == 3:
                if e % 2:
                    return 0
            else:
                out *= e + 1
        p += 2
    if m > 1:
        if m % 4 == 3:
            return 0
        out *= 2
    return out


def r2_table(nmax):
    """``r2(n)`` for n = 0..nmax via a smallest-prime-factor sieve."""
    nmax = int(nmax)
    spf = np.zeros(nmax + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(nmax)) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    out = np.zeros(nmax + 1, dtype=np.int64)
    out[0] = 1
    for n in range(1, nmax + 1):
        m = n
        val = 4
        while m > 1:
            p = int(spf[m]) or m
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p % 4 == 3:
                if e % 2:
                    val = 0
                    break
            elif p != 2:
                val *= e + 1
        out[n] = val
    return out


@dataclass
class PodlesSpectrum:
    """Distinct eigenvalues of ``|D_q| x 1 + 1 x Laplacian(torus)`` with multiplicities."""

    q: float
    lambda_max: float
    values: np.ndarray
    mults: np.ndarray
    _cum: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self._cum = np.cumsum(self.mults)

    @property
    def total(self):
        return int(self._cum[-1]) if len(self._cum) else 0

    def count_le(self, lam):
        """``N(A; lam) = #{eigenvalues <= lam}``, valid for lam <= lambda_max."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam > self.lambda_max):
            raise PrefixExhausted("counting beyond lambda_max is incomplete")
        pos = np.searchsorted(self.values, lam, side="right")
        out = np.where(pos > 0, self._cum[np.maximum(pos - 1, 0)], 0)
        return out.item() if out.ndim == 0 else out

    def inverse_counting(self):
        """Step counting function of the eigenvalues of A^-1."""
        return CountingFunction.from_values(1.0 / self.values, counts=self.mults,
                                            label=f"podles:{self.q:g}")


def podles_spectrum(q, lambda_max, doubled=False):
    """Enumerate ``[x]_q + n`` (x = l + 1/2 = 1, 2, ...; n = |k|^2) up to lambda_max.

    Each value carries multiplicity ``(2l + 1) r2(n)``; ``doubled=True``
    counts both copies of the spinor space, ``2(2l + 1) r2(n)``.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    if not lambda_max >= 1:
        raise DomainError("lambda_max must be at least [1]_q = 1")
    nmax = int(math.floor(lambda_max - 1.0))
    table = r2_table(nmax)
    ns = np.nonzero(table)[0]
    vals, mults = [], []
    x = 1
    while True:
        qx = q_number(x, q)
        if qx > lambda_max:
            break
        keep = ns[ns <= lambda_max - qx]
        vals.append(qx + keep.astype(float))
        mults.append((2 if doubled else 1) * 2 * x * table[keep])
        x += 1
    v = np.concatenate(vals)
    m = np.concatenate(mults)
    uniq, inv = np.unique(v, return_inverse=True)
    agg = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(agg, inv, m)
    return PodlesSpectrum(float(q), float(lambda_max), uniq, agg)


def podles_torus_sequence(q, lambda_max, max_len=1 << 22, doubled=False):
    """Eigenvalues of A^-1 (non-increasing), truncated to the first ``max_len``.

    The prefix is exact because the enumeration is complete below lambda_max.
    """
    sp = podles_spectrum(q, lambda_max, doubled=doubled)
    cum = sp._cum
    n = int(min(sp.total, max_len))
    stop = int(np.searchsorted(cum, n, side="left")) + 1
    reps = sp.mults[:stop].copy()
    reps[-1] -= int(cum[stop - 1]) - n
    return SpectralSequence.singular(np.repeat(1.0 / sp.values[:stop], reps))


RVM_FLOOR = 2 * math.pi * math.e


def zeta_rvm_counting(lam):
    """Main term ``2 (lam/2pi)(log(lam/2pi) - 1)`` of the zero count, zero below 2 pi e."""
    lam = np.asarray(lam, dtype=float)
    u = np.maximum(lam, RVM_FLOOR) / (2 * math.pi)
    out = np.where(lam >= RVM_FLOOR, 2 * u * (np.log(u) - 1.0), 0.0)
    return out.item() if out.ndim == 0 else out


def zeta_rvm_counting_small(mu):
    """Counting function of ``|D|^-1``: ``#{1/gamma > mu} = N(1/mu)``."""
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore"):
        return zeta_rvm_counting(1.0 / mu)


def zeta_rvm_sequence(M):
    """``lam_j(|D|^-1)`` for the smooth zero-counting model, j < M."""
    M = int(M)
    if M < 2:
        raise DomainError("M must be at least 2")
    N = CountingFunction.model(zeta_rvm_counting_small, label="rvm")
    return sequence_from_counting(N, M)


def read_zeros(path):
    """Positive ascending decimals, one per line; '#' starts a comment."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                v = float(text)
            except ValueError:
                raise ParseError(f"not a decimal: {text!r}", line=lineno, path=path)
            if not (v > 0 and math.isfinite(v)):
                raise ParseError(f"zeros must be positive and finite, got {text}",
                                 line=lineno, path=path)
            if out and v < out[-1]:
                raise NotAscending(f"{v!r} follows {out[-1]!r}", line=lineno, path=path)
            out.append(v)
    if not out:
        raise EmptyInput("no zeros in file", path=path)
    return np.array(out)


def zeta_file_sequence(path, M):
    """``1/gamma`` for tabulated zeros, each used twice (conjugate pairs), first M entries."""
    z = read_zeros(path)
    M = int(M)
    if M < 1:
        raise DomainError("M must be positive")
    if M > 2 * len(z):
        raise PrefixExhausted(f"{path} yields only {2 * len(z)} values, {M} requested")
    return SpectralSequence.singular(np.repeat(1.0 / z, 2)[:M])


def generator_sequence(g, M):
    """Non-increasing rearrangement of ``g(0), ..., g(M - 1)``.

    This equals g(j) itself for j beyond the monotonicity threshold of g.
    """
    vals = np.asarray(g(np.arange(int(M), dtype=float)), dtype=float)
    return SpectralSequence.singular(np.sort(vals)[::-1])


PERTURBATIONS = ("none", "og", "osc", "fr")


def parse_perturbation(text):
    """``none``, ``og``, ``osc[/amp]`` or ``fr/<K>/<height>``."""
    parts = text.strip().split("/")
    kind = parts[0]
    try:
        if kind in ("none", "og") and len(parts) == 1:
            return (kind,)
        if kind == "osc" and len(parts) <= 2:
            return ("osc", float(parts[1]) if len(parts) == 2 else 0.5)
        if kind == "fr" and len(parts) == 3:
            return ("fr", int(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise SpecError(f"bad perturbation {text!r}; expected none, og, osc[/amp] or fr/<K>/<height>")


def _perturbed(c, g, M, pert):
    j = np.arange(M, dtype=float)
    base = c * g(j)
    kind = pert[0]
    if kind == "none":
        vals = base
    elif kind == "og":
        vals = base * (1.0 + 1.0 / np.log(j + 3.0))
    elif kind == "osc":
        k = np.floor(np.log2(j + 1.0)).astype(np.int64)
        vals = base * (1.0 + pert[1] * np.where(k % 2 == 0, 1.0, -1.0))
    elif kind == "fr":
        K, height = pert[1], pert[2]
        vals = np.concatenate([np.full(K, height), base])[:M]
    else:
        raise SpecError(f"unknown perturbation {kind!r}")
    return np.sort(vals)[::-1]


def planted_sequence(c, rho, q, M, perturbation="none", c_minus=None):
    """``c g(j)`` with ``g = power_log(rho, q)``, perturbed and sorted non-increasing.

    With ``c_minus`` the result is signed: plus channel from c, minus channel
    from c_minus, each perturbed the same way.
    """
    if not c > 0:
        raise DomainError("c must be positive")
    M = int(M)
    if M < 1:
        raise DomainError("M must be positive")
    pert = parse_perturbation(perturbation) if isinstance(perturbation, str) else tuple(perturbation)
    g = make_power_log(rho, q)
    plus = _perturbed(c, g, M, pert)
    if c_minus is None:
        return SpectralSequence.singular(plus)
    if c_minus < 0:
        raise DomainError("c_minus must be non-negative")
    minus = _perturbed(c_minus, g, M, pert) if c_minus > 0 else np.zeros(0)
    return SpectralSequence.signed(plus, minus)


@dataclass
class ModelSpec:
    name: str
    params: dict
    rate: str = "power"

    def build(self):
        p = self.params
        if self.name == "zeta-rvm":
            return zeta_rvm_sequence(p["M"])
        if self.name == "zeta-file":
            return zeta_file_sequence(p["path"], p["M"])
        if self.name == "podles":
            return podles_torus_sequence(p["q"], p["lambda_max"])
        if self.name == "planted":
            return planted_sequence(p["c"], p["rho"], p["q"], p["M"], p["perturbation"],
                                    p.get("c_minus"))
        if self.name == "generator":
            return generator_sequence(p["g"], p["M"])
        raise SpecError(f"unknown model {self.name!r}")


def _floats(rest, n, spec, grammar):
    parts = rest.split(",")
    if len(parts) != n:
        raise SpecError(f"bad model spec {spec!r}; expected {grammar}")
    try:
        return [float(x) for x in parts]
    except ValueError:
        raise SpecError(f"bad model spec {spec!r}; expected {grammar}")


def _count(text, spec):
    try:
        v = float(text)
    except ValueError:
        raise SpecError(f"bad count {text!r} in {spec!r}")
    if v != int(v) or v < 1:
        raise SpecError(f"count must be a positive integer in {spec!r}")
    return int(v)


def parse_model_spec(spec, size=None):
    """Parse a model spec string into a :class:`ModelSpec`.

    ``zeta-rvm:<M>``, ``zeta-file:<path>,<M>``, ``podles:<q>,<lambda_max>``,
    ``planted:<c>,<rho>,<q>,<perturbation>[,<c_minus>]`` (length from ``size``,
    default 2**20) and ``generator:<gspec>,<M>``.
    """
    spec = spec.strip()
    name, _, rest = spec.partition(":")
    if name == "zeta-rvm":
        return ModelSpec(name, {"M": _count(rest, spec)}, rate="log")
    if name == "zeta-file":
        path, sep, m = rest.rpartition(",")
        if not sep or not path:
            raise SpecError(f"bad model spec {spec!r}; expected zeta-file:<path>,<M>")
        return ModelSpec(name, {"path": path, "M": _count(m, spec)}, rate="log")
    if name == "podles":
        qv, lam = _floats(rest, 2, spec, "podles:<q>,<lambda_max>")
        if not 0 < qv < 1:
            raise SpecError(f"Podles parameter q must lie in (0, 1) in {spec!r}")
        if not lam >= 1:
            raise SpecError(f"lambda_max must be at least 1 in {spec!r}")
        return ModelSpec(name, {"q": qv, "lambda_max": lam}, rate="log")
    if name == "planted":
        parts = rest.split(",")
        if len(parts) not in (4, 5):
            raise SpecError(f"bad model spec {spec!r}; expected "
                            "planted:<c>,<rho>,<q>,<perturbation>[,<c_minus>]")
        try:
            c, rho, qq = (float(x) for x in parts[:3])
            c_minus = float(parts[4]) if len(parts) == 5 else None
        except ValueError:
            raise SpecError(f"bad numeric field in {spec!r}")
        if not c > 0:
            raise SpecError(f"c must be positive in {spec!r}")
        pert = parse_perturbation(parts[3])
        M = int(size) if size is not None else 1 << 20
        rate = "log" if rho == -1 else "power"
        return ModelSpec(name, {"c": c, "rho": rho, "q": qq, "perturbation": pert,
                                "c_minus": c_minus, "M": M}, rate=rate)
    if name == "generator":
        gspec, sep, m = rest.rpartition(",")
        if not sep:
            raise SpecError(f"bad model spec {spec!r}; expected generator:<gspec>,<M>")
        g = parse_rv(gspec)
        return ModelSpec(name, {"g": g, "M": _count(m, spec), "gspec": gspec},
                         rate="log" if g.index == -1 else "power")
    raise SpecError(f"unknown model {spec!r}")
