"""Dense real-symmetric matrices, a cyclic Jacobi eigensolver and operator triples.

The harness builds pairs S, T with prescribed spectra, eigensolves S, T and
S + T, and feeds the resulting sequences to the inequality checks and the
asymptotic diagnostics.
"""

import os
import struct
from dataclasses import dataclass

import numba
import numpy as np

from .asymptotics import additivity_residual, commutator_diagnostic
from .errors import NoConvergence
from .spectra import (SpectralSequence, check_fan, check_weyl_modulus, check_weyl_pm)

DEFAULT_CAP = 512


class SymmetricMatrix:
    """Immutable dense symmetric matrix, stored row-major."""

    __slots__ = ("_a",)

    def __init__(self, a, cap=DEFAULT_CAP):
        a = np.array(a, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("expected a non-empty square array")
        if a.shape[0] > cap:
            raise ValueError(f"order {a.shape[0]} exceeds the cap {cap}")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric; use SymmetricMatrix.symmetrize")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "_a", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymmetricMatrix is immutable")

    @classmethod
    def symmetrize(cls, a, cap=DEFAULT_CAP):
        a = np.asarray(a, dtype=float)
        return cls(0.5 * (a + a.T), cap=cap)

    @property
    def n(self):
        return self._a.shape[0]

    @property
    def array(self):
        return self._a

    def __add__(self, other):
        return SymmetricMatrix(self._a + other._a, cap=max(self.n, DEFAULT_CAP))

    def __sub__(self, other):
        return SymmetricMatrix(self._a - other._a, cap=max(self.n, DEFAULT_CAP))

    def __neg__(self):
        return SymmetricMatrix(-self._a, cap=max(self.n, DEFAULT_CAP))

    def trace(self):
        return float(np.trace(self._a))

    def frobenius(self):
        return float(np.linalg.norm(self._a))

    def conjugate(self, Q):
        """``Q A Q^T``, symmetrized."""
        Q = np.asarray(Q, dtype=float)
        return SymmetricMatrix.symmetrize(Q @ self._a @ Q.T, cap=max(self.n, DEFAULT_CAP))

    def to_bytes(self):
        return struct.pack("<Q", self.n) + self._a.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 8:
            raise ValueError("truncated matrix dump")
        (n,) = struct.unpack("<Q", data[:8])
        if len(data) != 8 + 8 * n * n:
            raise ValueError(f"dump of order {n} should hold {8 + 8 * n * n} bytes, got {len(data)}")
        a = np.frombuffer(data[8:], dtype="<f8").reshape(n, n)
        return cls(a, cap=max(n, DEFAULT_CAP))


def dump_matrix(A, path):
    with open(path, "wb") as fh:
        fh.write(A.to_bytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        return SymmetricMatrix.from_bytes(fh.read())


@numba.njit(cache=True)
def _jacobi_sweeps(A, Vt, tol, max_sweeps):
    # Row-cyclic Jacobi that only writes rows.  ts[i] records when row i was
    # last rotated; of the two stored copies of entry (i, j) the one in the
    # more recently rotated row is current.  Rows are reconciled every sweep.
    n = A.shape[0]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += A[i, j] * A[i, j]
    ts = np.zeros(n, dtype=np.int64)
    rp = np.empty(n)
    rq = np.empty(n)
    clock = 0
    for sweep in range(max_sweeps + 1):
        off2 = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off2 += 2.0 * A[i, j] * A[i, j]
        if off2 <= tol * tol * fro2:
            return sweep
        if sweep == max_sweeps:
            break
        skip = 0.1 * tol * np.sqrt(fro2) / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                tp = ts[p]
                tq = ts[q]
                apq = A[p, q] if tp >= tq else A[q, p]
                if abs(apq) <= skip:
                    continue
                for k in range(n):
                    tk = ts[k]
                    rp[k] = A[p, k] if tp >= tk else A[k, p]
                    rq[k] = A[q, k] if tq >= tk else A[k, q]
                app = rp[p]
                aqq = rq[q]
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = rp[k]
                    y = rq[k]
                    A[p, k] = c * x - s * y
                    A[q, k] = s * x + c * y
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                clock += 1
                ts[p] = clock
                ts[q] = clock
                for k in range(n):
                    x = Vt[p, k]
                    y = Vt[q, k]
                    Vt[p, k] = c * x - s * y
                    Vt[q, k] = s * x + c * y
        for i in range(n):
            for j in range(i + 1, n):
                if ts[i] >= ts[j]:
                    A[j, i] = A[i, j]
                else:
                    A[i, j] = A[j, i]
    return -1


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    sweeps: int
    residual: float

    @property
    def signed(self):
        return SpectralSequence.from_real_eigenvalues(self.eigenvalues)

    @property
    def singular(self):
        return SpectralSequence.singular(np.sort(np.abs(self.eigenvalues))[::-1])


def jacobi_eigen(A, tol=1e-12, max_sweeps=50, residual_tol=1e-9):
    """Eigen-decomposition ``A = V diag(w) V^T`` by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass is at most
    ``tol * ||A||_F``.  Eigenvalues are returned in descending order.
    """
    a = A.array if isinstance(A, SymmetricMatrix) else np.asarray(A, dtype=float)
    n = a.shape[0]
    work = np.array(a, dtype=float, copy=True)
    Vt = np.eye(n)
    sweeps = _jacobi_sweeps(work, Vt, tol, max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")
    w = np.diag(work).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = Vt[order].T.copy()
    fro = np.linalg.norm(a)
    res = float(np.linalg.norm(a - (V * w) @ V.T))
    if res > residual_tol * max(fro, np.finfo(float).tiny):
        raise NoConvergence(f"reconstruction residual {res:.3g} exceeds {residual_tol:g}*||A||")
    return EigenResult(w, V, sweeps, res)


def seeded_generator(seed):
    """Counter-based generator (Philox) for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & ((1 << 64) - 1)))


def random_orthogonal(n, seed):
    """Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix."""
    rng = seeded_generator(seed)
    X = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(X)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def permutation_matrix(perm):
    perm = np.asarray(perm)
    P = np.zeros((len(perm), len(perm)))
    P[np.arange(len(perm)), perm] = 1.0
    return P


def profile_diagonal(g, n, c_plus, c_minus):
    """Diagonal ``(c+ g(0), -c- g(0), c+ g(1), -c- g(1), ...)``.

    A channel whose constant is zero gets no slots, so ``c- = 0`` yields
    ``c+ g(0), ..., c+ g(n - 1)``.
    """
    if c_plus < 0 or c_minus < 0:
        raise ValueError("profile constants must be non-negative")
    if c_minus == 0 or c_plus == 0:
        vals = g(np.arange(n, dtype=float))
        return c_plus * vals if c_minus == 0 else -c_minus * vals
    m_plus = (n + 1) // 2
    m_minus = n // 2
    d = np.empty(n)
    d[0::2] = c_plus * g(np.arange(m_plus, dtype=float))
    d[1::2] = -c_minus * g(np.arange(m_minus, dtype=float))
    return d


def plant_profile(g, n, c_plus, c_minus, seed):
    """``Q diag(profile) Q^T`` with Q seeded Haar-orthogonal."""
    if n < 2:
        raise ValueError("n must be at least 2")
    d = profile_diagonal(g, n, c_plus, c_minus)
    Q = random_orthogonal(n, seed)
    return SymmetricMatrix.symmetrize((Q * d) @ Q.T)


def commutator_test(T, Q):
    """Eigensolve ``Q T Q^T - T``; returns the signed eigenvalue sequence."""
    D = T.conjugate(Q) - T
    return jacobi_eigen(D).signed


@dataclass
class TripleResult:
    seed: int
    n: int
    checks: dict
    trace_error: float
    residual_windows: list
    residual_monotone: bool
    commutator_bounded: bool

    @property
    def ok(self):
        return all(v.ok if hasattr(v, "ok") else bool(v) for v in self._flat())

    def _flat(self):
        for key, v in self.checks.items():
            if isinstance(v, dict):
                yield v["ok"]
            else:
                yield v

    def as_dict(self):
        out = {"seed": self.seed, "n": self.n, "trace_error": self.trace_error,
               "residual_windows": self.residual_windows,
               "residual_monotone": self.residual_monotone,
               "commutator_bounded": self.commutator_bounded}
        for key, v in self.checks.items():
            if isinstance(v, dict):
                out[key] = {k: (x.as_dict() if hasattr(x, "as_dict") else x) for k, x in v.items()}
            else:
                out[key] = v.as_dict()
        return out


def triple_pair(g, n, seed, signed=True):
    """Seeded pair (S, T) of planted matrices with constants drawn in [0.5, 2].

    ``signed=False`` plants positive profiles only.
    """
    rng = seeded_generator(seed)
    cs = rng.uniform(0.5, 2.0, size=4)
    if not signed:
        cs[1] = cs[3] = 0.0
    S = plant_profile(g, n, cs[0], cs[1], seed=2 * seed + 1)
    T = plant_profile(g, n, cs[2], cs[3], seed=2 * seed + 2)
    return S, T


def run_triple(g, n, seed, signed=True, slack_rel=1e-8, windows=(32, 64, 128, 256),
               commutator=True):
    """Eigensolve S, T and S + T and run the exact and asymptotic checks."""
    S, T = triple_pair(g, n, seed, signed=signed)
    ST = S + T
    eS, eT, eST = jacobi_eigen(S), jacobi_eigen(T), jacobi_eigen(ST)
    norm = max(S.frobenius(), T.frobenius(), ST.frobenius())
    slack = slack_rel * norm
    checks = {
        "fan": check_fan(eS.singular, eT.singular, eST.singular, slack),
        "weyl_modulus_S": check_weyl_modulus(eS.signed, eS.singular, slack),
        "weyl_modulus_T": check_weyl_modulus(eT.signed, eT.singular, slack),
        "weyl_modulus_ST": check_weyl_modulus(eST.signed, eST.singular, slack),
        "weyl_pm": check_weyl_pm(eS.signed, eT.signed, eST.signed, slack),
    }
    tr = ST.trace()
    trace_error = abs(eST.eigenvalues.sum() - (S.trace() + T.trace())) / max(abs(tr), norm, 1e-300)
    ws = [w for w in windows if w <= n]
    resid = []
    monotone = False
    if len(ws) >= 3:
        est = additivity_residual(eS.signed, eT.signed, eST.signed, g.primitive(), grid=ws, W=3)
        resid = [[int(N), abs(v)] for N, v in est.windows]
        vals = [v for _, v in resid]
        monotone = all(b < a for a, b in zip(vals, vals[1:]))
    bounded = None
    if commutator:
        Q = random_orthogonal(n, seed=2 * seed + 3)
        bounded = commutator_diagnostic(commutator_test(T, Q), g).bounded
    checks["trace"] = _Flag("trace_endpoint", trace_error <= 1e-9)
    return TripleResult(seed, n, checks, float(trace_error), resid, monotone, bounded)


class _Flag:
    def __init__(self, name, ok):
        self.name = name
        self.ok = bool(ok)

    def as_dict(self):
        return {"name": self.name, "ok": self.ok}


def make_triple_dump(g, n, seed, directory, signed=True):
    """Write S, T and S + T for one seed as binary dumps; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    S, T = triple_pair(g, n, seed, signed=signed)
    paths = []
    for tag, A in (("S", S), ("T", T), ("ST", S + T)):
        path = os.path.join(directory, f"seed{seed}_{tag}.bin")
        dump_matrix(A, path)
        paths.append(path)
    return paths
