import numpy as np
import pytest
from hypothesis import given, strategies as st

from weyllab.asymptotics import commutator_diagnostic, weyl_detector
from weyllab.errors import NoConvergence
from weyllab.matrix_harness import (SymmetricMatrix, commutator_test, dump_matrix, jacobi_eigen,
                                    load_matrix, make_triple_dump, permutation_matrix,
                                    plant_profile, profile_diagonal, random_orthogonal,
                                    run_triple, seeded_generator, triple_pair)
from weyllab.rv_calculus import make_power_log

g10 = make_power_log(-1, 0)


def _inverse_iteration(a, shift, iters=30):
    # independent oracle: shifted inverse iteration plus Rayleigh quotient
    n = a.shape[0]
    x = np.ones(n) / np.sqrt(n)
    B = a - shift * np.eye(n)
    for _ in range(iters):
        y = np.linalg.solve(B, x)
        x = y / np.linalg.norm(y)
    return float(x @ a @ x)


def _random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    return SymmetricMatrix.symmetrize(X)


def test_identity_and_diagonal():
    e = jacobi_eigen(SymmetricMatrix(np.eye(3)))
    assert e.signed.plus.tolist() == [1.0, 1.0, 1.0] and len(e.signed.minus) == 0
    e = jacobi_eigen(SymmetricMatrix(np.diag([3.0, -2.0])))
    assert e.signed.plus.tolist() == [3.0] and e.signed.minus.tolist() == [2.0]
    assert e.singular.values.tolist() == [3.0, 2.0]


def test_jacobi_spot_check_inverse_iteration():
    A = _random_symmetric(64, 11)
    e = jacobi_eigen(A)
    gaps = np.diff(np.sort(e.eigenvalues))
    for i in (0, 10, 31, 50, 63):
        lam = e.eigenvalues[i]
        eps = 1e-3 * min(gaps.min(), 1.0)
        ref = _inverse_iteration(A.array, lam + eps)
        assert abs(ref - lam) <= 1e-8 * max(1.0, abs(lam))


@pytest.mark.parametrize("n,seed", [(16, 0), (64, 1), (128, 2)])
def test_jacobi_matches_lapack(n, seed):
    A = _random_symmetric(n, seed)
    e = jacobi_eigen(A)
    ref = np.sort(np.linalg.eigvalsh(A.array))[::-1]
    assert np.allclose(e.eigenvalues, ref, rtol=0, atol=1e-10 * A.frobenius())
    assert e.residual <= 1e-9 * A.frobenius()
    V = e.vectors
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)


def test_jacobi_reports_non_convergence():
    with pytest.raises(NoConvergence):
        jacobi_eigen(_random_symmetric(32, 4), max_sweeps=1)


def test_symmetric_matrix_validation():
    with pytest.raises(ValueError):
        SymmetricMatrix([[1.0, 2.0], [2.0001, 1.0]])
    with pytest.raises(ValueError):
        SymmetricMatrix(np.zeros((513, 513)))
    with pytest.raises(ValueError):
        SymmetricMatrix([[np.nan]])
    A = SymmetricMatrix(np.eye(2))
    with pytest.raises(ValueError):
        A.array[0, 0] = 5.0
    with pytest.raises(AttributeError):
        A.foo = 1


def test_dump_round_trip(tmp_path):
    A = _random_symmetric(10, 3)
    dump_matrix(A, tmp_path / "a.bin")
    raw = (tmp_path / "a.bin").read_bytes()
    assert len(raw) == 8 + 8 * 100
    assert int.from_bytes(raw[:8], "little") == 10
    B = load_matrix(tmp_path / "a.bin")
    assert np.array_equal(A.array, B.array)
    with pytest.raises(ValueError):
        SymmetricMatrix.from_bytes(raw[:-8])


def test_triple_dump(tmp_path):
    paths = make_triple_dump(g10, 8, 5, tmp_path)
    S, T = triple_pair(g10, 8, 5)
    assert np.array_equal(load_matrix(paths[0]).array, S.array)
    assert np.array_equal(load_matrix(paths[2]).array, (S + T).array)


def test_seeded_rng_deterministic():
    a = seeded_generator(42).standard_normal(5)
    b = seeded_generator(42).standard_normal(5)
    assert np.array_equal(a, b)
    Q = random_orthogonal(32, 9)
    assert np.allclose(Q @ Q.T, np.eye(32), atol=1e-13)
    assert np.array_equal(Q, random_orthogonal(32, 9))


def test_plant_profile_small():
    A = plant_profile(g10, 4, 1.0, 0.0, seed=1)
    e = jacobi_eigen(A)
    assert np.allclose(e.eigenvalues, g10(np.arange(4.0)), rtol=1e-12)
    assert A.array.tobytes() == plant_profile(g10, 4, 1.0, 0.0, seed=1).array.tobytes()


def test_profile_diagonal_interleaves():
    d = profile_diagonal(g10, 5, 2.0, 1.0)
    assert d.tolist() == [2.0, -1.0, 1.0, -0.5, 2.0 / 3.0]


def test_plant_profile_weyl_recovery():
    g = make_power_log(-1, 1)
    A = plant_profile(g, 64, 1.5, 0.75, seed=8)
    e = jacobi_eigen(A)
    plus, minus = weyl_detector(e.signed, g)
    assert all(v == pytest.approx(1.5, rel=1e-9) for _, v in plus.windows)
    assert all(v == pytest.approx(0.75, rel=1e-9) for _, v in minus.windows)


def test_commutator_identity_and_permutation():
    T = plant_profile(g10, 32, 1.0, 0.0, seed=2)
    z = commutator_test(T, np.eye(32))
    assert np.all(z.eigenvalues() == 0)
    D = SymmetricMatrix(np.diag(g10(np.arange(32.0))))
    perm = np.roll(np.arange(32), 1)
    s = commutator_test(D, permutation_matrix(perm))
    # spectrum is g(j-1) - g(j) and g(31) - g(0): total zero
    assert abs(s.eigenvalues().sum()) < 1e-13
    assert commutator_diagnostic(s, g10).bounded


def test_commutator_random_conjugation_bounded():
    T = plant_profile(g10, 128, 1.0, 0.5, seed=4)
    s = commutator_test(T, random_orthogonal(128, 77))
    assert commutator_diagnostic(s, g10).bounded


@given(st.integers(0, 2 ** 32), st.sampled_from([16, 32]))
def test_triples_satisfy_exact_inequalities(seed, n):
    r = run_triple(make_power_log(-0.5, 0), n, seed, windows=(4, 8, 16), commutator=False)
    assert r.ok, r.as_dict()


def test_run_triple_n256_determinism():
    a = run_triple(g10, 256, 3)
    b = run_triple(g10, 256, 3)
    assert a.ok and a.commutator_bounded
    assert a.as_dict() == b.as_dict()
