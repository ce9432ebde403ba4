import numpy as np
import pytest

from bqrelax.symcone import (
    DimensionError,
    NumericError,
    SingularBlockError,
    is_psd,
    lifted_psd_check,
    min_eigenvalue,
    psd_margin,
    schur_complement,
    smat,
    svec,
)

SQRT2 = np.sqrt(2.0)


def test_svec_identity():
    np.testing.assert_array_equal(svec(np.eye(2)), [1.0, 0.0, 1.0])


def test_svec_offdiag_scaling():
    v = svec(np.array([[1.0, 2.0], [2.0, 3.0]]))
    np.testing.assert_allclose(v, [1.0, 2.0 * SQRT2, 3.0], rtol=0, atol=0)


def test_svec_isometry_simple():
    A = np.ones((2, 2))
    B = 2.0 * np.eye(2)
    assert svec(A) @ svec(B) == pytest.approx(np.trace(A @ B))
    assert svec(A) @ svec(B) == pytest.approx(4.0)


def test_smat_identity():
    np.testing.assert_array_equal(smat(np.array([1.0, 0.0, 1.0])), np.eye(2))


def test_smat_scalar():
    np.testing.assert_array_equal(smat(np.array([4.0])), [[4.0]])


def test_smat_bad_length():
    with pytest.raises(DimensionError):
        smat(np.array([1.0, 2.0]))


def test_svec_smat_roundtrip():
    # diagonals are untouched (exact); off-diagonals are scaled by sqrt(2)
    # and back, which costs at most one ulp per entry
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 21))
        A = rng.standard_normal((n, n))
        M = A + A.T
        back = smat(svec(M))
        np.testing.assert_array_equal(np.diag(back), np.diag(M))
        np.testing.assert_allclose(back, M, rtol=5e-16, atol=0)


def test_isometry_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 21))
        A = rng.standard_normal((n, n)); A = A + A.T
        B = rng.standard_normal((n, n)); B = B + B.T
        tr = np.trace(A @ B)
        assert abs(svec(A) @ svec(B) - tr) <= 1e-12 * (1.0 + abs(tr))


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1.0)
    assert min_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(-1.0)
    assert min_eigenvalue(np.diag([2.0, 5.0])) == pytest.approx(2.0)


def test_min_eigenvalue_nonfinite():
    with pytest.raises(NumericError):
        min_eigenvalue(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_is_psd_examples():
    assert is_psd(np.eye(2), 1e-8)
    assert not is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-8)
    assert is_psd(np.zeros((3, 3)), 1e-8)


def test_is_psd_negative_tol_rejected():
    with pytest.raises(ValueError):
        is_psd(np.eye(2), -1.0)


def test_is_psd_scale_invariant():
    # relative tolerance: a matrix scaled by 1e6 keeps its verdict
    M = np.array([[1.0, 0.999], [0.999, 1.0]])
    assert is_psd(M, 1e-8) == is_psd(1e6 * M, 1e-8)


def test_schur_complement_lifted():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        x = rng.standard_normal(n)
        X = rng.standard_normal((n, n))
        X = X + X.T
        M = np.zeros((n + 1, n + 1))
        M[0, 0] = 1.0
        M[0, 1:] = x
        M[1:, 0] = x
        M[1:, 1:] = X
        H = schur_complement(M, 1)
        np.testing.assert_allclose(H, X - np.outer(x, x), atol=1e-12)


def test_schur_complement_identity():
    np.testing.assert_allclose(schur_complement(np.eye(4), 2), np.eye(2), atol=1e-14)


def test_schur_complement_scalar():
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(schur_complement(M, 1), [[0.5]], atol=1e-14)


def test_schur_complement_singular_block():
    M = np.zeros((3, 3))
    M[1:, 1:] = np.eye(2)
    with pytest.raises(SingularBlockError):
        schur_complement(M, 1)


def test_schur_complement_bad_split():
    with pytest.raises(DimensionError):
        schur_complement(np.eye(3), 3)


def test_lifted_psd_check_examples():
    e = np.ones(2)
    assert lifted_psd_check(1.0, -e, np.outer(e, e))
    assert lifted_psd_check(1.0, np.zeros(2), np.eye(2))
    assert not lifted_psd_check(1.0, np.array([2.0, 0.0]), np.eye(2))


def test_lifted_psd_check_alpha_positive():
    with pytest.raises(ValueError):
        lifted_psd_check(0.0, np.zeros(2), np.eye(2))


def test_lifted_psd_check_dim_mismatch():
    with pytest.raises(DimensionError):
        lifted_psd_check(1.0, np.zeros(3), np.eye(2))


def test_schur_equivalence_property():
    # lifted check with alpha=1 agrees with the direct check on X - xx^T
    # whenever both margins are clearly signed
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(400):
        n = int(rng.integers(1, 11))
        x = rng.standard_normal(n)
        X = rng.standard_normal((n, n))
        X = X + X.T + np.eye(n) * rng.uniform(-1, 3)
        direct = psd_margin(X - np.outer(x, x))
        if abs(direct) <= 1e-6:
            continue
        checked += 1
        assert lifted_psd_check(1.0, x, X, 1e-8) == is_psd(X - np.outer(x, x), 1e-8)
    assert checked > 100


def test_psd_implication_direction():
    # X - xx^T >= 0 always implies X >= 0
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        x = rng.standard_normal(n)
        B = rng.standard_normal((n, n))
        X = np.outer(x, x) + B @ B.T  # X - xx^T = BB^T >= 0 by construction
        assert is_psd(X - np.outer(x, x), 1e-8)
        assert is_psd(X, 1e-8)
