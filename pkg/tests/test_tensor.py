import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from znn.tensor import SizeLimitError, kron, min_norm_solve, unvec, vec

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def mats(max_side=4):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite)
    )


def loop_kron(A, B):
    """Reference: explicit block assembly."""
    m, n = A.shape
    r, s = B.shape
    out = np.zeros((m * r, n * s), dtype=np.result_type(A, B))
    for i in range(m):
        for j in range(n):
            out[i * r:(i + 1) * r, j * s:(j + 1) * s] = A[i, j] * B
    return out


def test_kron_identity_left():
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    K = kron(np.eye(2), B)
    assert np.array_equal(K, np.block([[B, np.zeros((2, 2))], [np.zeros((2, 2)), B]]))


def test_kron_shape():
    assert kron(np.ones((2, 2)), np.ones((3, 3))).shape == (6, 6)
    assert kron(np.ones((2, 3)), np.ones((4, 1))).shape == (8, 3)


def test_kron_size_limit():
    with pytest.raises(SizeLimitError):
        kron(np.ones((100, 100)), np.ones((100, 100)), max_entries=10**6)


@given(mats(), mats())
def test_kron_matches_block_assembly(A, B):
    assert np.array_equal(kron(A, B), loop_kron(A, B))
    assert np.array_equal(kron(A, B), np.kron(A, B))


def test_kron_triple_product_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, m, p, q = rng.integers(1, 5, size=4)
        A = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        X = rng.standard_normal((m, p)) + 1j * rng.standard_normal((m, p))
        B = rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))
        direct = vec(A @ X @ B)
        assert np.linalg.norm(kron(B.T, A) @ vec(X) - direct) <= 1e-13 * np.linalg.norm(direct)


def test_kron_product_rule():
    """Finite-difference derivative of U(t) kron V(t) against the product rule."""
    U = lambda t: np.array([[np.sin(t), t], [1.0, np.cos(2 * t)]])
    dU = lambda t: np.array([[np.cos(t), 1.0], [0.0, -2 * np.sin(2 * t)]])
    V = lambda t: np.array([[t * t, 2.0], [np.exp(t), 0.5]])
    dV = lambda t: np.array([[2 * t, 0.0], [np.exp(t), 0.0]])
    t = 0.4
    rule = kron(dU(t), V(t)) + kron(U(t), dV(t))
    errs = []
    for d in (1e-2, 5e-3):
        fd = (kron(U(t + d), V(t + d)) - kron(U(t - d), V(t - d))) / (2 * d)
        errs.append(np.abs(fd - rule).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_vec_column_stacking():
    assert np.array_equal(vec(np.array([[1, 3], [2, 4]])), [1, 2, 3, 4])


@given(mats(5))
def test_vec_round_trip(X):
    v = vec(X)
    assert v.shape == (X.size,)
    assert np.array_equal(unvec(v, *X.shape), X)


def test_unvec_mismatch():
    with pytest.raises(ValueError):
        unvec(np.arange(5), 2, 3)


def test_min_norm_identity():
    sol = min_norm_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(sol.x, [1, 2, 3]) and sol.rank == 3 and sol.cond == pytest.approx(1.0)


def test_min_norm_rank_one():
    sol = min_norm_solve(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([1.0, 1.0]))
    assert np.allclose(sol.x, [1.0, 0.0]) and sol.rank == 1 and sol.cond == np.inf


def test_min_norm_overdetermined():
    sol = min_norm_solve(np.array([[1.0], [1.0]]), np.array([2.0, 2.0]))
    assert np.allclose(sol.x, [2.0])


def test_min_norm_matches_lstsq_and_pinv():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
    q = rng.standard_normal(5)
    x = min_norm_solve(M, q).x
    assert np.allclose(x, np.linalg.pinv(M) @ q)
    assert np.allclose(x, np.linalg.lstsq(M, q, rcond=None)[0])


def test_min_norm_complex():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    q = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.allclose(M @ min_norm_solve(M, q).x, q)


def test_min_norm_row_mismatch():
    with pytest.raises(ValueError):
        min_norm_solve(np.eye(2), np.ones(3))


@given(
    st.integers(1, 5), st.integers(1, 5), st.integers(1, 5),
    st.integers(0, 2**32 - 1),
)
def test_min_norm_property(rows, cols, rank, seed):
    rng = np.random.default_rng(seed)
    rank = min(rank, rows, cols)
    M = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
    x0 = rng.standard_normal(cols)
    sol = min_norm_solve(M, M @ x0)
    assert np.linalg.norm(M @ sol.x - M @ x0) <= 1e-12 * np.linalg.norm(M, 2) * np.linalg.norm(x0)
    assert np.linalg.norm(sol.x) <= np.linalg.norm(x0) + 1e-12
    # the minimal-norm solution has no component in the null space
    _, sv, Vh = np.linalg.svd(M)
    null = Vh[int((sv > 1e-12 * sv[0]).sum()):]
    assert np.allclose(null @ sol.x, 0, atol=1e-10)
