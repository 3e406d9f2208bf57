import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from support import random_sparse_matrix
from walkosc.dynamics import SchrodingerPropagator
from walkosc.instances import T1
from walkosc.oracle import OracleError, dense_materialize, from_dense, from_entries
from walkosc.qw_to_ho import build_doubled_A
from walkosc.sign_split import (
    AntisymmetryError, DoubledIndex, antisymmetry_residual, embed_operator, embed_vector, project_back, split_pos_neg,
)

# the doubled example-1 matrix, rows assembled from the split of T1^2
A1 = np.array([
    [1, 0, 0, 0, 0, -1],
    [0, 2, 0, 0, 0, 0],
    [0, 0, 1, -1, 0, 0],
    [0, 0, -1, 1, 0, 0],
    [0, 0, 0, 0, 2, 0],
    [-1, 0, 0, 0, 0, 1],
], dtype=float)


def test_doubled_index_maps():
    idx = DoubledIndex(3)
    assert [idx.sigma1(s) for s in range(3)] == [0, 1, 2]
    assert [idx.sigma2(s) for s in range(3)] == [3, 4, 5]
    assert all(idx.pi(idx.sigma(c, s)) == s for c in (1, 2) for s in range(3))
    assert idx.copy_of(4) == 2
    with pytest.raises(IndexError):
        idx.pi(6)
    with pytest.raises(ValueError):
        idx.sigma(3, 0)


def test_split_examples():
    p, n = split_pos_neg(from_dense(np.array([[1.0, -2.0], [-2.0, 1.0]])))
    assert np.array_equal(dense_materialize(p), np.eye(2))
    assert np.array_equal(dense_materialize(n), [[0, 2], [2, 0]])
    p, n = split_pos_neg(from_dense(T1))
    assert np.array_equal(dense_materialize(n), np.zeros((3, 3)))
    b = from_entries((1, 2), [(0, 0, 1.0), (0, 1, -1.0)])
    p, n = split_pos_neg(b)
    assert np.array_equal(dense_materialize(p), [[1, 0]]) and np.array_equal(dense_materialize(n), [[0, 1]])


def test_embed_operator_block_diagonal_for_nonnegative():
    p, n = split_pos_neg(from_dense(T1))
    assert np.array_equal(dense_materialize(embed_operator(p, n)), np.kron(np.eye(2), T1))


def test_embed_operator_rejects_negative_input():
    m = from_dense(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(OracleError, match="negative"):
        embed_operator(m, m).query_row(0)


def test_doubled_example1():
    A, _ = build_doubled_A(from_dense(T1), unsafe=True)
    assert np.array_equal(dense_materialize(A), A1)
    assert np.array_equal(A1, A1.T)


def test_embed_and_project():
    assert embed_vector([1.0, 0.0]).tolist() == [1.0, 0.0, -1.0, 0.0]
    assert embed_vector(np.zeros(2)).tolist() == [0.0] * 4
    x = np.array([0.3, -1.2, 2.0])
    assert np.dot(embed_vector(x), embed_vector(x)) == pytest.approx(2 * np.dot(x, x))
    assert project_back([1.0, 0.0, -1.0, 0.0]).tolist() == [1.0, 0.0]
    with pytest.raises(AntisymmetryError):
        project_back([1.0, 0.0, -1.0 + 2e-8, 0.0], tol=1e-8)
    with pytest.raises(ValueError):
        project_back([1.0, 2.0, 3.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 32), st.sampled_from([0.3, 1.0, 3.0]))
def test_embedding_commutes_with_evolution(seed, n, t):
    rng = np.random.default_rng(seed)
    M = random_sparse_matrix(rng, n, 0.3)
    p, neg = split_pos_neg(from_dense(M))
    big = dense_materialize(embed_operator(p, neg))
    assert big.min() >= 0
    x = rng.normal(size=n)
    z = SchrodingerPropagator(big)(embed_vector(x).astype(complex), t)
    assert antisymmetry_residual(z) < 1e-9
    assert np.allclose(project_back(z), SchrodingerPropagator(M)(x.astype(complex), t), atol=1e-9)


def test_blockwise_embedding_equals_whole():
    rng = np.random.default_rng(2)
    blocks = [[random_sparse_matrix(rng, 4, 0.5, symmetric=False) for _ in range(2)] for _ in range(2)]
    M = np.block(blocks)
    whole = dense_materialize(embed_operator(*split_pos_neg(from_dense(M, symmetric=False))))
    n = 8
    # reorder the per-block embeddings into the global [copy 1; copy 2] layout
    per_block = np.zeros((2 * n, 2 * n))
    for i in range(2):
        for j in range(2):
            P, N = np.clip(blocks[i][j], 0, None), np.clip(-blocks[i][j], 0, None)
            for ci, cj, part in ((0, 0, P), (0, 1, N), (1, 0, N), (1, 1, P)):
                r, c = ci * n + 4 * i, cj * n + 4 * j
                per_block[r:r + 4, c:c + 4] = part
    assert np.array_equal(whole, per_block)
