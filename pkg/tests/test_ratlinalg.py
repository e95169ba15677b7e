import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from bellforge.ratlinalg import affine_dimension, exact_rank, independent_rows, nullspace


def test_rank_examples():
    assert exact_rank(np.eye(4, dtype=np.int64)) == 4
    assert exact_rank(np.zeros((3, 5), dtype=np.int64)) == 0
    assert exact_rank(np.array([[1, 2], [2, 4]])) == 1


def test_affine_dimension_of_simplex():
    pts = np.vstack([np.zeros(3, dtype=np.int64), np.eye(3, dtype=np.int64)])
    assert affine_dimension(pts) == 3
    assert affine_dimension(pts[:1]) == 0


def test_near_singular_integer_matrix():
    # float rank misreads this; exact arithmetic does not
    big = 2**40
    M = np.array([[big, big + 1], [big - 1, big]], dtype=np.int64)
    assert exact_rank(M) == 2


def test_nullspace_annihilates():
    rows = [[1, 1, 0, 0], [0, 1, 1, 0]]
    K = nullspace(rows, 4)
    assert len(K) == 2
    for k in K:
        assert all(sum(a * b for a, b in zip(r, k)) == 0 for r in rows)


def test_independent_rows_picks_a_basis():
    rows = [[1, 0], [2, 0], [0, 3]]
    idx = independent_rows(rows, 2)
    assert len(idx) == 2 and 2 in idx


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.data())
def test_rank_matches_sympy(r, c, data):
    vals = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=r * c, max_size=r * c))
    M = np.array(vals, dtype=np.int64).reshape(r, c)
    assert exact_rank(M) == sympy.Matrix(M.tolist()).rank()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.data())
def test_rank_of_products(k, data):
    # rank-k matrices built as integer products
    A = np.array(data.draw(st.lists(st.integers(-3, 3), min_size=12 * k, max_size=12 * k))).reshape(12, k)
    B = np.array(data.draw(st.lists(st.integers(-3, 3), min_size=k * 10, max_size=k * 10))).reshape(k, 10)
    M = A @ B
    assert exact_rank(M) == sympy.Matrix(M.tolist()).rank()
