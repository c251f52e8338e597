import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from khmod.f2linalg import (
    BitMatrix,
    BitVector,
    ChainComplexError,
    DimensionError,
    SparseComplex,
    homology,
    homology_rank,
    image_basis,
    kernel_basis,
    rank,
    solve,
    span_rank,
)
from oracles import gf2_mul, gf2_rank


def random_matrix(rng, rows, cols, density=0.5):
    return [[1 if rng.random() < density else 0 for _ in range(cols)] for _ in range(rows)]


@st.composite
def matrices(draw, max_rows=12, max_cols=12):
    rows = draw(st.integers(0, max_rows))
    cols = draw(st.integers(0, max_cols))
    data = draw(st.lists(st.lists(st.integers(0, 1), min_size=cols, max_size=cols), min_size=rows, max_size=rows))
    return BitMatrix.from_dense(data) if rows else BitMatrix.zeros(0, cols)


def test_bitvector_padding_and_length():
    v = BitVector.from_list([1, 0, 1])
    assert v.length == 3 and v.support() == [0, 2]
    with pytest.raises(DimensionError):
        BitVector(2, 0b100)
    with pytest.raises(DimensionError):
        v + BitVector(4, 0)


def test_bitmatrix_rejects_overflowing_rows():
    with pytest.raises(DimensionError):
        BitMatrix(1, 2, [0b100])


def test_rank_small_cases():
    assert rank(BitMatrix.identity(3)) == 3
    assert rank(BitMatrix.zeros(4, 7)) == 0


def test_rank_matches_dense_elimination_on_1000_matrices():
    rng = random.Random(0)
    for _ in range(1000):
        rows, cols = rng.randint(1, 64), rng.randint(1, 64)
        dense = random_matrix(rng, rows, cols, rng.choice((0.05, 0.3, 0.5)))
        assert rank(BitMatrix.from_dense(dense)) == gf2_rank(dense)


def test_kernel_basis_cases():
    assert kernel_basis(BitMatrix.identity(3)) == []
    ker = kernel_basis(BitMatrix.zeros(3, 5))
    assert len(ker) == 5 and span_rank(v.bits for v in ker) == 5
    rng = random.Random(1)
    M = BitMatrix.from_dense(random_matrix(rng, 8, 12))
    ker = kernel_basis(M)
    assert len(ker) == 12 - rank(M)
    assert all(not (M @ v) for v in ker)
    assert span_rank(v.bits for v in ker) == len(ker)


def test_image_basis_cases():
    img = image_basis(BitMatrix.identity(2))
    assert sorted(v.bits for v in img) == [1, 2]
    assert image_basis(BitMatrix.zeros(3, 3)) == []
    M = BitMatrix.from_dense([[1, 1, 0], [0, 0, 1], [1, 1, 1]])
    img = image_basis(M)
    assert len(img) == gf2_rank(M.to_dense()) < M.cols


def test_solve_cases():
    b = BitVector.from_list([1, 0, 1])
    assert solve(BitMatrix.identity(3), b) == b
    assert solve(BitMatrix.zeros(3, 3), b) is None
    rng = random.Random(2)
    for _ in range(50):
        M = BitMatrix.from_dense(random_matrix(rng, 9, 7))
        x = BitVector(7, rng.getrandbits(7))
        rhs = M @ x
        v = solve(M, rhs)
        assert v is not None and M @ v == rhs
    with pytest.raises(DimensionError):
        solve(BitMatrix.identity(3), BitVector(2, 0))


def test_homology_rank_cases():
    assert homology_rank(BitMatrix.zeros(4, 0), BitMatrix.zeros(0, 4)) == 4
    assert homology_rank(BitMatrix.identity(4), BitMatrix.zeros(0, 4)) == 0
    with pytest.raises(ChainComplexError):
        homology_rank(BitMatrix.identity(2), BitMatrix.identity(2))


def _composable_pair(rng, a, b, c):
    """d_out d_in = 0 built as d_in = K X with K spanning ker d_out."""
    d_out = BitMatrix.from_dense(random_matrix(rng, c, b)) if c else BitMatrix.zeros(0, b)
    ker = kernel_basis(d_out)
    cols = []
    for _ in range(a):
        v = 0
        for z in ker:
            if rng.random() < 0.5:
                v ^= z.bits
        cols.append(v)
    return BitMatrix.from_columns(b, cols), d_out


def test_homology_matches_quotient_oracle():
    rng = random.Random(3)
    for _ in range(200):
        a, b, c = rng.randint(0, 8), rng.randint(1, 10), rng.randint(0, 8)
        d_in, d_out = _composable_pair(rng, a, b, c)
        H = homology(d_in, d_out)
        # oracle: dim ker - dim im by dense elimination
        ker = b - (gf2_rank(d_out.to_dense()) if c else 0)
        im = gf2_rank(d_in.to_dense()) if a else 0
        assert H.rank == homology_rank(d_in, d_out) == ker - im
        # representatives are cycles independent modulo the image
        for z in H.representatives:
            assert d_out.apply(z) == 0
        assert span_rank(list(d_in.columns) + H.representatives) == im + H.rank
        for t, z in enumerate(H.representatives):
            assert H.coordinates(z) == 1 << t


def test_homology_rank_symmetric_under_permutation():
    rng = random.Random(4)
    for _ in range(50):
        a, b, c = rng.randint(1, 6), rng.randint(1, 8), rng.randint(1, 6)
        d_in, d_out = _composable_pair(rng, a, b, c)
        p = list(range(b))
        rng.shuffle(p)
        P = np.eye(b, dtype=np.uint8)[p]
        din = BitMatrix.from_dense(gf2_mul(P, d_in.to_dense()))
        dout = BitMatrix.from_dense(gf2_mul(d_out.to_dense(), P.T))
        assert homology_rank(din, dout) == homology_rank(d_in, d_out)


@given(matrices())
def test_rank_nullity(M):
    assert rank(M) + len(kernel_basis(M)) == M.cols
    assert 0 <= rank(M) <= min(M.rows, M.cols)
    for v in kernel_basis(M):
        assert not (M @ v)


@given(matrices(), matrices())
def test_product_agrees_with_dense(A, B):
    if A.cols != B.rows:
        B = BitMatrix.from_columns(A.cols, [c & ((1 << A.cols) - 1) for c in B.columns])
    prod = A @ B
    a = np.array(A.to_dense(), dtype=np.uint8).reshape(A.rows, A.cols)
    b = np.array(B.to_dense(), dtype=np.uint8).reshape(B.rows, B.cols)
    assert np.array_equal(np.array(prod.to_dense(), dtype=np.uint8).reshape(prod.rows, prod.cols), gf2_mul(a, b))


@given(matrices())
def test_transpose_rank(M):
    assert rank(M.T) == rank(M)
    assert M.T.T == M


def test_sparse_complex_reduces_to_homology():
    rng = random.Random(5)
    for _ in range(100):
        a, b, c = rng.randint(0, 6), rng.randint(1, 8), rng.randint(0, 6)
        d_in, d_out = _composable_pair(rng, a, b, c)
        n = a + b + c
        src, tgt = [], []
        for x, col in enumerate(d_in.columns):
            for y in range(b):
                if (col >> y) & 1:
                    src.append(x)
                    tgt.append(a + y)
        for x, col in enumerate(d_out.columns):
            for y in range(c):
                if (col >> y) & 1:
                    src.append(a + x)
                    tgt.append(a + b + y)
        S = SparseComplex.from_edges(n, src, tgt, track=True)
        S.reduce()
        alive = S.survivors()
        assert S.edge_count() == 0
        middle = [x for x in alive if a <= x < a + b]
        assert len(middle) == homology_rank(d_in, d_out)
        # backward images of middle survivors are cycles spanning homology
        reps = []
        for x in middle:
            v = S.backward([x])
            reps.append(sum(1 << (y - a) for y in v if a <= y < a + b))
            assert d_out.apply(reps[-1]) == 0
        assert span_rank(list(d_in.columns) + reps) == rank(d_in) + len(middle)


def test_sparse_complex_cancel_errors():
    S = SparseComplex.from_edges(3, [0], [1])
    with pytest.raises(ValueError):
        S.cancel(0, 2)
    with pytest.raises(ValueError):
        S.cancel(0, 0)
