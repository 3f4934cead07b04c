"""Tests for the packed GF(2) vectors and matrices"""

import itertools

import numpy as np
import pytest

from bb_codes import get_code
from bb_gf2 import (BitVec, DimensionError, Gf2Matrix, eliminate_and_solve, matvec, rank,
                    row_reduce, solve_in_image)


@pytest.fixture(scope='module')
def gross_hz():
    return get_code('gross').hz


def test_matvec_identity():
    v = BitVec.from_bits([1, 0, 1])
    assert matvec(Gf2Matrix.identity(3), v) == v


def test_matvec_all_ones():
    ones = Gf2Matrix.from_dense(np.ones((2, 3), dtype=np.uint8))
    assert matvec(ones, BitVec.from_bits([1, 1, 0])) == BitVec.zeros(2)


@pytest.mark.parametrize('qubit', [0, 17, 71, 72, 143])
def test_single_error_hits_three_checks(gross_hz, qubit):
    syndrome = matvec(gross_hz, BitVec.from_indices([qubit], 144))
    assert syndrome.popcount() == 3


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec(Gf2Matrix.identity(3), BitVec.zeros(4))


def test_matvec_is_linear(gross_hz):
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = BitVec.from_bits(rng.integers(0, 2, 144))
        b = BitVec.from_bits(rng.integers(0, 2, 144))
        assert matvec(gross_hz, a ^ b) == matvec(gross_hz, a) ^ matvec(gross_hz, b)


def test_padding_bits_stay_zero():
    v = BitVec.from_bits(np.ones(70, dtype=np.uint8))
    assert v.popcount() == 70
    assert int(v.words[-1]) >> 6 == 0
    assert BitVec.zeros(70).popcount() == 0
    assert not BitVec.zeros(70).any()


def test_from_indices_cancels_repeats():
    v = BitVec.from_indices([3, 5, 3], 10)
    assert list(v.support()) == [5]
    with pytest.raises(DimensionError):
        BitVec.from_indices([10], 10)


def test_bitvec_is_immutable():
    v = BitVec.zeros(8)
    with pytest.raises(AttributeError):
        v.length = 3
    with pytest.raises(ValueError):
        v.words[0] = 1


def test_row_reduce_identity():
    _, pivots, r = row_reduce(Gf2Matrix.identity(4))
    assert r == 4
    assert sorted(pivots) == [0, 1, 2, 3]


def test_row_reduce_zero_matrix():
    reduced, pivots, r = row_reduce(Gf2Matrix.zeros(3, 3))
    assert r == 0
    assert pivots == []
    assert reduced.nnz == 0


def test_row_reduce_rejects_non_permutation():
    with pytest.raises(ValueError):
        row_reduce(Gf2Matrix.identity(3), [0, 0, 1])


def test_rank_is_order_invariant(gross_hz):
    natural = rank(gross_hz)
    _, _, reversed_rank = row_reduce(gross_hz, range(gross_hz.cols - 1, -1, -1))
    shuffled = np.random.default_rng(7).permutation(gross_hz.cols)
    _, _, shuffled_rank = row_reduce(gross_hz, shuffled)
    assert natural == reversed_rank == shuffled_rank
    assert natural < gross_hz.rows


def test_reduced_pivot_columns_are_unit(gross_hz):
    reduced, pivots, r = row_reduce(gross_hz)
    dense = reduced.to_dense()
    for row, col in enumerate(pivots):
        assert dense[:, col].sum() == 1
        assert dense[row, col] == 1
    assert not dense[r:].any()


def test_solve_identity():
    s = BitVec.from_bits([1, 1, 0, 1])
    assert solve_in_image(Gf2Matrix.identity(4), s) == s


def test_solve_random_syndromes(gross_hz):
    rng = np.random.default_rng(3)
    for _ in range(20):
        e = BitVec.from_bits((rng.random(144) < 0.05).astype(np.uint8))
        s = matvec(gross_hz, e)
        x = solve_in_image(gross_hz, s)
        assert x is not None
        assert matvec(gross_hz, x) == s


def test_solve_outside_image():
    # every column has even weight, so the image only holds even-parity vectors
    m = Gf2Matrix.from_dense([[1, 1, 0, 0], [0, 1, 1, 0], [1, 0, 1, 0]])
    s = BitVec.from_bits([1, 0, 0])
    assert solve_in_image(m, s) is None
    for bits in itertools.product([0, 1], repeat=4):
        assert matvec(m, BitVec.from_bits(bits)) != s


def test_solve_dimension_mismatch():
    with pytest.raises(DimensionError):
        solve_in_image(Gf2Matrix.identity(3), BitVec.zeros(2))


def test_free_bits_are_kept(gross_hz):
    rng = np.random.default_rng(11)
    e = BitVec.from_bits((rng.random(144) < 0.05).astype(np.uint8))
    s = matvec(gross_hz, e)
    free = BitVec.from_bits(rng.integers(0, 2, 144))
    x, consistent, pivots = eliminate_and_solve(gross_hz, s, range(144), free=free)
    assert consistent
    assert matvec(gross_hz, x) == s
    x_bits = x.to_array()
    free_bits = free.to_array()
    non_pivots = sorted(set(range(144)) - set(pivots))
    assert np.array_equal(x_bits[non_pivots], free_bits[non_pivots])


def test_transpose_and_product():
    a = Gf2Matrix.from_dense([[1, 0, 1], [0, 1, 1]])
    assert a.transpose().shape == (3, 2)
    assert a.product(a.transpose()) == Gf2Matrix.from_dense([[0, 1], [1, 0]])
    assert list(a.column_weights()) == [1, 1, 2]
    assert a.nnz == 4
    assert [list(cols) for cols in a.row_cols] == [[0, 2], [1, 2]]
