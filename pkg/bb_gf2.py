# bb_gf2.py
"""Bit-packed GF(2) vectors and matrices for syndrome decoding

Bits are packed little-endian into 64-bit words: bit i of a vector lives in
word i // 64 at position i % 64. Padding bits past the logical length are
always zero, so popcounts and equality can work on whole words.
"""

from functools import cached_property

import numpy as np

WORD_BITS = 64
WORD = np.dtype('<u8')


class DimensionError(ValueError):
    """raised when vector and matrix shapes disagree"""


def n_words(n_bits):
    """number of 64-bit words needed to hold n_bits"""
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits):
    """packs a 0/1 array (last axis = bits) into little-endian 64-bit words"""
    arr = np.asarray(bits, dtype=np.uint8) & 1
    n_bits = arr.shape[-1]
    packed = np.packbits(arr, axis=-1, bitorder='little')
    pad = n_words(n_bits) * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view(WORD)


def unpack_bits(words, n_bits):
    """inverse of pack_bits: returns a uint8 0/1 array with n_bits on the last axis"""
    as_bytes = np.ascontiguousarray(words, dtype=WORD).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder='little')[..., :n_bits]


def _frozen(array):
    array.flags.writeable = False
    return array


class BitVec:
    """Immutable packed binary vector"""

    __slots__ = ('words', 'length')

    def __init__(self, words, length):
        words = np.asarray(words, dtype=WORD)
        if words.shape != (n_words(length),):
            raise DimensionError(
                f"BitVec of length {length} needs {n_words(length)} words, got {words.shape}")
        object.__setattr__(self, 'words', _frozen(words.copy()))
        object.__setattr__(self, 'length', int(length))

    def __setattr__(self, name, value):
        raise AttributeError("BitVec is immutable")

    def __reduce__(self):
        return (BitVec, (np.array(self.words), self.length))

    @classmethod
    def from_bits(cls, bits):
        """builds a vector from an iterable of 0/1 values"""
        arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
        return cls(pack_bits(arr), arr.size)

    @classmethod
    def from_indices(cls, indices, length):
        """builds a vector with ones at the given indices"""
        arr = np.zeros(length, dtype=np.uint8)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= length):
            raise DimensionError(f"index out of range for length {length}")
        np.bitwise_xor.at(arr, idx, 1)
        return cls.from_bits(arr)

    @classmethod
    def zeros(cls, length):
        return cls(np.zeros(n_words(length), dtype=WORD), length)

    def __len__(self):
        return self.length

    def __getitem__(self, index):
        if not 0 <= index < self.length:
            raise IndexError(index)
        word, bit = divmod(index, WORD_BITS)
        return int((int(self.words[word]) >> bit) & 1)

    def __xor__(self, other):
        if self.length != other.length:
            raise DimensionError(f"xor of lengths {self.length} and {other.length}")
        return BitVec(self.words ^ other.words, self.length)

    def __eq__(self, other):
        if not isinstance(other, BitVec):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.length, self.words.tobytes()))

    def __repr__(self):
        return f"BitVec({''.join(str(b) for b in self.to_array())})"

    def to_array(self):
        """returns the bits as a uint8 numpy array"""
        return unpack_bits(self.words, self.length)

    def popcount(self):
        return int(np.bitwise_count(self.words).sum())

    def support(self):
        """indices of set bits, ascending"""
        return np.flatnonzero(self.to_array())

    def any(self):
        return bool(self.words.any())


class Gf2Matrix:
    """Immutable row-major packed GF(2) matrix with a lazily built sparse index"""

    def __init__(self, rows, cols, words):
        words = np.asarray(words, dtype=WORD)
        if words.shape != (rows, n_words(cols)):
            raise DimensionError(
                f"{rows}x{cols} matrix needs word array {(rows, n_words(cols))}, got {words.shape}")
        self.rows = int(rows)
        self.cols = int(cols)
        self.words = _frozen(np.ascontiguousarray(words).copy())

    @classmethod
    def from_dense(cls, dense):
        """packs a dense 0/1 (rows x cols) array"""
        arr = np.atleast_2d(np.asarray(dense, dtype=np.uint8) & 1)
        rows, cols = arr.shape
        return cls(rows, cols, pack_bits(arr).reshape(rows, n_words(cols)))

    @classmethod
    def identity(cls, size):
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, np.zeros((rows, n_words(cols)), dtype=WORD))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_dense(self):
        return unpack_bits(self.words, self.cols)

    def __eq__(self, other):
        if not isinstance(other, Gf2Matrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.shape, self.words.tobytes()))

    def __repr__(self):
        return f"Gf2Matrix({self.rows}x{self.cols}, nnz={self.nnz})"

    @cached_property
    def row_cols(self):
        """per-row column indices of nonzeros"""
        dense = self.to_dense()
        return tuple(_frozen(np.flatnonzero(row)) for row in dense)

    @cached_property
    def col_rows(self):
        """per-column row indices of nonzeros"""
        dense = self.to_dense()
        return tuple(_frozen(np.flatnonzero(col)) for col in dense.T)

    @property
    def nnz(self):
        return int(np.bitwise_count(self.words).sum())

    def column_weights(self):
        return np.array([len(rows) for rows in self.col_rows], dtype=np.int64)

    def transpose(self):
        return Gf2Matrix.from_dense(self.to_dense().T)

    def product(self, other):
        """GF(2) matrix product self @ other"""
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        dense = (self.to_dense().astype(np.int64) @ other.to_dense().astype(np.int64)) & 1
        return Gf2Matrix.from_dense(dense)

    def hstack(self, *others):
        """block concatenation [self | others...]"""
        blocks = [self] + list(others)
        if len({block.rows for block in blocks}) != 1:
            raise DimensionError("hstack blocks must have equal row counts")
        return Gf2Matrix.from_dense(np.hstack([block.to_dense() for block in blocks]))


def matvec(matrix, vector):
    """returns M·v over GF(2)"""
    if vector.length != matrix.cols:
        raise DimensionError(f"matvec: vector length {vector.length} != matrix cols {matrix.cols}")
    parity = np.bitwise_count(matrix.words & vector.words).sum(axis=1) & 1
    return BitVec.from_bits(parity.astype(np.uint8))


def _column_bits(words, col):
    word, bit = divmod(col, WORD_BITS)
    return (words[:, word] >> np.uint64(bit)) & np.uint64(1)


def _eliminate(words, column_order):
    """in-place Gauss-Jordan over the given pivot-eligible columns; returns pivot columns by row"""
    n_rows = words.shape[0]
    pivots = []
    for col in column_order:
        rank = len(pivots)
        if rank == n_rows:
            break
        hits = np.flatnonzero(_column_bits(words, col)[rank:])
        if hits.size == 0:
            continue
        pivot_row = rank + int(hits[0])
        if pivot_row != rank:
            words[[rank, pivot_row]] = words[[pivot_row, rank]]
        others = np.flatnonzero(_column_bits(words, col))
        others = others[others != rank]
        if others.size:
            words[others] ^= words[rank]
        pivots.append(int(col))
    return pivots


def row_reduce(matrix, column_order=None):
    """reduces M to row-echelon form, choosing pivots in column_order

    Returns (reduced matrix, pivot columns, rank). The reduction is
    Gauss-Jordan, so each pivot column has a single nonzero.
    """
    if column_order is None:
        column_order = range(matrix.cols)
    order = np.asarray(list(column_order), dtype=np.int64)
    if order.size != matrix.cols or not np.array_equal(np.sort(order), np.arange(matrix.cols)):
        raise ValueError(f"column_order must be a permutation of 0..{matrix.cols - 1}")
    words = np.array(matrix.words)
    pivots = _eliminate(words, order)
    return Gf2Matrix(matrix.rows, matrix.cols, words), pivots, len(pivots)


def rank(matrix):
    return row_reduce(matrix)[2]


def _augment(matrix, vector):
    """returns the words of [M | v] with v as column M.cols"""
    words = np.zeros((matrix.rows, n_words(matrix.cols + 1)), dtype=WORD)
    words[:, :matrix.words.shape[1]] = matrix.words
    word, bit = divmod(matrix.cols, WORD_BITS)
    words[:, word] |= vector.to_array().astype(WORD) << np.uint64(bit)
    return words


def eliminate_and_solve(matrix, target, column_order, free=None):
    """solves M·x = target with pivots taken in column_order

    Non-pivot bits of x take their values from `free` (zero when absent) and the
    pivot bits are solved from the reduced system. Returns (x, consistent,
    pivots); when the system is inconsistent x satisfies every row the
    reduction kept and `consistent` is False.
    """
    if target.length != matrix.rows:
        raise DimensionError(f"target length {target.length} != matrix rows {matrix.rows}")
    if free is not None and free.length != matrix.cols:
        raise DimensionError(f"free length {free.length} != matrix cols {matrix.cols}")
    words = _augment(matrix, target)
    pivots = _eliminate(words, column_order)
    n_pivots = len(pivots)
    rhs = _column_bits(words, matrix.cols).astype(np.uint8)
    consistent = not rhs[n_pivots:].any()

    solution = np.zeros(matrix.cols, dtype=np.uint8)
    if free is not None:
        solution = free.to_array().copy()
    solution[pivots] = 0
    if n_pivots:
        free_words = pack_bits(solution)
        reduced = words[:n_pivots, :free_words.shape[0]]
        parity = (np.bitwise_count(reduced & free_words).sum(axis=1) & 1).astype(np.uint8)
        solution[pivots] = rhs[:n_pivots] ^ parity
    return BitVec.from_bits(solution), consistent, pivots


def solve_in_image(matrix, target):
    """returns some x with M·x = target, or None when target is outside image(M)"""
    solution, consistent, _ = eliminate_and_solve(matrix, target, range(matrix.cols))
    if not consistent:
        return None
    return solution
