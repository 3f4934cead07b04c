# bb_codes.py
"""Bivariate bicycle (BB) codes built from polynomial term lists, plus the code registry

Index convention: a point (r, c) of the l x m torus has index i = r*m + c.
The monomial x^a y^b moves (r, c) to ((r + a) mod l, (c + b) mod m), so x
shifts along the l axis and y along the m axis.
"""

import csv
import logging
import os
from functools import lru_cache

import numpy as np

from bb_gf2 import Gf2Matrix, rank

logger = logging.getLogger(__name__)

CODES_CSV = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'codes.csv')
BASES = ('Z_memory', 'X_memory')


class CodeError(ValueError):
    """raised for malformed polynomials, mismatched codes or unknown code names"""


class PolyTerms:
    """Terms x^a y^b of a bivariate polynomial over Z_l x Z_m"""

    def __init__(self, terms, l, m):
        terms = tuple((int(a), int(b)) for a, b in terms)
        if not terms:
            raise CodeError("a polynomial needs at least one term")
        if len(set(terms)) != len(terms):
            raise CodeError(f"repeated term in {terms}")
        for a, b in terms:
            if not (0 <= a < l and 0 <= b < m):
                raise CodeError(f"term x^{a} y^{b} out of range for l={l}, m={m}")
        self.terms = terms
        self.l = int(l)
        self.m = int(m)

    @classmethod
    def parse(cls, text, l, m):
        """parses 'a,b;a,b;...' exponent pairs"""
        terms = []
        for pair in text.split(';'):
            pair = pair.strip()
            if not pair:
                continue
            parts = pair.split(',')
            if len(parts) != 2:
                raise CodeError(f"bad term '{pair}', expected 'a_exp,b_exp'")
            terms.append((int(parts[0]), int(parts[1])))
        return cls(terms, l, m)

    @property
    def weight(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, PolyTerms):
            return NotImplemented
        return (self.l, self.m) == (other.l, other.m) and set(self.terms) == set(other.terms)

    def __hash__(self):
        return hash((self.l, self.m, frozenset(self.terms)))

    def __str__(self):
        names = []
        for a, b in self.terms:
            factors = []
            if a:
                factors.append('x' if a == 1 else f"x^{a}")
            if b:
                factors.append('y' if b == 1 else f"y^{b}")
            names.append(''.join(factors) or '1')
        return ' + '.join(names)

    def to_text(self):
        return ';'.join(f"{a},{b}" for a, b in self.terms)


def monomial_matrix(a, b, l, m):
    """permutation matrix of the shift x^a y^b on the l x m torus"""
    if not (0 <= a < l and 0 <= b < m):
        raise CodeError(f"exponents ({a}, {b}) out of range for l={l}, m={m}")
    index = np.arange(l * m)
    row, col = np.divmod(index, m)
    image = ((row + a) % l) * m + (col + b) % m
    dense = np.zeros((l * m, l * m), dtype=np.uint8)
    dense[image, index] = 1
    return Gf2Matrix.from_dense(dense)


def polynomial_matrix(poly):
    """sum over GF(2) of the monomial matrices of a polynomial"""
    size = poly.l * poly.m
    dense = np.zeros((size, size), dtype=np.uint8)
    for a, b in poly.terms:
        dense ^= monomial_matrix(a, b, poly.l, poly.m).to_dense()
    return Gf2Matrix.from_dense(dense)


class BBCode:
    """A CSS code with Hx = [A | B] and Hz = [B^T | A^T]"""

    def __init__(self, name, l, m, poly_a, poly_b, hx, hz, provenance="", note=""):
        self.name = name
        self.l = l
        self.m = m
        self.A = poly_a
        self.B = poly_b
        self.hx = hx
        self.hz = hz
        self.n = 2 * l * m
        self.n_checks = l * m
        self.w = poly_a.weight
        self.degenerate = poly_a == poly_b
        self.provenance = provenance
        self.note = note

    def __repr__(self):
        return f"BBCode({self.name!r}, n={self.n}, w={self.w})"

    def check_matrix(self, basis='Z_memory'):
        """parity checks that detect the sampled errors: Hz for Z memory, Hx for X memory"""
        if basis == 'Z_memory':
            return self.hz
        if basis == 'X_memory':
            return self.hx
        raise CodeError(f"unknown basis '{basis}', expected one of {BASES}")

    @property
    def k(self):
        """logical qubit count n - rank(Hx) - rank(Hz)"""
        return _logical_count(self)

    def summary(self):
        """plain dict for listings and JSON"""
        return {
            'name': self.name,
            'l': self.l,
            'm': self.m,
            'n': self.n,
            'n_checks': self.n_checks,
            'w': self.w,
            'k': self.k,
            'degenerate': self.degenerate,
            'A': str(self.A),
            'B': str(self.B),
            'provenance': self.provenance,
            'note': self.note,
        }


@lru_cache(maxsize=None)
def _logical_count(code):
    return code.n - rank(code.hx) - rank(code.hz)


def build_bb_code(l, m, poly_a, poly_b, name, provenance="", note=""):
    """builds Hx, Hz from the polynomials and checks the CSS condition"""
    if (poly_a.l, poly_a.m) != (l, m) or (poly_b.l, poly_b.m) != (l, m):
        raise CodeError(f"polynomials for '{name}' are not defined over l={l}, m={m}")
    if poly_a.weight != poly_b.weight:
        raise CodeError(
            f"'{name}': A has {poly_a.weight} terms but B has {poly_b.weight}")

    mat_a = polynomial_matrix(poly_a)
    mat_b = polynomial_matrix(poly_b)
    hx = mat_a.hstack(mat_b)
    hz = mat_b.transpose().hstack(mat_a.transpose())

    assert hx.product(hz.transpose()).nnz == 0, f"CSS condition violated for '{name}'"
    weight = poly_a.weight
    assert np.all(hz.column_weights() == weight), f"'{name}': Hz column weight != {weight}"
    assert np.all(hx.column_weights() == weight), f"'{name}': Hx column weight != {weight}"

    return BBCode(name, l, m, poly_a, poly_b, hx, hz, provenance=provenance, note=note)


def code_from_row(row):
    """builds a code from one codes.csv row (dict)"""
    l = int(row['l'])
    m = int(row['m'])
    return build_bb_code(
        l, m,
        PolyTerms.parse(row['A'], l, m),
        PolyTerms.parse(row['B'], l, m),
        row['name'].strip(),
        provenance=(row.get('provenance') or '').strip(),
        note=(row.get('note') or '').strip())


def load_codes(filename):
    """reads code definitions (name,l,m,A,B[,provenance,note]) from a csv file"""
    codes = []
    with open(filename, 'r', newline='') as csvfile:
        reader = csv.DictReader(csvfile)
        for row in reader:
            try:
                codes.append(code_from_row(row))
            except (CodeError, KeyError, ValueError) as err:
                logger.warning("Skipping code row %r that failed to parse: %s", row, err)
    return codes


@lru_cache(maxsize=None)
def _bundled_codes():
    return tuple(load_codes(CODES_CSV))


def registry():
    """the built-in codes, read from codes.csv next to this module"""
    return list(_bundled_codes())


def get_code(name, codes=None):
    """looks a code up by name in `codes` (default: the registry)"""
    if codes is None:
        codes = registry()
    for code in codes:
        if code.name == name:
            return code
    names = ', '.join(code.name for code in codes)
    raise CodeError(f"unknown code '{name}'. Available codes: {names}")
