"""Tests for BB code construction and the registry"""

import numpy as np
import pytest

from bb_codes import (CodeError, PolyTerms, build_bb_code, get_code, load_codes,
                      monomial_matrix, polynomial_matrix, registry)
from bb_gf2 import Gf2Matrix


@pytest.mark.parametrize('l, m', [(3, 3), (6, 6), (12, 6)])
def test_monomial_group_law(l, m):
    rng = np.random.default_rng(l * m)
    for _ in range(5):
        a1, a2 = rng.integers(0, l, 2)
        b1, b2 = rng.integers(0, m, 2)
        product = monomial_matrix(a1, b1, l, m).product(monomial_matrix(a2, b2, l, m))
        assert product == monomial_matrix((a1 + a2) % l, (b1 + b2) % m, l, m)


def test_monomial_identity_and_range():
    assert monomial_matrix(0, 0, 4, 5) == Gf2Matrix.identity(20)
    with pytest.raises(CodeError):
        monomial_matrix(4, 0, 4, 5)


def test_polynomial_matrices_commute():
    a = polynomial_matrix(PolyTerms([(3, 0), (0, 1), (0, 2)], 6, 6))
    b = polynomial_matrix(PolyTerms([(0, 3), (1, 0), (2, 0)], 6, 6))
    assert a.product(b) == b.product(a)


@pytest.mark.parametrize('code', registry(), ids=lambda code: code.name)
def test_registry_codes_are_css(code):
    assert code.hx.product(code.hz.transpose()).nnz == 0
    assert np.all(code.hx.column_weights() == code.w)
    assert np.all(code.hz.column_weights() == code.w)
    assert code.hx.shape == (code.n_checks, code.n)
    assert code.k >= 0


def test_gross_code_parameters():
    gross = get_code('gross')
    assert gross.n == 144
    assert gross.n_checks == 72
    assert gross.w == 3
    assert gross.k == 12


@pytest.mark.parametrize('name, n, k', [('bb72', 72, 12), ('bb108', 108, 8), ('two_gross', 288, 12)])
def test_literature_code_dimensions(name, n, k):
    code = get_code(name)
    assert code.n == n
    assert code.k == k


def test_registry_column_weights():
    weights = {code.name: code.w for code in registry()}
    assert weights['bb144_w2'] == 2
    assert weights['bb144_w4'] == 4
    assert weights['gross'] == 3


@pytest.mark.parametrize('text', ['', '0,0;0,0', '12,0', '1;2', 'a,b'])
def test_bad_polynomials(text):
    with pytest.raises((CodeError, ValueError)):
        PolyTerms.parse(text, 12, 6)


def test_polynomial_text():
    poly = PolyTerms.parse('3,0;0,1;0,2', 12, 6)
    assert str(poly) == 'x^3 + y + y^2'
    assert PolyTerms.parse(poly.to_text(), 12, 6) == poly
    assert PolyTerms.parse('0,2;3,0;0,1', 12, 6) == poly


def test_term_count_mismatch():
    with pytest.raises(CodeError):
        build_bb_code(6, 6, PolyTerms([(3, 0), (0, 1)], 6, 6),
                      PolyTerms([(0, 3), (1, 0), (2, 0)], 6, 6), 'mismatch')


def test_unknown_code_and_basis():
    with pytest.raises(CodeError):
        get_code('no_such_code')
    with pytest.raises(CodeError):
        get_code('gross').check_matrix('Y_memory')


def test_load_codes_skips_bad_rows(tmp_path, caplog):
    path = tmp_path / 'codes.csv'
    path.write_text(
        'name,l,m,A,B,provenance,note\n'
        'good,6,6,"3,0;0,1;0,2","0,3;1,0;2,0",test,\n'
        'bad,6,6,"3,0;0,1","0,3;1,0;2,0",test,\n'
        'worse,6,six,"3,0","0,3",test,\n')
    with caplog.at_level('WARNING'):
        codes = load_codes(str(path))
    assert [code.name for code in codes] == ['good']
    assert 'Skipping' in caplog.text


def test_summary_fields():
    summary = get_code('gross').summary()
    assert summary['k'] == 12
    assert summary['A'] == 'x^3 + y + y^2'
    assert summary['B'] == 'y^3 + x + x^2'
