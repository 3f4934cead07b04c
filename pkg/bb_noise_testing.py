"""Tests for noise sampling, syndromes and the defect decomposition"""

import itertools

import numpy as np
import pytest

from bb_codes import PolyTerms, build_bb_code, get_code
from bb_gf2 import BitVec, DimensionError, matvec
from bb_noise import (ErrorSample, NoiseSpec, defect_decomposition, sample, shot_rng,
                      syndrome_for, syndrome_of_errors)


@pytest.fixture(scope='module')
def gross():
    return get_code('gross')


def perfect(code, qubits):
    """an ErrorSample with data errors only"""
    return ErrorSample(BitVec.from_indices(qubits, code.n),
                       np.zeros((0, code.n_checks), dtype=np.uint8))


def shared_checks(code, q1, q2):
    col_rows = code.hz.col_rows
    return len(set(col_rows[q1]) & set(col_rows[q2]))


def test_noise_defaults_and_validation():
    spec = NoiseSpec()
    assert spec.kind == 'phenomenological'
    assert spec.rounds == 5
    assert spec.readout == 'final_round'
    assert spec.measurement_p == spec.p
    assert NoiseSpec({'meas_p': 0.0}).measurement_p == 0.0
    with pytest.raises(ValueError):
        NoiseSpec({'kind': 'circuit'})
    with pytest.raises(ValueError):
        NoiseSpec({'p': 0.7})
    with pytest.raises(ValueError):
        NoiseSpec({'fixed_weight': 2})
    with pytest.raises(ValueError):
        NoiseSpec({'kind': 'code_capacity_fixed_weight'})
    with pytest.raises(ValueError):
        NoiseSpec({'rate': 0.1})
    with pytest.raises(ValueError):
        NoiseSpec({'readout': 'every_round'})
    with pytest.raises(ValueError):
        NoiseSpec({'meas_p': 0.6})
    assert spec.replace(p=0.01).p == 0.01


def test_sampling_is_deterministic(gross):
    spec = NoiseSpec({'p': 0.05})
    first = sample(gross, spec, seed=5, shot=3)
    second = sample(gross, spec, seed=5, shot=3)
    assert first[0].data_errors == second[0].data_errors
    assert np.array_equal(first[0].meas_errors, second[0].meas_errors)
    assert first[1].bits == second[1].bits
    other = sample(gross, spec, seed=5, shot=4)
    assert other[0].data_errors != first[0].data_errors or other[1].bits != first[1].bits


def test_points_use_separate_streams(gross):
    spec = NoiseSpec({'p': 0.05})
    a, _ = sample(gross, spec, seed=1, shot=0, point=0)
    b, _ = sample(gross, spec, seed=1, shot=0, point=1)
    assert a.data_errors != b.data_errors or not np.array_equal(a.meas_errors, b.meas_errors)


def test_code_capacity_has_no_measurement_errors(gross):
    spec = NoiseSpec({'kind': 'code_capacity_iid', 'p': 0.05})
    error_sample, syndrome = sample(gross, spec, seed=2)
    assert error_sample.meas_errors.shape == (0, 72)
    assert error_sample.meas_count == 0
    assert syndrome.bits == matvec(gross.hz, error_sample.data_errors)


@pytest.mark.parametrize('weight', [0, 1, 2, 5])
def test_fixed_weight(gross, weight):
    spec = NoiseSpec({'kind': 'code_capacity_fixed_weight', 'fixed_weight': weight})
    for shot in range(5):
        error_sample, _ = sample(gross, spec, seed=0, shot=shot)
        assert error_sample.data_weight == weight


@pytest.mark.parametrize('readout, decoded_rounds', [('final_round', 1), ('accumulated', 5)])
def test_phenomenological_syndrome(gross, readout, decoded_rounds):
    spec = NoiseSpec({'p': 0.02, 'rounds': 5, 'readout': readout})
    for shot in range(10):
        error_sample, syndrome = sample(gross, spec, seed=9, shot=shot)
        assert error_sample.meas_errors.shape == (decoded_rounds, 72)
        expected = matvec(gross.hz, error_sample.data_errors) ^ error_sample.meas_syndrome
        assert syndrome.bits == expected
        assert syndrome.mod_w_class == syndrome.defect_count % 3


def test_readouts_share_the_round_stream(gross):
    p = 0.03
    final = NoiseSpec({'p': p, 'rounds': 5})
    accumulated = final.replace(readout='accumulated')
    for shot in range(5):
        rng = shot_rng(7, shot)
        flips = (rng.random((5, gross.n)) < p).astype(np.uint8)
        meas = (rng.random((5, gross.n_checks)) < p).astype(np.uint8)
        last, _ = sample(gross, final, seed=7, shot=shot)
        assert last.data_errors == BitVec.from_bits(flips[-1])
        assert np.array_equal(last.meas_errors, meas[-1:])
        total, _ = sample(gross, accumulated, seed=7, shot=shot)
        assert total.data_errors == BitVec.from_bits(np.bitwise_xor.reduce(flips, axis=0))
        assert np.array_equal(total.meas_errors, meas)


def test_data_only_rounds(gross):
    spec = NoiseSpec({'p': 0.02, 'readout': 'accumulated', 'meas_p': 0.0})
    for shot in range(10):
        error_sample, syndrome = sample(gross, spec, seed=3, shot=shot)
        assert error_sample.meas_count == 0
        assert syndrome.bits == matvec(gross.hz, error_sample.data_errors)


def test_default_noise_is_one_round_per_syndrome(gross):
    # one round at p = 0.001: 1 - 0.999^216 of syndromes are nontrivial, about 64% of them mod-3 = 0
    spec = NoiseSpec({'p': 0.001})
    syndromes = [sample(gross, spec, seed=31, shot=shot)[1] for shot in range(2000)]
    nontrivial = [syndrome for syndrome in syndromes if not syndrome.trivial]
    assert 0.15 < len(nontrivial) / len(syndromes) < 0.24
    zero = sum(1 for syndrome in nontrivial if syndrome.mod_w_class == 0)
    assert 0.53 < zero / len(nontrivial) < 0.75


def test_x_memory_uses_hx(gross):
    spec = NoiseSpec({'kind': 'code_capacity_iid', 'p': 0.05, 'basis': 'X_memory'})
    error_sample, syndrome = sample(gross, spec, seed=4)
    assert syndrome.basis == 'X_memory'
    assert syndrome.bits == matvec(gross.hx, error_sample.data_errors)


def test_every_single_error_gives_three_defects(gross):
    for qubit in range(gross.n):
        terms = defect_decomposition(gross, perfect(gross, [qubit]))
        assert terms.data_defects == 3
        assert terms.overlap_correction == 0
        assert syndrome_of_errors(gross, [qubit]).defect_count == 3


def test_weight_two_decomposition(gross):
    rng = np.random.default_rng(21)
    for _ in range(10000):
        q1, q2 = rng.choice(gross.n, size=2, replace=False)
        error_sample = perfect(gross, [q1, q2])
        syndrome = syndrome_of_errors(gross, [q1, q2])
        terms = defect_decomposition(gross, error_sample)
        overlap = shared_checks(gross, q1, q2)
        assert terms.overlap_correction == overlap
        assert syndrome.defect_count == 3 * 2 - 2 * overlap
        if overlap == 0:
            assert syndrome.mod_w_class == 0


def test_gross_pair_sharing_a_check(gross):
    check = gross.hz.col_rows[0][0]
    partner = next(q for q in gross.hz.row_cols[check] if q != 0)
    syndrome = syndrome_of_errors(gross, [0, partner])
    assert shared_checks(gross, 0, partner) == 1
    assert syndrome.defect_count == 4
    assert syndrome.mod_w_class == 1


def test_pair_sharing_two_checks():
    small = build_bb_code(3, 3, PolyTerms([(0, 0), (1, 0), (0, 1)], 3, 3),
                          PolyTerms([(0, 0), (1, 0), (0, 2)], 3, 3), 'small')
    pairs = [(q1, q2) for q1, q2 in itertools.combinations(range(small.n), 2)
             if shared_checks(small, q1, q2) == 2]
    assert pairs
    for q1, q2 in pairs:
        syndrome = syndrome_of_errors(small, [q1, q2])
        assert syndrome.defect_count == 2
        assert syndrome.mod_w_class == 2


def test_measurement_terms(gross):
    meas = np.zeros((5, 72), dtype=np.uint8)
    meas[0, 4] = 1
    meas[3, 4] = 1
    meas[2, 10] = 1
    error_sample = ErrorSample(BitVec.from_indices([0], gross.n), meas)
    terms = defect_decomposition(gross, error_sample)
    assert error_sample.meas_count == 3
    assert terms.meas_defects == 1
    assert terms.data_defects == 3


def test_syndrome_length_checked(gross):
    with pytest.raises(DimensionError):
        syndrome_for(gross, [0] * 71)
    syndrome = syndrome_for(gross, [0] * 72)
    assert syndrome.trivial
    assert syndrome.mod_w_class == 0
