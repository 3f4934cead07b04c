"""Tests for OSD-0 and the BP+OSD pipeline"""

import numpy as np
import pytest

from bb_bp import BPConfig, channel_llr
from bb_codes import get_code
from bb_gf2 import DimensionError, matvec, solve_in_image
from bb_noise import NoiseSpec, sample, syndrome_for, syndrome_of_errors
from bb_osd import decode_bp_osd, decode_osd0, osd_pivot_order
from bb_report_utils import PATH_BP_ONLY, PATH_BP_OSD


@pytest.fixture(scope='module')
def gross():
    return get_code('gross')


@pytest.fixture(scope='module')
def outside_syndrome(gross):
    """a single-defect syndrome outside image(Hz); one exists since rank(Hz) < 72"""
    for check in range(gross.n_checks):
        bits = np.zeros(gross.n_checks, dtype=np.uint8)
        bits[check] = 1
        syndrome = syndrome_for(gross, bits)
        if solve_in_image(gross.hz, syndrome.bits) is None:
            return syndrome
    pytest.fail("every single-defect syndrome is in image(Hz)")


def noisy_reliabilities(code, errors, seed):
    """channel LLRs, negative on the true errors, with jitter to break ties"""
    rng = np.random.default_rng(seed)
    rel = np.full(code.n, channel_llr(0.01)) + rng.normal(0.0, 0.5, code.n)
    rel[list(errors)] *= -1
    return rel


def test_pivot_order():
    order = osd_pivot_order([3.0, -0.5, 1.0, 0.5, -3.0])
    assert list(order) == [1, 3, 2, 0, 4]


def test_in_image_syndromes_are_solved(gross):
    rng = np.random.default_rng(2)
    for _ in range(20):
        errors = rng.choice(gross.n, size=4, replace=False)
        syndrome = syndrome_of_errors(gross, errors)
        rel = noisy_reliabilities(gross, errors, int(errors[0]))
        result = decode_osd0(gross, syndrome, rel)
        assert result.valid
        assert matvec(gross.hz, result.estimate) == syndrome.bits


def test_non_pivot_bits_follow_hard_decisions(gross):
    errors = [3, 40, 99]
    rel = noisy_reliabilities(gross, errors, 5)
    result = decode_osd0(gross, syndrome_of_errors(gross, errors), rel)
    hard = (rel < 0).astype(np.uint8)
    estimate = result.estimate.to_array()
    free = sorted(set(range(gross.n)) - set(result.pivot_columns))
    assert np.array_equal(estimate[free], hard[free])


def test_correct_hard_decision_is_returned(gross):
    errors = [7, 77]
    rel = noisy_reliabilities(gross, errors, 1)
    result = decode_osd0(gross, syndrome_of_errors(gross, errors), rel)
    assert list(result.estimate.support()) == errors


def test_outside_image_is_invalid(gross, outside_syndrome):
    result = decode_osd0(gross, outside_syndrome, np.full(gross.n, 4.0))
    assert not result.valid
    assert matvec(gross.hz, result.estimate) != outside_syndrome.bits


def test_dimension_checks(gross):
    syndrome = syndrome_of_errors(gross, [0])
    with pytest.raises(DimensionError):
        decode_osd0(gross, syndrome, np.ones(10))


def test_bp_osd_paths(gross, outside_syndrome):
    cfg = BPConfig({'channel_p': 0.01})
    easy = decode_bp_osd(gross, syndrome_of_errors(gross, [12]), cfg, shot=4)
    assert easy.path == PATH_BP_ONLY
    assert easy.converged and easy.valid
    assert easy.shot == 4
    assert easy.defect_count == 3 and easy.mod_w_zero

    hard = decode_bp_osd(gross, outside_syndrome, cfg)
    assert hard.path == PATH_BP_OSD
    assert not hard.converged
    assert not hard.valid
    assert hard.iterations == 100
    assert hard.mod_w_class == 1


def test_bp_osd_is_valid_on_code_capacity(gross):
    cfg = BPConfig({'channel_p': 0.03, 'max_iter': 20})
    spec = NoiseSpec({'kind': 'code_capacity_iid', 'p': 0.03})
    for shot in range(15):
        _, syndrome = sample(gross, spec, seed=31, shot=shot)
        record = decode_bp_osd(gross, syndrome, cfg, shot=shot)
        assert record.valid
        assert record.path == (PATH_BP_ONLY if record.converged else PATH_BP_OSD)
