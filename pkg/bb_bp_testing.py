"""Tests for min-sum BP and the Relay-BP ensemble"""

import numpy as np
import pytest

from bb_bp import (SCHEDULES, BPConfig, RelayConfig, channel_llr, decode_bp, decode_relay,
                   tanner_graph)
from bb_codes import get_code
from bb_gf2 import BitVec, DimensionError, matvec
from bb_noise import NoiseSpec, sample, shot_rng, syndrome_for, syndrome_of_errors


@pytest.fixture(scope='module')
def gross():
    return get_code('gross')


def config(schedule='parallel', p=0.01, **extra):
    return BPConfig({'schedule': schedule, 'channel_p': p, **extra})


def single_defect(code, check):
    bits = np.zeros(code.n_checks, dtype=np.uint8)
    bits[check] = 1
    return syndrome_for(code, bits)


def test_config_validation():
    assert BPConfig().max_iter == 100
    for bad in ({'max_iter': 0}, {'schedule': 'random'}, {'ms_scaling': 0.0},
                {'ms_scaling': 1.5}, {'channel_p': 0.5}, {'damping': 0.1}):
        with pytest.raises(ValueError):
            BPConfig(bad)
    relay = RelayConfig()
    assert (relay.num_relays, relay.iters_per_relay) == (10, 20)
    assert (relay.scaling_low, relay.scaling_high) == (0.5, 1.0)
    with pytest.raises(ValueError):
        RelayConfig({'scaling_low': 0.9, 'scaling_high': 0.6})
    with pytest.raises(ValueError):
        RelayConfig({'relay_carry': 'average'})


def test_tanner_graph_edges(gross):
    graph = tanner_graph(gross)
    assert graph.n_edges == 72 * 6
    assert graph.check_edge_pad.shape == (72, 6)
    assert graph.bit_edge_pad.shape == (144, 3)
    assert channel_llr(0.5 - 1e-12) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize('schedule', SCHEDULES)
def test_trivial_syndrome(gross, schedule):
    result = decode_bp(gross, syndrome_for(gross, [0] * 72), config(schedule))
    assert result.converged
    assert result.iterations_used == 0
    assert result.estimate.popcount() == 0


@pytest.mark.parametrize('schedule', SCHEDULES)
def test_every_single_error_converges(gross, schedule):
    cfg = config(schedule)
    for qubit in range(gross.n):
        syndrome = syndrome_of_errors(gross, [qubit])
        result = decode_bp(gross, syndrome, cfg)
        assert result.converged, qubit
        assert matvec(gross.hz, result.estimate) == syndrome.bits


@pytest.mark.parametrize('schedule', SCHEDULES)
def test_weight_two_errors_converge(gross, schedule):
    rng = np.random.default_rng(8)
    cfg = config(schedule)
    converged = 0
    for _ in range(40):
        qubits = rng.choice(gross.n, size=2, replace=False)
        converged += decode_bp(gross, syndrome_of_errors(gross, qubits), cfg).converged
    assert converged >= 39


def test_single_defect_does_not_converge(gross):
    cfg = config()
    converged = sum(decode_bp(gross, single_defect(gross, check), cfg).converged
                    for check in range(gross.n_checks))
    assert converged <= 1


@pytest.mark.parametrize('schedule', SCHEDULES)
def test_convergence_is_sound(gross, schedule):
    spec = NoiseSpec({'p': 0.01})
    cfg = config(schedule, max_iter=30)
    for shot in range(25):
        _, syndrome = sample(gross, spec, seed=12, shot=shot)
        result = decode_bp(gross, syndrome, cfg)
        assert result.converged == (matvec(gross.hz, result.estimate) == syndrome.bits)
        assert 0 <= result.iterations_used <= 30
        assert result.final_llrs.shape == (144,)


@pytest.mark.parametrize('schedule', SCHEDULES)
def test_decoding_is_deterministic(gross, schedule):
    _, syndrome = sample(gross, NoiseSpec({'p': 0.01}), seed=3, shot=1)
    first = decode_bp(gross, syndrome, config(schedule, max_iter=20))
    second = decode_bp(gross, syndrome, config(schedule, max_iter=20))
    assert first.converged == second.converged
    assert first.iterations_used == second.iterations_used
    assert first.estimate == second.estimate
    assert np.array_equal(first.final_llrs, second.final_llrs)


def test_bad_inputs(gross):
    with pytest.raises(DimensionError):
        decode_bp(gross, syndrome_for(gross, [0] * 72), config(), priors=np.ones(10))
    with pytest.raises(ValueError):
        decode_bp(gross, syndrome_for(gross, [0] * 72), BPConfig())
    result = decode_bp(gross, syndrome_for(gross, [0] * 72), config())
    with pytest.raises(ValueError):
        result.final_llrs[0] = 1.0


def test_relay_single_error(gross):
    rcfg = RelayConfig({'channel_p': 0.01})
    syndrome = syndrome_of_errors(gross, [5])
    result = decode_relay(gross, syndrome, rcfg, rng=shot_rng(0, 1))
    assert result.converged
    assert result.legs == 1
    assert matvec(gross.hz, result.estimate) == syndrome.bits


@pytest.mark.parametrize('carry', ['posterior', 'restart'])
def test_relay_exhausts_its_legs(gross, carry):
    rcfg = RelayConfig({'channel_p': 0.01, 'num_relays': 3, 'iters_per_relay': 5,
                        'relay_carry': carry})
    result = decode_relay(gross, single_defect(gross, 0), rcfg, rng=shot_rng(0, 2))
    if not result.converged:
        assert result.legs == 3
        assert result.iterations_used == 15
    assert result.iterations_used <= 15


def test_relay_is_seeded(gross):
    rcfg = RelayConfig({'channel_p': 0.01, 'num_relays': 4, 'iters_per_relay': 10})
    _, syndrome = sample(gross, NoiseSpec({'p': 0.01}), seed=6, shot=2)
    first = decode_relay(gross, syndrome, rcfg, rng=shot_rng(9, 9))
    second = decode_relay(gross, syndrome, rcfg, rng=shot_rng(9, 9))
    assert first.iterations_used == second.iterations_used
    assert first.estimate == second.estimate
    with pytest.raises(ValueError):
        decode_relay(gross, syndrome, RelayConfig())


def test_estimate_is_bitvec(gross):
    result = decode_bp(gross, syndrome_of_errors(gross, [1, 100]), config())
    assert isinstance(result.estimate, BitVec)
    assert len(result.estimate) == 144
