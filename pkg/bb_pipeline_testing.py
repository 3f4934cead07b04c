"""Tests for the routed decoder pipeline simulation"""

import numpy as np
import pytest

from bb_pipeline import PipelineConfig, ShotLabel, labels_from_records, run_sim
from bb_report_utils import DecodeRecord, write_records_csv

TRIVIAL = ShotLabel(True, True, True)
MOD0_CONVERGES = ShotLabel(False, True, True)
MOD0_FAILS = ShotLabel(False, True, False)
OTHER_CONVERGES = ShotLabel(False, False, True)
OTHER_FAILS = ShotLabel(False, False, False)


def config(**params):
    return PipelineConfig(params)


def test_config_defaults():
    cfg = PipelineConfig()
    assert cfg.regime == 'phenomenological'
    assert (cfg.bp_latency_converge, cfg.bp_osd_latency) == (100.0, 300.0)
    assert cfg.bp.channel_p == 0.001
    fast = config(regime='code_capacity')
    assert (fast.bp_latency_converge, fast.bp_osd_latency) == (46.0, 108.0)
    custom = config(bp_latency_converge=10, bp_osd_latency=20)
    assert (custom.bp_latency_converge, custom.bp_osd_latency) == (10.0, 20.0)
    assert custom.replace(routing='baseline_all_through_bp').bp_osd_latency == 20.0


@pytest.mark.parametrize('params', [
    {'queue': 'lifo'},
    {'regime': 'circuit'},
    {'routing': 'random'},
    {'arrivals': 'bursty'},
    {'num_osd_workers': 0},
    {'arrival_period': 0},
])
def test_config_validation(params):
    with pytest.raises(ValueError):
        PipelineConfig(params)


def test_all_trivial_stream_stays_idle():
    report = run_sim(config(), labels=[TRIVIAL] * 10)
    assert report.completed == 10
    assert report.nontrivial == 0
    assert report.makespan == 900.0
    assert report.utilization == {'bp': [0.0], 'osd': [0.0]}
    assert report.mean_queue_depth == {'bp': 0.0, 'osd': 0.0}
    assert report.mean_occupancy == {'bp': 0.0, 'osd': 0.0}
    assert report.osd_fraction == 0.0
    assert report.mean_cost == 0.0
    assert report.latency_histogram['counts'] == []


def test_baseline_decodes_trivial_syndromes():
    report = run_sim(config(routing='baseline_all_through_bp'), labels=[TRIVIAL] * 10)
    assert report.nontrivial == 0
    assert report.trivial_decoded == 10
    assert report.mean_cost == 100.0
    assert report.makespan == 1000.0
    assert report.utilization['bp'] == [1.0]
    assert report.osd_fraction == 0.0


def test_empty_stream():
    report = run_sim(config(), labels=[])
    assert report.shots == report.completed == 0
    assert report.makespan == 0.0
    assert report.mean_latency == 0.0


SHOTS = [MOD0_CONVERGES, MOD0_FAILS, OTHER_CONVERGES, OTHER_FAILS, TRIVIAL]


def test_prerouting_costs():
    report = run_sim(config(arrival_period=1000), labels=SHOTS)
    assert (report.routed_bp, report.routed_osd) == (2, 2)
    assert report.false_positives == 1
    assert report.osd_fraction == pytest.approx(3 / 4)
    # 100 + 300 (false positive) + 300 + 300 + 0
    assert report.mean_cost == pytest.approx(200.0)
    assert report.mean_latency == pytest.approx(200.0)
    assert report.max_latency == 300.0


def test_baseline_costs():
    report = run_sim(config(arrival_period=1000, routing='baseline_all_through_bp'), labels=SHOTS)
    assert (report.routed_bp, report.routed_osd) == (4, 0)
    assert report.false_positives == 0
    assert report.osd_fraction == pytest.approx(0.5)
    assert report.trivial_decoded == 1
    # 100 + 300 + 100 + 300 + 100 for BP on the trivial syndrome
    assert report.mean_cost == pytest.approx(180.0)
    assert report.utilization['osd'] == [0.0]
    skipped = run_sim(config(arrival_period=1000, routing='baseline_all_through_bp',
                             baseline_decodes_trivial=False), labels=SHOTS)
    assert skipped.trivial_decoded == 0
    assert skipped.mean_cost == pytest.approx(160.0)


def test_mod0_converging_shots_never_reach_osd():
    report = run_sim(config(arrival_period=1000), labels=[MOD0_CONVERGES] * 6)
    assert report.routed_osd == 0
    assert report.osd_fraction == 0.0
    assert report.utilization['osd'] == [0.0]
    assert report.max_queue_depth == {'bp': 0, 'osd': 0}


def test_fifo_queue_on_one_worker():
    report = run_sim(config(arrival_period=10), labels=[OTHER_FAILS] * 3)
    # served back to back: 0-300, 300-600, 600-900
    assert report.makespan == 900.0
    assert report.max_latency == 880.0
    assert report.mean_latency == pytest.approx((300 + 590 + 880) / 3)
    assert report.max_queue_depth['osd'] == 2
    assert report.mean_queue_depth['osd'] == pytest.approx(870 / 900)
    # held syndromes: 1, 2, then 3 until 300, 2 until 600, 1 until 900
    assert report.mean_occupancy['osd'] == pytest.approx(1770 / 900)
    assert report.utilization['osd'] == [1.0]
    assert report.utilization['bp'] == [0.0]


def test_second_worker_shares_the_load():
    report = run_sim(config(arrival_period=10, num_osd_workers=2), labels=[OTHER_FAILS] * 3)
    assert report.makespan == 600.0
    assert report.max_latency == 580.0
    assert report.utilization['osd'] == [1.0, 0.5]
    assert report.max_queue_depth['osd'] == 1


def test_histogram_covers_nontrivial_shots():
    report = run_sim(config(arrival_period=1000, histogram_bin=100), labels=SHOTS)
    histogram = report.latency_histogram
    assert sum(histogram['counts']) == 4
    assert histogram['edges'][0] == 0.0
    assert histogram['edges'][-1] >= report.max_latency


def test_random_labels_are_conserved():
    rng = np.random.default_rng(17)
    labels = [ShotLabel(False, bool(a), bool(b)) for a, b in rng.integers(0, 2, size=(300, 2))]
    report = run_sim(config(arrival_period=150, num_bp_workers=2), labels=labels)
    assert report.completed == 300
    assert report.routed_bp + report.routed_osd == report.nontrivial == 300
    assert report.routed_osd == sum(not label.mod_w_zero for label in labels)
    assert report.false_positives == sum(label.mod_w_zero and not label.converged
                                         for label in labels)
    assert all(0.0 <= u <= 1.0 for u in report.utilization['bp'] + report.utilization['osd'])


def test_poisson_arrivals_are_seeded():
    labels = [OTHER_CONVERGES] * 50
    cfg = config(arrivals='poisson', routing='baseline_all_through_bp')
    first = run_sim(cfg, labels=labels, seed=3)
    second = run_sim(cfg, labels=labels, seed=3)
    other = run_sim(cfg, labels=labels, seed=4)
    assert first.to_dict() == second.to_dict()
    assert first.makespan != other.makespan
    assert first.completed == 50


def test_sampled_stream_is_deterministic():
    cfg = config(bp={'max_iter': 20})
    first = run_sim(cfg, shots=20, seed=2)
    second = run_sim(cfg, shots=20, seed=2)
    assert first.to_dict() == second.to_dict()
    assert first.shots == 20
    assert first.config['code'] == 'gross'


def test_trace_replay(tmp_path):
    records = [DecodeRecord(shot=i, code='gross', decoder='bp_osd', schedule='parallel',
                            defect_count=count, mod_w_class=count % 3,
                            mod_w_zero=count % 3 == 0, path='BP_ONLY',
                            converged=converged, iterations=3, valid=True)
               for i, (count, converged) in enumerate([(0, True), (3, True), (4, False), (6, False)])]
    path = tmp_path / 'trace.csv'
    write_records_csv(records, str(path))
    assert labels_from_records(records) == [TRIVIAL, MOD0_CONVERGES, OTHER_FAILS, MOD0_FAILS]

    report = run_sim(config(trace=str(path), arrival_period=1000))
    assert report.shots == 4
    assert report.false_positives == 1
    assert report.routed_osd == 1
    assert run_sim(config(trace=str(path)), shots=2).shots == 2
