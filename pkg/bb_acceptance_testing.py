"""Statistical checks of the shipped experiments at desk scale

Each test runs one experiment spec from experiments/ and takes minutes.
They are marked slow; run them with `pytest -m slow`.
"""

import pytest

from bb_harness import find_spec, load_spec, run_experiment

pytestmark = pytest.mark.slow


def shipped(name, **changes):
    spec = load_spec(find_spec(name))
    if changes:
        spec = spec.replace(**changes)
    return run_experiment(spec)[0]


def rows_by(table, key):
    return {row[key]: row for row in table.rows}


@pytest.fixture(scope='module')
def cross_code_low_p():
    return rows_by(shipped('table5'), 'code')


def test_fixed_weight_errors_converge_on_every_schedule():
    table = shipped('table3')
    assert [row['weight'] for row in table.rows] == [1, 2, 3]
    for row in table.rows:
        for schedule in ('parallel', 'serial', 'serial_relative'):
            assert row[schedule] >= 0.99, (row['weight'], schedule)


def test_gross_prediction_at_low_noise(cross_code_low_p):
    gross = cross_code_low_p['gross']
    assert gross['nontrivial'] >= 500
    assert gross['mod_w_zero_conv'] >= 0.99
    assert gross['mod_w_nonzero_conv'] <= 0.04
    assert gross['auc'] >= 0.97


def test_column_weight_four_blurs_the_prediction(cross_code_low_p):
    for name, row in cross_code_low_p.items():
        if row['w'] == 3:
            assert row['auc'] > 0.97, name
    weight_four = cross_code_low_p['bb144_w4']
    assert weight_four['w'] == 4
    assert weight_four['auc'] < 0.85
    assert 0.35 <= weight_four['mod_w_nonzero_conv'] <= 0.60


def test_convergence_by_defect_count_at_high_noise():
    counts = rows_by(shipped('table4'), 'defects')
    assert counts[3]['bp_conv'] == pytest.approx(0.93, abs=0.05)
    for defects in (1, 2):
        if defects in counts:
            assert counts[defects]['bp_conv'] <= 0.02
    assert counts[3]['bp_conv'] > counts[6]['bp_conv'] > counts[9]['bp_conv']


def test_false_positive_rate_follows_a_power_law():
    table = shipped('table2', shots=20000, sweep={'p': [0.0005, 0.001, 0.002, 0.005]})
    fit = table.metadata['power_law']
    assert fit['alpha'] is not None, table.metadata.get('power_law_note')
    assert 1.7 <= fit['alpha'] <= 2.4
    assert fit['r_squared'] >= 0.9
    assert all(p <= 0.005 for p in fit['used_p'])


def test_schedules_agree_at_high_noise():
    table = shipped('table7', sweep={'p': [0.01]})
    row = table.rows[0]
    rates = [row[schedule] for schedule in ('parallel', 'serial', 'serial_relative')]
    assert max(rates) - min(rates) < 0.015
    assert table.metadata['ordering_holds'] is True


def test_relay_changes_nothing_the_prediction_sees():
    table = shipped('table10')
    for p in (0.001, 0.01):
        rows = {row['decoder']: row for row in table.rows if row['p'] == p}
        assert abs(rows['relay']['auc'] - rows['bp']['auc']) < 0.01
        assert rows['relay']['recovered'] == 0


def test_mod_w_dominates_other_features():
    features = rows_by(shipped('table9'), 'feature')
    assert features['mod_w_zero']['auc_p0.001'] >= 0.97
    for name in ('defect_count', 'max_component', 'position_variance'):
        score = features[name]['auc_p0.01']
        assert score <= 0.25 or 0.45 <= score <= 0.55, (name, score)
    for column in ('auc_p0.001', 'auc_p0.01'):
        gain = features['mod_w_plus_defect_count'][column] - features['mod_w_zero'][column]
        assert gain <= 0.01


def test_mod_w_beats_defect_thresholds():
    rules = rows_by(shipped('table11'), 'rule')
    mod_w = rules.pop('mod_w')
    assert mod_w['fp_rate'] == pytest.approx(0.13, abs=0.03)
    assert mod_w['fn_rate'] == pytest.approx(0.085, abs=0.03)
    assert sorted(rules) == ['threshold:12', 'threshold:3', 'threshold:6', 'threshold:9']
    for name, row in rules.items():
        for column in ('fp_rate', 'fn_rate'):
            if row[column] is not None:
                assert mod_w[column] < row[column], (name, column)


def test_failures_mostly_hold_a_weight_two_cluster():
    table = shipped('clusters')
    overall = table.rows[-1]
    assert overall['weight'] == 'all'
    assert overall['failures'] >= 5000
    assert 0.72 <= overall['cluster_fraction'] <= 0.90
    assert table.metadata['increasing_weight_5_to_8'] == {'0.01': True}


def test_pipeline_routing_at_low_noise():
    rows = rows_by(shipped('pipeline', shots=10000), 'routing')
    routed = rows['mod_w_prerouting']
    assert routed['osd_fraction'] == pytest.approx(0.35, abs=0.05)
    assert routed['mean_osd_occupancy'] == pytest.approx(0.9, abs=0.4)
    assert rows['baseline_all_through_bp']['mean_cost'] == pytest.approx(109.0, abs=10.0)
