"""Tests for experiment specs, the shot runner, the table emitters and the CLI"""

import json
import os

import pytest

import bb_harness
from bb_bp import BPConfig, RelayConfig
from bb_codes import get_code
from bb_harness import (EXPERIMENTS_DIR, OUT_ENV, ExperimentError, ExperimentSpec, ShotRunner,
                        cross_code_sweep, decode_shot, decode_syndrome, find_spec, load_spec,
                        main, run_experiment, shipped_specs)
from bb_noise import NoiseSpec, defect_decomposition, shot_rng, syndrome_of_errors
from bb_report_utils import DecodeRecord, read_records_csv, table_to_csv

QUICK_NOISE = {'kind': 'code_capacity_iid', 'p': 0.02}
QUICK_BP = {'max_iter': 20}


def quick_spec(table, **params):
    d = {'name': f"quick_{table}", 'table': table, 'noise': QUICK_NOISE, 'bp': QUICK_BP,
         'shots': 30, 'seed': 11, 'timing_shots': 0}
    d.update(params)
    return ExperimentSpec(d)


@pytest.fixture(autouse=True)
def no_out_env(monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)


@pytest.mark.parametrize('params', [
    {'name': 'x'},
    {'name': 'x', 'table': 'table99'},
    {'name': 'x', 'table': 'codes', 'codes': ['no_such_code']},
    {'name': 'x', 'table': 'codes', 'colour': 'red'},
    {'name': 'x', 'table': 'mod_classes', 'sweep': {'q': [0.1]}},
    {'name': 'x', 'table': 'mod_classes', 'sweep': {'p': [0.1], 'basis': ['Z_memory']}},
    {'name': 'x', 'table': 'mod_classes', 'sweep': {'p': [0.9]}},
    {'name': 'x', 'table': 'mod_classes', 'decoder': 'mwpm'},
    {'name': 'x', 'table': 'mod_classes', 'shots': 0},
    {'name': 'x', 'table': 'mod_classes', 'noise': {'kind': 'circuit'}},
    {'name': 'x', 'table': 'schedule', 'schedules': ['random']},
    {'name': 'x', 'table': 'pipeline', 'pipeline': {'routing': 'random'}},
])
def test_bad_specs(params):
    with pytest.raises(ExperimentError):
        ExperimentSpec(params)


def test_spec_defaults_and_copies():
    spec = ExperimentSpec({'name': 'x', 'table': 'mod_classes', 'noise': {'p': 0.004}})
    assert spec.sweep_key == 'p'
    assert [noise.p for noise in spec.points()] == [0.004]
    assert spec.codes == ['gross']
    assert spec.scaled(0.5).shots == 1000
    assert spec.scaled(0.0).shots == 1
    assert spec.digest() == ExperimentSpec(spec.to_dict()).digest()
    assert spec.digest() != spec.replace(seed=1).digest()
    assert spec.bp_config(spec.points()[0]).channel_p == 0.004


def test_fixed_weight_and_basis_points():
    weights = quick_spec('fixed_weight', sweep={'fixed_weight': [1, 3]}).points()
    assert [(noise.kind, noise.fixed_weight) for noise in weights] == [
        ('code_capacity_fixed_weight', 1), ('code_capacity_fixed_weight', 3)]
    bases = quick_spec('xz_symmetry', sweep={'basis': ['Z_memory', 'X_memory']}).points()
    assert [noise.basis for noise in bases] == ['Z_memory', 'X_memory']


def test_empty_sweep_gives_empty_table():
    tables = run_experiment(quick_spec('defect_count', sweep={'p': []}))
    assert len(tables) == 1
    assert tables[0].rows == []
    assert table_to_csv(tables[0]).count('\n') == 1


@pytest.mark.parametrize('name', shipped_specs())
def test_shipped_specs_load(name):
    spec = load_spec(os.path.join(EXPERIMENTS_DIR, f"{name}.yaml"))
    assert spec.name == name
    assert spec.shots >= 1


def test_find_spec():
    assert find_spec(7).endswith('table7.yaml')
    assert find_spec('table12').endswith('table12.yaml')
    assert find_spec('clusters').endswith('clusters.yaml')
    with pytest.raises(ExperimentError):
        find_spec('99')
    assert 'simulate' not in shipped_specs()


def test_decode_shot_is_reproducible():
    noise = NoiseSpec(QUICK_NOISE)
    cfg = BPConfig({'channel_p': 0.02, **QUICK_BP})
    first = decode_shot(4, 'gross', noise, cfg, seed=1, point=0)
    second = decode_shot(4, 'gross', noise, cfg, seed=1, point=0)
    assert first == second
    assert first.p == 0.02
    record, failure = decode_shot(4, 'gross', noise, cfg, seed=1, point=0, keep_failures=True)
    assert record == first
    if failure is not None:
        assert record.mod_w_zero and not record.converged


def test_decode_syndrome_decoders():
    gross = get_code('gross')
    syndrome = syndrome_of_errors(gross, [9])
    cfg = BPConfig({'channel_p': 0.01})
    plain = decode_syndrome(gross, syndrome, cfg, decoder='bp')
    assert plain.converged and plain.valid
    relay = decode_syndrome(gross, syndrome, cfg, decoder='relay',
                            relay_cfg=RelayConfig({'channel_p': 0.01}), rng=shot_rng(0, 0))
    assert relay.decoder == 'relay'
    assert relay.converged
    with pytest.raises(ExperimentError):
        decode_syndrome(gross, syndrome, cfg, decoder='mwpm')


def test_tables_are_reproducible():
    spec = quick_spec('mod_classes', sweep={'p': [0.02, 0.04]})
    first = table_to_csv(run_experiment(spec)[0])
    second = table_to_csv(run_experiment(spec)[0])
    assert first == second


@pytest.mark.slow
def test_worker_count_does_not_change_tables():
    spec = quick_spec('noise_levels', shots=40)
    serial = ShotRunner(workers=1)
    parallel = ShotRunner(workers=2)
    assert table_to_csv(run_experiment(spec, serial)[0]) == \
        table_to_csv(run_experiment(spec, parallel)[0])
    assert serial.records == parallel.records


def test_rates_match_records():
    runner = ShotRunner()
    table = run_experiment(quick_spec('noise_levels', shots=40), runner)[0]
    row = table.rows[0]
    nontrivial = [record for record in runner.records if record.defect_count > 0]
    assert row['shots'] == len(runner.records) == 40
    assert row['nontrivial'] == len(nontrivial)
    converged = sum(record.converged for record in nontrivial)
    assert row['bp_conv'] == pytest.approx(converged / len(nontrivial))
    assert row['bp_conv_lo'] <= row['bp_conv'] <= row['bp_conv_hi']
    assert table.metadata['spec_hash'] == quick_spec('noise_levels', shots=40).digest()
    assert 'runtime_s' in table.metadata


def test_defect_count_rows():
    runner = ShotRunner()
    table = run_experiment(quick_spec('defect_count'), runner)[0]
    assert sum(row['count'] for row in table.rows) == sum(
        1 for record in runner.records if record.defect_count > 0)
    assert all(row['mod_w'] == row['defects'] % 3 for row in table.rows)


def test_cross_code_sweep_columns():
    table = cross_code_sweep(['bb72', 'gross'], [0.02], shots=10, seed=3,
                             noise=NoiseSpec(QUICK_NOISE), bp=QUICK_BP)
    assert [row['code'] for row in table.rows] == ['bb72', 'gross']
    assert [row['n'] for row in table.rows] == [72, 144]
    for column in ('mod_w_zero_conv', 'mod_w_nonzero_conv', 'fp_rate', 'auc', 'nontrivial'):
        assert column in table.columns


def test_fp_power_law_needs_three_points():
    table = run_experiment(quick_spec('fp_power_law'))[0]
    assert table.metadata['power_law']['alpha'] is None
    assert 'power_law_note' in table.metadata
    assert table.rows[0]['measurement_bound'] == 0.0
    assert table.rows[0]['in_fit'] is False


def mod0_records(shots, failures):
    return [DecodeRecord(shot=i, code='gross', decoder='bp_osd', schedule='parallel',
                         defect_count=3, mod_w_class=0, mod_w_zero=True, path='BP_ONLY',
                         converged=i >= failures, iterations=1, valid=True)
            for i in range(shots)]


def test_fp_power_law_fits_low_p_only(monkeypatch):
    # rate 4000 p^2 up to p = 0.005, then a steeper point at p = 0.01
    failures = {0.0005: 10, 0.001: 40, 0.002: 160, 0.005: 1000, 0.01: 6000}
    monkeypatch.setattr(bb_harness, '_run_point',
                        lambda spec, runner, noise, point, **options:
                        mod0_records(10000, failures[noise.p]))
    spec = quick_spec('fp_power_law', sweep={'p': sorted(failures)},
                      noise={'kind': 'phenomenological', 'p': 0.001})
    table = run_experiment(spec)[0]
    assert [row['in_fit'] for row in table.rows] == [True, True, True, True, False]
    low = table.metadata['power_law']
    assert low['used_p'] == [0.0005, 0.001, 0.002, 0.005]
    assert low['above_fit_max_p'] == [0.01]
    assert low['alpha'] == pytest.approx(2.0)
    assert low['r_squared'] == pytest.approx(1.0)
    everything = table.metadata['power_law_all_points']
    assert everything['used_p'] == sorted(failures)
    assert everything['alpha'] > 2.05
    assert table.rows[1]['measurement_bound'] == pytest.approx(0.0054, abs=0.0002)


def test_prefilter_rows():
    spec = quick_spec('prefilter', rules=['mod_w', 'threshold:3'])
    table = run_experiment(spec)[0]
    assert [row['rule'] for row in table.rows] == ['mod_w', 'threshold:3']
    for row in table.rows:
        assert row['tp'] + row['fp'] + row['tn'] + row['fn'] <= 30


def test_cluster_study_injects_data_errors_only(monkeypatch):
    seen = []
    analyse = bb_harness.cluster_analysis

    def recording_analysis(code, failures):
        seen.extend(failures)
        return analyse(code, failures)

    monkeypatch.setattr(bb_harness, 'cluster_analysis', recording_analysis)
    spec = quick_spec('clusters', shots=60, decoder='bp',
                      noise={'kind': 'phenomenological', 'p': 0.03, 'readout': 'accumulated'})
    table = run_experiment(spec)[0]
    gross = get_code('gross')
    assert seen
    for error_sample, syndrome in seen:
        assert error_sample.meas_count == 0
        assert syndrome.defect_count % 3 == 0
        assert defect_decomposition(gross, error_sample).meas_defects == 0
    assert table.rows[-1]['weight'] == 'all'
    assert table.rows[-1]['failures'] == len(seen)

    shipped = load_spec(find_spec('clusters'))
    assert shipped.noise.readout == 'accumulated'
    assert shipped.noise.measurement_p == 0.0


def test_pipeline_table_has_both_routings():
    spec = quick_spec('pipeline', shots=20, noise={'kind': 'phenomenological', 'p': 0.001})
    table = run_experiment(spec)[0]
    assert [row['routing'] for row in table.rows] == ['mod_w_prerouting',
                                                       'baseline_all_through_bp']
    assert len(table.metadata['reports']) == 2
    assert all(row['shots'] == 20 for row in table.rows)


def test_cli_codes_list(capsys):
    assert main(['codes', 'list']) == 0
    out = capsys.readouterr().out
    assert out.startswith('name,n,k,w')
    assert 'gross,144,12,3' in out


def test_cli_errors(capsys):
    assert main(['table', '99']) == 1
    assert 'Error:' in capsys.readouterr().err
    assert main(['run', 'no_such_spec.yaml']) == 1


def test_cli_run_writes_tables(tmp_path):
    spec_path = tmp_path / 'quick.yaml'
    spec_path.write_text(
        "name: quick\n"
        "table: mod_classes\n"
        "noise: {kind: code_capacity_iid, p: 0.02}\n"
        "bp: {max_iter: 20}\n"
        "shots: 500\n")
    out = tmp_path / 'out'
    assert main(['run', str(spec_path), '--shots', '12', '--quiet', '--out', str(out)]) == 0
    assert (out / 'quick.csv').exists()
    metadata = json.loads((out / 'quick.json').read_text())['metadata']
    assert metadata['shots'] == 12
    assert len(read_records_csv(str(out / 'quick_records.csv'))) == 12


def test_cli_simulate(tmp_path, capsys):
    config = tmp_path / 'sim.yaml'
    config.write_text("regime: code_capacity\nnoise: {kind: code_capacity_iid, p: 0.01}\n"
                      "bp: {max_iter: 20}\nshots: 10\nseed: 2\n")
    assert main(['simulate', str(config), '--quiet']) == 0
    report = json.loads(capsys.readouterr().out)
    assert report['shots'] == 10
    assert report['config']['bp_osd_latency'] == 108.0
