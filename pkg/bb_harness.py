#!/usr/bin/env python3
# bb_harness.py
"""Experiment runner and command line for the BB decoding lab"""

import argparse
import functools
import hashlib
import json
import logging
import os
import sys
import time
from collections import defaultdict
from dataclasses import replace
from multiprocessing import Pool

import yaml
from tqdm import tqdm

from bb_bp import SCHEDULES, BPConfig, RelayConfig, decode_bp, decode_relay
from bb_codes import CodeError, get_code, registry
from bb_noise import NoiseSpec, sample, shot_rng
from bb_osd import decode_bp_osd, decode_osd0
from bb_pipeline import ROUTINGS, PipelineConfig, labels_from_records, run_sim
from bb_predictor import (COMBINED_FEATURE, FEATURES, FeatureError, classifier_report,
                          cluster_analysis, extract_features, feature_aucs, fit_power_law,
                          measurement_fp_bound)
from bb_report_utils import (PATH_BP_ONLY, PATH_BP_OSD, DecodeRecord, ResultTable, rate_cells,
                             rate_columns, table_to_csv, write_records_csv, write_table)

logger = logging.getLogger(__name__)

EXPERIMENTS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'experiments')
OUT_ENV = 'BBLAB_OUT'

DECODERS = ('bp', 'bp_osd', 'relay')
SWEEP_KEYS = ('p', 'fixed_weight', 'basis')
DEFAULT_RULES = ['threshold:3', 'threshold:6', 'threshold:9', 'threshold:12', 'mod_w']

EXPERIMENT_DEFAULTS = {
    'name': None,
    'table': None,
    'description': '',
    'code': 'gross',
    'codes': None,
    'noise': {},
    'sweep': None,
    'bp': {},
    'schedules': None,
    'relay': {},
    'rules': None,
    'decoder': 'bp_osd',
    'shots': 2000,
    'full_shots': None,
    'seed': 0,
    'timing_shots': 200,
    'fit_max_p': 0.005,
    'pipeline': {},
}


class ExperimentError(ValueError):
    """raised for an experiment that names an unknown table, code or parameter"""


def bp_config_for(bp_params, noise, schedule=None):
    """BPConfig for one sweep point; channel_p defaults to the point's p"""
    params = dict(bp_params or {})
    if schedule is not None:
        params['schedule'] = schedule
    if params.get('channel_p') is None:
        if noise.p <= 0:
            raise ExperimentError("noise with p = 0 needs an explicit bp.channel_p")
        params['channel_p'] = noise.p
    return BPConfig(params)


def _validated(what, build, value):
    try:
        return build(value)
    except (ValueError, TypeError) as err:
        raise ExperimentError(f"{what}: {err}") from None


class ExperimentSpec:
    def __init__(self, d):
        """Read an experiment from a dictionary; throw on missing name or table"""
        d = dict(d or {})
        unknown = set(d) - set(EXPERIMENT_DEFAULTS)
        if unknown:
            raise ExperimentError(f"unknown experiment key(s): {', '.join(sorted(unknown))}")
        params = dict(EXPERIMENT_DEFAULTS)
        params.update({key: value for key, value in d.items() if value is not None})

        if not params['name'] or not params['table']:
            raise ExperimentError("an experiment needs both 'name' and 'table'")
        self.name = str(params['name'])
        self.table = params['table']
        if self.table not in EMITTERS:
            raise ExperimentError(
                f"unknown table '{self.table}'. Available tables: {', '.join(EMITTERS)}")
        self.description = str(params['description'])

        self.code = params['code']
        self.codes = list(params['codes'] or [self.code])
        for name in [self.code] + self.codes:
            try:
                get_code(name)
            except CodeError as err:
                raise ExperimentError(str(err)) from None

        self.noise = _validated('noise', NoiseSpec, params['noise'])
        sweep = params['sweep']
        if sweep is None:
            self.sweep_key, self.sweep_values = 'p', [self.noise.p]
        else:
            if not isinstance(sweep, dict) or len(sweep) != 1 or set(sweep) - set(SWEEP_KEYS):
                raise ExperimentError(f"sweep must have exactly one key out of {SWEEP_KEYS}")
            (self.sweep_key, values), = sweep.items()
            self.sweep_values = list(values or [])

        self.bp = dict(params['bp'] or {})
        _validated('bp', BPConfig, self.bp)
        self.schedules = list(params['schedules'] or [BPConfig(self.bp).schedule])
        for schedule in self.schedules:
            if schedule not in SCHEDULES:
                raise ExperimentError(f"schedule '{schedule}' not in {SCHEDULES}")
        self.relay = dict(params['relay'] or {})
        _validated('relay', RelayConfig, self.relay)
        self.rules = list(params['rules'] or DEFAULT_RULES)
        self.decoder = params['decoder']
        if self.decoder not in DECODERS:
            raise ExperimentError(f"decoder '{self.decoder}' not in {DECODERS}")

        self.shots = int(params['shots'])
        if self.shots < 1:
            raise ExperimentError("shots must be >= 1")
        self.full_shots = None if params['full_shots'] is None else int(params['full_shots'])
        self.seed = int(params['seed'])
        self.timing_shots = int(params['timing_shots'])
        self.fit_max_p = float(params['fit_max_p'])
        if self.fit_max_p <= 0:
            raise ExperimentError("fit_max_p must be > 0")
        self.pipeline = dict(params['pipeline'] or {})
        _validated('pipeline', PipelineConfig, self.pipeline)

        # points are built once so bad sweep values fail here, not mid-run
        self._points = _validated('sweep', self._build_points, None)

    def _build_points(self, _):
        if self.sweep_key == 'p':
            return [self.noise.replace(p=float(value)) for value in self.sweep_values]
        if self.sweep_key == 'fixed_weight':
            return [self.noise.replace(kind='code_capacity_fixed_weight', fixed_weight=int(value))
                    for value in self.sweep_values]
        return [self.noise.replace(basis=value) for value in self.sweep_values]

    def points(self):
        """one NoiseSpec per sweep point"""
        return list(self._points)

    def bp_config(self, noise, schedule=None):
        return bp_config_for(self.bp, noise, schedule)

    def relay_config(self, noise):
        params = dict(self.relay)
        if params.get('channel_p') is None:
            params['channel_p'] = noise.p
        return RelayConfig(params)

    def to_dict(self):
        return {
            'name': self.name,
            'table': self.table,
            'description': self.description,
            'code': self.code,
            'codes': self.codes,
            'noise': self.noise.to_dict(),
            'sweep': {self.sweep_key: self.sweep_values},
            'bp': self.bp,
            'schedules': self.schedules,
            'relay': self.relay,
            'rules': self.rules,
            'decoder': self.decoder,
            'shots': self.shots,
            'full_shots': self.full_shots,
            'seed': self.seed,
            'timing_shots': self.timing_shots,
            'fit_max_p': self.fit_max_p,
            'pipeline': self.pipeline,
        }

    def digest(self):
        """short hash of the full parameter set"""
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def replace(self, **changes):
        params = self.to_dict()
        params.update(changes)
        return ExperimentSpec(params)

    def scaled(self, factor):
        """copy with the shot count multiplied by factor (at least one shot)"""
        return self.replace(shots=max(1, int(round(self.shots * float(factor)))))


def load_spec(filename):
    """reads an ExperimentSpec from a yaml file"""
    with open(filename, 'r') as spec_file:
        data = yaml.safe_load(spec_file)
    if not isinstance(data, dict):
        raise ExperimentError(f"'{filename}' does not hold a key-value experiment spec")
    return ExperimentSpec(data)


def shipped_specs():
    """names of the experiment files in experiments/"""
    if not os.path.isdir(EXPERIMENTS_DIR):
        return []
    return sorted(name[:-len('.yaml')] for name in os.listdir(EXPERIMENTS_DIR)
                  if name.endswith('.yaml'))


def find_spec(reference):
    """'7', 'table7' or 'clusters' -> path of the shipped spec"""
    reference = str(reference)
    name = f"table{reference}" if reference.isdigit() else reference
    path = os.path.join(EXPERIMENTS_DIR, f"{name}.yaml")
    if not os.path.exists(path):
        raise ExperimentError(
            f"no shipped experiment '{reference}'. Available: {', '.join(shipped_specs())}")
    return path


def decode_syndrome(code, syndrome, bp_cfg, shot=0, decoder='bp_osd', relay_cfg=None, rng=None):
    """decodes one syndrome with the named decoder -> DecodeRecord"""
    if decoder == 'bp_osd':
        return decode_bp_osd(code, syndrome, bp_cfg, shot=shot)
    if decoder == 'bp':
        result = decode_bp(code, syndrome, bp_cfg)
        schedule = bp_cfg.schedule
        valid = result.converged
    elif decoder == 'relay':
        result = decode_relay(code, syndrome, relay_cfg, rng=rng)
        schedule = relay_cfg.schedule
        valid = result.converged or decode_osd0(code, syndrome, result.final_llrs).valid
    else:
        raise ExperimentError(f"decoder '{decoder}' not in {DECODERS}")
    return DecodeRecord(
        shot=shot,
        code=code.name,
        decoder=decoder,
        schedule=schedule,
        defect_count=syndrome.defect_count,
        mod_w_class=syndrome.mod_w_class,
        mod_w_zero=syndrome.mod_w_class == 0,
        path=PATH_BP_ONLY if result.converged else PATH_BP_OSD,
        converged=result.converged,
        iterations=result.iterations_used,
        valid=valid,
        basis=syndrome.basis,
    )


def decode_shot(shot, code_name, noise, bp_cfg, seed, point, decoder='bp_osd', relay_cfg=None,
                with_features=False, keep_failures=False):
    """samples and decodes one shot of a sweep point

    With keep_failures the result is (record, (error_sample, syndrome)) where
    the pair is only kept for nontrivial mod-w = 0 shots that BP failed on.
    """
    code = get_code(code_name)
    error_sample, syndrome = sample(code, noise, seed, shot, point)
    rng = None
    if relay_cfg is not None:
        rng = shot_rng(relay_cfg.seed, seed, point, shot)
    record = decode_syndrome(code, syndrome, bp_cfg, shot, decoder, relay_cfg, rng)
    extras = {
        'p': noise.p,
        'fixed_weight': noise.fixed_weight,
        'data_weight': error_sample.data_weight,
        'meas_count': error_sample.meas_count,
    }
    if with_features and not syndrome.trivial:
        features = extract_features(code, syndrome)
        extras['max_component'] = features.max_component
        extras['position_variance'] = features.position_variance
    record = replace(record, **extras)
    if not keep_failures:
        return record
    failed = record.nontrivial and record.mod_w_zero and not record.converged
    return record, ((error_sample, syndrome) if failed else None)


class ShotRunner:
    """runs shot loops serially or on a process pool and keeps every record"""

    def __init__(self, workers=1, quiet=True):
        self.workers = max(1, int(workers))
        self.quiet = quiet
        self.records = []

    def run(self, code_name, noise, bp_cfg, seed, point, shots, desc='', **options):
        work = functools.partial(decode_shot, code_name=code_name, noise=noise, bp_cfg=bp_cfg,
                                 seed=seed, point=point, **options)
        if self.workers > 1:
            chunksize = max(1, shots // (8 * self.workers))
            with Pool(self.workers) as pool:
                # imap keeps shot order, so results do not depend on the worker count
                results = list(tqdm(pool.imap(work, range(shots), chunksize=chunksize),
                                    total=shots, desc=desc, disable=self.quiet))
        else:
            results = [work(shot) for shot in tqdm(range(shots), desc=desc, disable=self.quiet)]
        if options.get('keep_failures'):
            self.records.extend(record for record, _ in results)
        else:
            self.records.extend(results)
        return results


def _nontrivial(records):
    return [record for record in records if record.defect_count > 0]


def _converged(records):
    return sum(1 for record in records if record.converged)


PREDICTION_COLUMNS = (['nontrivial']
                      + rate_columns('mod_w_zero_conv', 'mod_w_nonzero_conv', 'fp_rate')
                      + ['auc'])


def _prediction_cells(records):
    """mod-w = 0 and mod-w != 0 convergence, false-positive rate and AUC over nontrivial shots"""
    nontrivial = _nontrivial(records)
    zero = [record for record in nontrivial if record.mod_w_zero]
    nonzero = [record for record in nontrivial if not record.mod_w_zero]
    cells = {'nontrivial': len(nontrivial)}
    cells.update(rate_cells('mod_w_zero_conv', _converged(zero), len(zero)))
    cells.update(rate_cells('mod_w_nonzero_conv', _converged(nonzero), len(nonzero)))
    cells.update(rate_cells('fp_rate', len(zero) - _converged(zero), len(zero)))
    cells['auc'] = classifier_report(nontrivial).auc
    return cells


def _metadata(spec):
    return {
        'experiment': spec.name,
        'table': spec.table,
        'description': spec.description,
        'seed': spec.seed,
        'shots': spec.shots,
        'full_shots': spec.full_shots,
        'spec_hash': spec.digest(),
    }


def _run_point(spec, runner, noise, point, code_name=None, bp_cfg=None, **options):
    code_name = code_name or spec.code
    bp_cfg = bp_cfg or spec.bp_config(noise)
    desc = f"{code_name} {noise.kind} p={noise.p:g}"
    options.setdefault('decoder', spec.decoder)
    return runner.run(code_name, noise, bp_cfg, spec.seed, point, spec.shots, desc=desc, **options)


def emit_codes(spec, runner):
    table = ResultTable(spec.name, ['name', 'n', 'k', 'l', 'm', 'w', 'n_checks', 'A', 'B',
                                    'provenance'], metadata=_metadata(spec))
    for name in spec.codes:
        summary = get_code(name).summary()
        table.add({column: summary[column] for column in table.columns})
    return [table]


def emit_fp_power_law(spec, runner):
    code = get_code(spec.code)
    columns = (['p', 'shots', 'nontrivial', 'mod_w_zero', 'false_positives']
               + rate_columns('fp_rate') + ['measurement_bound', 'in_fit'])
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    all_points = []
    for point, noise in enumerate(spec.points()):
        records = _run_point(spec, runner, noise, point)
        zero = [record for record in _nontrivial(records) if record.mod_w_zero]
        failures = len(zero) - _converged(zero)
        row = {
            'p': noise.p,
            'shots': len(records),
            'nontrivial': len(_nontrivial(records)),
            'mod_w_zero': len(zero),
            'false_positives': failures,
        }
        row.update(rate_cells('fp_rate', failures, len(zero)))
        n_meas = noise.rounds * code.n_checks if noise.kind == 'phenomenological' else 0
        row['measurement_bound'] = measurement_fp_bound(n_meas, code.w, noise.p) if n_meas else 0.0
        row['in_fit'] = noise.p <= spec.fit_max_p
        table.add(row)
        all_points.append((noise.p, row['fp_rate']))
    # the headline exponent uses the low-p points only; the all-points slope is kept alongside
    low_points = [(p, rate) for p, rate in all_points if p <= spec.fit_max_p]
    table.metadata['power_law'] = _power_law_metadata(table, 'power_law', low_points)
    table.metadata['power_law']['fit_max_p'] = spec.fit_max_p
    table.metadata['power_law']['above_fit_max_p'] = [p for p, _ in all_points if p > spec.fit_max_p]
    table.metadata['power_law_all_points'] = _power_law_metadata(table, 'power_law_all_points',
                                                                 all_points)
    return [table]


def _power_law_metadata(table, key, points):
    try:
        fit = fit_power_law(points)
    except FeatureError as err:
        table.metadata[f"{key}_note"] = str(err)
        return {'alpha': None, 'used_p': [], 'excluded_p': [p for p, _ in points]}
    return {
        'alpha': fit.alpha,
        'prefactor': fit.prefactor,
        'r_squared': fit.r_squared,
        'used_p': [p for p, _ in fit.used],
        'excluded_p': [p for p, _ in fit.excluded],
    }


def emit_fixed_weight(spec, runner):
    table = ResultTable(spec.name, ['weight', 'shots'] + rate_columns(*spec.schedules),
                        metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        row = {'weight': noise.fixed_weight, 'shots': spec.shots}
        for schedule in spec.schedules:
            records = _run_point(spec, runner, noise, point, bp_cfg=spec.bp_config(noise, schedule))
            row.update(rate_cells(schedule, _converged(records), len(records)))
        table.add(row)
    return [table]


def emit_defect_count(spec, runner):
    columns = ['p', 'defects', 'mod_w', 'count'] + rate_columns('bp_conv')
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    w = get_code(spec.code).w
    for point, noise in enumerate(spec.points()):
        by_count = defaultdict(list)
        for record in _nontrivial(_run_point(spec, runner, noise, point)):
            by_count[record.defect_count].append(record)
        for defects in sorted(by_count):
            group = by_count[defects]
            row = {'p': noise.p, 'defects': defects, 'mod_w': defects % w, 'count': len(group)}
            row.update(rate_cells('bp_conv', _converged(group), len(group)))
            table.add(row)
    return [table]


def emit_mod_classes(spec, runner):
    w = get_code(spec.code).w
    classes = [f"mod_{r}" for r in range(w)]
    columns = ['p', 'shots', 'nontrivial'] + rate_columns(*classes, 'overall')
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        records = _run_point(spec, runner, noise, point)
        nontrivial = _nontrivial(records)
        row = {'p': noise.p, 'shots': len(records), 'nontrivial': len(nontrivial)}
        for r, name in enumerate(classes):
            group = [record for record in nontrivial if record.mod_w_class == r]
            row.update(rate_cells(name, _converged(group), len(group)))
        row.update(rate_cells('overall', _converged(nontrivial), len(nontrivial)))
        table.add(row)
    return [table]


def cross_code_sweep(codes, p_values, shots, seed=0, noise=None, bp=None, runner=None,
                     name='cross_code'):
    """per code and p: mod-w = 0 / mod-w != 0 convergence, false positives and AUC"""
    runner = runner or ShotRunner()
    base = noise or NoiseSpec()
    table = ResultTable(name, ['code', 'n', 'w', 'p'] + PREDICTION_COLUMNS)
    for code_ref in codes:
        code = get_code(getattr(code_ref, 'name', code_ref))
        for point, p in enumerate(p_values):
            point_noise = base.replace(p=float(p))
            records = runner.run(code.name, point_noise, bp_config_for(bp, point_noise), seed,
                                 point, shots, desc=f"{code.name} p={p:g}")
            row = {'code': code.name, 'n': code.n, 'w': code.w, 'p': point_noise.p}
            row.update(_prediction_cells(records))
            table.add(row)
    return table


def emit_cross_code(spec, runner):
    if spec.sweep_key != 'p':
        raise ExperimentError(f"'{spec.table}' sweeps p, not {spec.sweep_key}")
    table = cross_code_sweep(spec.codes, [noise.p for noise in spec.points()], spec.shots,
                             seed=spec.seed, noise=spec.noise, bp=spec.bp, runner=runner,
                             name=spec.name)
    table.metadata = _metadata(spec)
    return [table]


def emit_xz_symmetry(spec, runner):
    table = ResultTable(spec.name, ['basis', 'p'] + PREDICTION_COLUMNS, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        row = {'basis': noise.basis, 'p': noise.p}
        row.update(_prediction_cells(_run_point(spec, runner, noise, point)))
        table.add(row)
    return [table]


def time_schedule(code, noise, bp_cfg, seed, point, shots):
    """wall-clock microseconds per BP decode over the first shots of a point"""
    syndromes = [sample(code, noise, seed, shot, point)[1] for shot in range(shots)]
    start = time.perf_counter()
    for syndrome in syndromes:
        decode_bp(code, syndrome, bp_cfg)
    return 1e6 * (time.perf_counter() - start) / max(1, shots)


def _schedule_sweep(spec, runner):
    """records per point per schedule, plus the wall-clock timing sidecar"""
    code = get_code(spec.code)
    sweep = []
    timing = {schedule: [] for schedule in spec.schedules}
    for point, noise in enumerate(spec.points()):
        by_schedule = {}
        for schedule in spec.schedules:
            bp_cfg = spec.bp_config(noise, schedule)
            by_schedule[schedule] = _run_point(spec, runner, noise, point, bp_cfg=bp_cfg)
            if spec.timing_shots > 0:
                timing[schedule].append(
                    time_schedule(code, noise, bp_cfg, spec.seed, point, spec.timing_shots))
        sweep.append((noise, by_schedule))
    sidecar = {'timing_us': timing, 'ordering_holds': None}
    if spec.timing_shots > 0 and all(name in timing for name in SCHEDULES):
        sidecar['ordering_holds'] = all(
            a <= b <= c for a, b, c in zip(*(timing[name] for name in SCHEDULES)))
    return sweep, sidecar


def emit_schedule(spec, runner):
    table = ResultTable(spec.name, ['p'] + rate_columns(*spec.schedules), metadata=_metadata(spec))
    sweep, sidecar = _schedule_sweep(spec, runner)
    for noise, by_schedule in sweep:
        row = {'p': noise.p}
        for schedule, records in by_schedule.items():
            nontrivial = _nontrivial(records)
            row.update(rate_cells(schedule, _converged(nontrivial), len(nontrivial)))
        table.add(row)
    table.metadata.update(sidecar)
    return [table]


def emit_timing(spec, runner):
    columns = ['p'] + [f"{schedule}_mean_iterations" for schedule in spec.schedules]
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    sweep, sidecar = _schedule_sweep(spec, runner)
    for noise, by_schedule in sweep:
        row = {'p': noise.p}
        for schedule, records in by_schedule.items():
            nontrivial = _nontrivial(records)
            total = sum(record.iterations for record in nontrivial)
            row[f"{schedule}_mean_iterations"] = total / len(nontrivial) if nontrivial else None
        table.add(row)
    table.metadata.update(sidecar)
    return [table]


def emit_features(spec, runner):
    points = spec.points()
    columns = ['feature'] + [f"auc_p{noise.p:g}" for noise in points]
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    per_point = [feature_aucs(_run_point(spec, runner, noise, point, with_features=True))
                 for point, noise in enumerate(points)]
    for feature in FEATURES + (COMBINED_FEATURE,):
        row = {'feature': feature}
        for noise, aucs in zip(points, per_point):
            row[f"auc_p{noise.p:g}"] = aucs[feature]
        table.add(row)
    return [table]


def emit_relay(spec, runner):
    columns = (['p', 'decoder', 'nontrivial']
               + rate_columns('mod_w_zero_conv', 'mod_w_nonzero_conv')
               + ['auc', 'checked', 'recovered'])
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        standard = _run_point(spec, runner, noise, point, decoder='bp')
        relay = _run_point(spec, runner, noise, point, decoder='relay',
                           relay_cfg=spec.relay_config(noise))
        # same (seed, point, shot) keys, so both lists hold the same syndromes in order
        checked = [shot for shot, record in enumerate(standard)
                   if record.nontrivial and not record.mod_w_zero and not record.converged]
        recovered = sum(1 for shot in checked if relay[shot].converged)
        for name, records in (('bp', standard), ('relay', relay)):
            cells = _prediction_cells(records)
            row = {'p': noise.p, 'decoder': name}
            row.update({column: cells[column] for column in columns if column in cells})
            row['checked'] = len(checked) if name == 'relay' else None
            row['recovered'] = recovered if name == 'relay' else None
            table.add(row)
    return [table]


def emit_prefilter(spec, runner):
    columns = (['p', 'rule', 'tp', 'fp', 'tn', 'fn'] + rate_columns('fp_rate', 'fn_rate')
               + ['auc'])
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        records = _run_point(spec, runner, noise, point)
        for rule in spec.rules:
            try:
                report = classifier_report(records, rule)
            except FeatureError as err:
                raise ExperimentError(str(err)) from None
            row = {'p': noise.p, 'rule': report.rule, 'tp': report.tp, 'fp': report.fp,
                   'tn': report.tn, 'fn': report.fn, 'auc': report.auc}
            row.update(rate_cells('fp_rate', report.fp, report.tp + report.fp))
            row.update(rate_cells('fn_rate', report.fn, report.fn + report.tn))
            table.add(row)
    return [table]


def emit_noise_levels(spec, runner):
    columns = (['p', 'shots', 'nontrivial']
               + rate_columns('bp_conv', 'mod_w_zero_fraction', 'mod_w_zero_conv', 'osd_rate'))
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        records = _run_point(spec, runner, noise, point)
        nontrivial = _nontrivial(records)
        zero = [record for record in nontrivial if record.mod_w_zero]
        to_osd = sum(1 for record in nontrivial if record.path == PATH_BP_OSD)
        row = {'p': noise.p, 'shots': len(records), 'nontrivial': len(nontrivial)}
        row.update(rate_cells('bp_conv', _converged(nontrivial), len(nontrivial)))
        row.update(rate_cells('mod_w_zero_fraction', len(zero), len(nontrivial)))
        row.update(rate_cells('mod_w_zero_conv', _converged(zero), len(zero)))
        row.update(rate_cells('osd_rate', to_osd, len(nontrivial)))
        table.add(row)
    return [table]


def emit_failure_by_defects(spec, runner):
    columns = ['p', 'defects', 'converged', 'failed'] + rate_columns('failure_rate')
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    for point, noise in enumerate(spec.points()):
        by_count = defaultdict(list)
        for record in _nontrivial(_run_point(spec, runner, noise, point)):
            if record.mod_w_zero:
                by_count[record.defect_count].append(record)
        for defects in sorted(by_count):
            group = by_count[defects]
            converged = _converged(group)
            row = {'p': noise.p, 'defects': defects, 'converged': converged,
                   'failed': len(group) - converged}
            row.update(rate_cells('failure_rate', len(group) - converged, len(group)))
            table.add(row)
    return [table]


def emit_clusters(spec, runner):
    code = get_code(spec.code)
    columns = ['p', 'weight', 'failures', 'with_cluster'] + rate_columns('cluster_fraction')
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    trend = {}
    for point, noise in enumerate(spec.points()):
        # clusters are counted on injected data errors; measurement flips are switched off
        if noise.kind == 'phenomenological' and noise.measurement_p != 0.0:
            logger.info("clusters: dropping measurement errors (meas_p %g -> 0)", noise.measurement_p)
            noise = noise.replace(meas_p=0.0)
        results = _run_point(spec, runner, noise, point, keep_failures=True)
        failures = [failure for _, failure in results if failure is not None]
        report = cluster_analysis(code, failures)
        for weight in sorted(report.by_weight):
            count, clustered = report.by_weight[weight]
            row = {'p': noise.p, 'weight': weight, 'failures': count, 'with_cluster': clustered}
            row.update(rate_cells('cluster_fraction', clustered, count))
            table.add(row)
        row = {'p': noise.p, 'weight': 'all', 'failures': report.total,
               'with_cluster': report.with_cluster}
        row.update(rate_cells('cluster_fraction', report.with_cluster, report.total))
        table.add(row)
        fractions = [report.weight_fraction(weight) for weight in range(5, 9)]
        trend[f"{noise.p:g}"] = (None if None in fractions
                                 else all(a <= b for a, b in zip(fractions, fractions[1:])))
    table.metadata['increasing_weight_5_to_8'] = trend
    return [table]


def emit_pipeline(spec, runner):
    cfg = PipelineConfig(spec.pipeline)
    columns = ['p', 'routing', 'shots', 'nontrivial', 'osd_fraction', 'false_positives',
               'bp_utilization', 'osd_utilization', 'mean_bp_queue_depth',
               'mean_osd_queue_depth', 'max_osd_queue_depth', 'mean_osd_occupancy', 'mean_cost',
               'mean_latency']
    table = ResultTable(spec.name, columns, metadata=_metadata(spec))
    reports = []
    for point, noise in enumerate(spec.points()):
        labels = labels_from_records(_run_point(spec, runner, noise, point))
        for routing in ROUTINGS:
            report = run_sim(cfg.replace(routing=routing), seed=spec.seed, labels=labels)
            reports.append(report.to_dict())
            table.add({
                'p': noise.p,
                'routing': routing,
                'shots': report.shots,
                'nontrivial': report.nontrivial,
                'osd_fraction': report.osd_fraction,
                'false_positives': report.false_positives,
                'bp_utilization': sum(report.utilization['bp']) / len(report.utilization['bp']),
                'osd_utilization': sum(report.utilization['osd']) / len(report.utilization['osd']),
                'mean_bp_queue_depth': report.mean_queue_depth['bp'],
                'mean_osd_queue_depth': report.mean_queue_depth['osd'],
                'max_osd_queue_depth': report.max_queue_depth['osd'],
                'mean_osd_occupancy': report.mean_occupancy['osd'],
                'mean_cost': report.mean_cost,
                'mean_latency': report.mean_latency,
            })
    table.metadata['reports'] = reports
    return [table]


EMITTERS = {
    'codes': emit_codes,
    'fp_power_law': emit_fp_power_law,
    'fixed_weight': emit_fixed_weight,
    'defect_count': emit_defect_count,
    'mod_classes': emit_mod_classes,
    'cross_code': emit_cross_code,
    'column_weight': emit_cross_code,
    'xz_symmetry': emit_xz_symmetry,
    'schedule': emit_schedule,
    'timing': emit_timing,
    'features': emit_features,
    'relay': emit_relay,
    'prefilter': emit_prefilter,
    'noise_levels': emit_noise_levels,
    'failure_by_defects': emit_failure_by_defects,
    'clusters': emit_clusters,
    'pipeline': emit_pipeline,
}


def run_experiment(spec, runner=None):
    """runs every sweep point of spec and returns its result tables"""
    runner = runner or ShotRunner()
    start = time.perf_counter()
    tables = EMITTERS[spec.table](spec, runner)
    runtime = time.perf_counter() - start
    for table in tables:
        table.metadata['runtime_s'] = round(runtime, 3)
    return tables


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', help=f"output directory (default: ${OUT_ENV}; tables go to stdout without either)")
    common.add_argument('--workers', help='processes for the shot loop (default: 1)', type=int, default=1)
    common.add_argument('--verbose', help='debug logging', action='store_true')
    common.add_argument('--quiet', help='no progress bars', action='store_true')

    parser = argparse.ArgumentParser(description='Decoding lab for bivariate bicycle codes.')
    commands = parser.add_subparsers(dest='command', required=True)

    codes = commands.add_parser('codes', parents=[common], help='code registry')
    codes.add_argument('action', choices=['list'])

    run = commands.add_parser('run', parents=[common], help='run an experiment spec file')
    run.add_argument('spec', help='yaml experiment spec')
    table = commands.add_parser('table', parents=[common], help='run a shipped experiment')
    table.add_argument('number', help="table number or experiment name (e.g. 7, clusters)")
    for sub in (run, table):
        sub.add_argument('--shots', help='shots per point; overrides the spec', type=int)
        sub.add_argument('--shots-scale', help='multiplies the shot count (default: 1.0)', type=float, default=1.0)
        sub.add_argument('--seed', help='overrides the spec seed', type=int)

    simulate = commands.add_parser('simulate', parents=[common], help='run the pipeline simulation')
    simulate.add_argument('config', help='yaml pipeline config')
    simulate.add_argument('--shots', help='shots to simulate (default: from config, else 2000)', type=int)
    simulate.add_argument('--seed', help='seed (default: from config, else 0)', type=int)
    simulate.add_argument('--trace', help='decode record csv to replay instead of sampling')

    features = commands.add_parser('features', parents=[common], help='feature AUCs at one noise level')
    features.add_argument('--p', help='physical error rate', type=float, required=True)
    features.add_argument('--shots', help='shots (default: 2000)', type=int, default=2000)
    features.add_argument('--seed', help='seed (default: 0)', type=int, default=0)
    features.add_argument('--code', help="registry code (default: 'gross')", default='gross')
    return parser


def _write_tables(tables, records, out_dir, say):
    if not out_dir:
        sys.stdout.write('\n'.join(table_to_csv(table) for table in tables))
        return
    os.makedirs(out_dir, exist_ok=True)
    for table in tables:
        say(f"  wrote {write_table(table, out_dir)}")
    if records:
        path = os.path.join(out_dir, f"{tables[0].name}_records.csv")
        write_records_csv(records, path)
        say(f"  wrote {path}")


def _run_spec(spec, args, out_dir, say):
    if args.shots is not None:
        spec = spec.replace(shots=args.shots)
    if args.shots_scale != 1.0:
        spec = spec.scaled(args.shots_scale)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    say(f"Running '{spec.name}' ({spec.table}, {spec.shots} shots per point, seed {spec.seed})...")
    runner = ShotRunner(args.workers, quiet=args.quiet)
    tables = run_experiment(spec, runner)
    say(f"  done in {tables[0].metadata['runtime_s']} s." if tables else "  done.")
    _write_tables(tables, runner.records, out_dir, say)


def _simulate(args, out_dir, say):
    with open(args.config, 'r') as config_file:
        params = yaml.safe_load(config_file) or {}
    file_shots = params.pop('shots', 2000)
    file_seed = params.pop('seed', 0)
    shots = args.shots if args.shots is not None else int(file_shots)
    seed = args.seed if args.seed is not None else int(file_seed)
    if args.trace:
        params['trace'] = args.trace
    cfg = PipelineConfig(params)
    say(f"Simulating {cfg.routing} pipeline over {shots} shots...")
    report = run_sim(cfg, shots, seed)
    say(f"  OSD took {report.osd_fraction:.1%} of {report.nontrivial} nontrivial syndromes.")
    text = json.dumps(report.to_dict(), indent=2)
    if not out_dir:
        sys.stdout.write(text + '\n')
        return
    os.makedirs(out_dir, exist_ok=True)
    name = os.path.splitext(os.path.basename(args.config))[0]
    path = os.path.join(out_dir, f"{name}_sim.json")
    with open(path, 'w') as json_file:
        json_file.write(text)
    say(f"  wrote {path}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    out_dir = args.out or os.environ.get(OUT_ENV)
    # progress stays off stdout when the tables are written there
    say = functools.partial(print, file=sys.stdout if out_dir else sys.stderr)

    try:
        if args.command == 'codes':
            table = ResultTable('codes', ['name', 'n', 'k', 'w', 'l', 'm', 'A', 'B', 'provenance'])
            for code in registry():
                summary = code.summary()
                table.add({column: summary[column] for column in table.columns})
            _write_tables([table], [], out_dir, say)
        elif args.command == 'run':
            say(f"Loading experiment from '{args.spec}'...")
            _run_spec(load_spec(args.spec), args, out_dir, say)
        elif args.command == 'table':
            path = find_spec(args.number)
            say(f"Loading experiment from '{path}'...")
            _run_spec(load_spec(path), args, out_dir, say)
        elif args.command == 'simulate':
            _simulate(args, out_dir, say)
        elif args.command == 'features':
            spec = ExperimentSpec({'name': f"features_p{args.p:g}", 'table': 'features',
                                   'code': args.code, 'sweep': {'p': [args.p]},
                                   'shots': args.shots, 'seed': args.seed})
            args.shots, args.shots_scale, args.seed = None, 1.0, None
            _run_spec(spec, args, out_dir, say)
    except (ExperimentError, CodeError, FeatureError, ValueError, OSError, yaml.YAMLError) as err:
        print(f"Error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
