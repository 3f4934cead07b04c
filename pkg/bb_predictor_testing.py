"""Tests for the mod-w predictor, features and classifier statistics"""

import itertools
from math import comb

import numpy as np
import pytest

from bb_codes import get_code
from bb_gf2 import BitVec
from bb_noise import ErrorSample, syndrome_for, syndrome_of_errors
from bb_predictor import (FeatureError, auc, binary_auc, classifier_report, cluster_analysis,
                          combined_score, detector_adjacency, extract_features, feature_aucs,
                          fit_power_law, has_weight2_cluster, measurement_fp_bound,
                          predict_convergence)
from bb_report_utils import DecodeRecord


@pytest.fixture(scope='module')
def gross():
    return get_code('gross')


def record(defects, converged, w=3, shot=0):
    return DecodeRecord(shot=shot, code='gross', decoder='bp_osd', schedule='parallel',
                        defect_count=defects, mod_w_class=defects % w,
                        mod_w_zero=defects % w == 0,
                        path='BP_ONLY' if converged else 'BP_OSD',
                        converged=converged, iterations=1, valid=True)


def data_only(code, qubits):
    return ErrorSample(BitVec.from_indices(qubits, code.n),
                       np.zeros((0, code.n_checks), dtype=np.uint8))


@pytest.mark.parametrize('defects, expected', [(0, True), (3, True), (4, False), (5, False), (6, True)])
def test_predict_convergence(gross, defects, expected):
    bits = np.zeros(72, dtype=np.uint8)
    bits[:defects] = 1
    assert predict_convergence(syndrome_for(gross, bits)) is expected


def test_predict_other_weights(gross):
    syndrome = syndrome_of_errors(gross, [0, 50])
    assert predict_convergence(syndrome, w=2) == (syndrome.defect_count % 2 == 0)
    with pytest.raises(ValueError):
        predict_convergence(syndrome, w=1)


def test_single_error_features(gross):
    syndrome = syndrome_of_errors(gross, [10])
    features = extract_features(gross, syndrome)
    assert features.defect_count == 3
    assert features.mod_w_zero
    assert features.max_component == 3
    assert features.position_variance == pytest.approx(np.var(syndrome.defects().astype(float)))


def test_separated_errors_give_two_components(gross):
    adjacency = detector_adjacency(gross)
    col_rows = gross.hz.col_rows
    far = next((q1, q2) for q1, q2 in itertools.combinations(range(gross.n), 2)
               if not adjacency[np.ix_(col_rows[q1], col_rows[q2])].any()
               and not set(col_rows[q1]) & set(col_rows[q2]))
    features = extract_features(gross, syndrome_of_errors(gross, far))
    assert features.defect_count == 6
    assert features.max_component == 3


def test_trivial_syndrome_has_no_features(gross):
    with pytest.raises(FeatureError):
        extract_features(gross, syndrome_for(gross, [0] * 72))


def test_auc_values():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auc([1, 1, 1, 1], [0, 1, 0, 1]) == 0.5
    # midranks: ties between classes count one half
    assert auc([1, 2, 2, 3], [0, 1, 0, 1]) == pytest.approx(0.875)


def test_auc_needs_both_classes():
    with pytest.raises(FeatureError):
        auc([0.1, 0.2], [1, 1])
    with pytest.raises(FeatureError):
        auc([0.1, 0.2, 0.3], [1, 0])


def test_binary_auc_matches_rank_auc():
    rng = np.random.default_rng(4)
    scores = rng.integers(0, 2, 200)
    labels = rng.integers(0, 2, 200).astype(bool)
    tp = int(np.sum((scores == 1) & labels))
    fp = int(np.sum((scores == 1) & ~labels))
    tn = int(np.sum((scores == 0) & ~labels))
    fn = int(np.sum((scores == 0) & labels))
    assert auc(scores, labels) == pytest.approx(binary_auc(tp, fp, tn, fn))


def test_classifier_report_counts():
    records = [record(0, True),
               record(3, True), record(3, True), record(6, False),
               record(4, False), record(5, True), record(1, False)]
    report = classifier_report(records, 'mod_w')
    assert (report.tp, report.fp, report.tn, report.fn) == (2, 1, 2, 1)
    assert report.total == 6
    assert report.fp_rate == pytest.approx(1 / 3)
    assert report.fn_rate == pytest.approx(1 / 3)
    assert report.auc == pytest.approx(binary_auc(2, 1, 2, 1))
    nontrivial = records[1:]
    assert report.auc == pytest.approx(auc([r.mod_w_zero for r in nontrivial],
                                           [r.converged for r in nontrivial]))

    threshold = classifier_report(records, 'threshold:3')
    assert threshold.rule == 'threshold:3'
    assert (threshold.tp, threshold.fp) == (2, 1)


def test_classifier_report_empty_cells():
    report = classifier_report([record(4, False), record(5, False)], 'mod_w')
    assert report.fp_rate is None
    assert report.fn_rate == 0.0
    assert report.auc is None
    with pytest.raises(FeatureError):
        classifier_report([], 'threshold')
    with pytest.raises(FeatureError):
        classifier_report([], 'majority')


def test_combined_score_keeps_mod_w_first():
    records = [record(12, True), record(3, True), record(4, False), record(1, False)]
    scores = combined_score(records)
    assert min(scores[:2]) > max(scores[2:])
    aucs = feature_aucs(records)
    assert aucs['mod_w_zero'] == 1.0
    assert aucs['mod_w_plus_defect_count'] == 1.0


def test_power_law_fit():
    ps = [0.0005, 0.001, 0.002, 0.005]
    fit = fit_power_law([(p, 3.0 * p ** 2) for p in ps] + [(0.0001, 0.0)])
    assert fit.alpha == pytest.approx(2.0)
    assert fit.prefactor == pytest.approx(3.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.excluded == ((0.0001, 0.0),)
    with pytest.raises(FeatureError):
        fit_power_law([(0.001, 0.1), (0.002, 0.2), (0.003, 0.0)])
    with pytest.raises(FeatureError):
        fit_power_law([(0.0, 0.1), (0.002, 0.2), (0.003, 0.3)])


def test_measurement_bound():
    p = 0.001
    assert measurement_fp_bound(360, 3, p) == pytest.approx(comb(360, 3) * p ** 3 * (1 - p) ** 357)
    assert measurement_fp_bound(10, 3, 0.0) == 0.0


def test_cluster_detection(gross):
    check = gross.hz.col_rows[0][0]
    partner = next(q for q in gross.hz.row_cols[check] if q != 0)
    lonely = next(q for q in range(gross.n)
                  if not set(gross.hz.col_rows[q]) & set(gross.hz.col_rows[0]))
    assert has_weight2_cluster(gross, data_only(gross, [0, partner]))
    assert not has_weight2_cluster(gross, data_only(gross, [0, lonely]))
    assert not has_weight2_cluster(gross, data_only(gross, [0]))

    failures = [(data_only(gross, [0, partner]), None),
                (data_only(gross, [0, lonely]), None),
                (data_only(gross, [0, partner, lonely]), None)]
    report = cluster_analysis(gross, failures)
    assert report.total == 3
    assert report.with_cluster == 2
    assert report.fraction == pytest.approx(2 / 3)
    assert report.by_weight[2] == [2, 1]
    assert report.weight_fraction(3) == 1.0
    assert report.weight_fraction(7) is None
    assert cluster_analysis(gross, []).fraction is None
