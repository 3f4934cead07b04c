# bb_predictor.py
"""mod-w convergence prediction, syndrome features and classifier statistics"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import linregress, rankdata

logger = logging.getLogger(__name__)

FEATURES = ('mod_w_zero', 'defect_count', 'max_component', 'position_variance')
COMBINED_FEATURE = 'mod_w_plus_defect_count'


class FeatureError(ValueError):
    """raised for inputs a statistic is undefined on"""


def predict_convergence(syndrome, w=None):
    """BP is predicted to converge iff defect_count mod w == 0"""
    w = syndrome.w if w is None else w
    if w < 2:
        raise ValueError(f"column weight w={w} must be >= 2")
    return syndrome.defect_count % w == 0


@dataclass(frozen=True)
class FeatureVector:
    defect_count: int
    mod_w_zero: bool
    max_component: int
    position_variance: float


@lru_cache(maxsize=None)
def detector_adjacency(code, basis='Z_memory'):
    """checks x checks: True where two checks share a data qubit"""
    dense = code.check_matrix(basis).to_dense().astype(np.int64)
    adjacency = (dense @ dense.T) > 0
    np.fill_diagonal(adjacency, False)
    adjacency.flags.writeable = False
    return adjacency


@lru_cache(maxsize=None)
def qubit_adjacency(code, basis='Z_memory'):
    """qubits x qubits: True where two data qubits share a check"""
    dense = code.check_matrix(basis).to_dense().astype(np.int64)
    adjacency = (dense.T @ dense) > 0
    np.fill_diagonal(adjacency, False)
    adjacency.flags.writeable = False
    return adjacency


def extract_features(code, syndrome):
    """the four per-syndrome features; the syndrome must be nontrivial"""
    defects = syndrome.defects()
    if defects.size == 0:
        raise FeatureError("features are only defined for nontrivial syndromes")
    adjacency = detector_adjacency(code, syndrome.basis)[np.ix_(defects, defects)]
    _, labels = connected_components(csr_matrix(adjacency), directed=False)
    return FeatureVector(
        defect_count=syndrome.defect_count,
        mod_w_zero=syndrome.mod_w_class == 0,
        max_component=int(np.bincount(labels).max()),
        position_variance=float(np.var(defects.astype(float))),
    )


def auc(scores, labels):
    """Mann-Whitney AUC with midranks: P(pos > neg) + 0.5 P(pos == neg)"""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise FeatureError(f"{scores.size} scores for {labels.size} labels")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise FeatureError("AUC needs both classes present")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def binary_auc(tp, fp, tn, fn):
    """closed form AUC of a binary score: (TPR + TNR) / 2"""
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp))


def parse_rule(rule):
    """'mod_w' or 'threshold:k' -> (name, predicate on a DecodeRecord)"""
    if rule == 'mod_w':
        return rule, lambda record: bool(record.mod_w_zero)
    if isinstance(rule, str) and rule.startswith('threshold'):
        digits = rule[len('threshold'):].strip(':()= ')
        try:
            limit = int(digits)
        except ValueError:
            raise FeatureError(f"bad threshold rule '{rule}', expected 'threshold:k'") from None
        return f"threshold:{limit}", lambda record: record.defect_count <= limit
    raise FeatureError(f"unknown rule '{rule}', expected 'mod_w' or 'threshold:k'")


@dataclass(frozen=True)
class ClassifierReport:
    rule: str
    tp: int
    fp: int
    tn: int
    fn: int
    auc: float = None

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def fp_rate(self):
        """P(BP fails | predicted converge); None for an empty cell"""
        predicted = self.tp + self.fp
        return self.fp / predicted if predicted else None

    @property
    def fn_rate(self):
        """P(BP converges | predicted fail); None for an empty cell"""
        predicted = self.fn + self.tn
        return self.fn / predicted if predicted else None

    def to_dict(self):
        return {
            'rule': self.rule, 'tp': self.tp, 'fp': self.fp, 'tn': self.tn, 'fn': self.fn,
            'fp_rate': self.fp_rate, 'fn_rate': self.fn_rate, 'auc': self.auc,
        }


def classifier_report(records, rule='mod_w'):
    """confusion counts of a pre-filter rule against BP convergence (nontrivial shots only)"""
    name, predict = parse_rule(rule)
    tp = fp = tn = fn = 0
    for record in records:
        if record.defect_count == 0:
            continue
        predicted = predict(record)
        if predicted and record.converged:
            tp += 1
        elif predicted:
            fp += 1
        elif record.converged:
            fn += 1
        else:
            tn += 1
    score = None
    if tp + fn and fp + tn:
        score = binary_auc(tp, fp, tn, fn)
    return ClassifierReport(name, tp, fp, tn, fn, score)


def feature_scores(records, feature):
    """score array of one feature (or the combined score) over records"""
    if feature == COMBINED_FEATURE:
        return combined_score(records)
    if feature not in FEATURES:
        raise FeatureError(f"unknown feature '{feature}'")
    return np.array([float(getattr(record, feature)) for record in records])


def combined_score(records):
    """2 * mod_w_zero + rank-normalised defect count (mod-w dominates, count breaks ties)"""
    counts = np.array([record.defect_count for record in records], dtype=float)
    if counts.size == 0:
        return counts
    mod_zero = np.array([float(record.mod_w_zero) for record in records])
    return 2.0 * mod_zero + rankdata(counts) / counts.size


def feature_aucs(records):
    """AUC of every feature as a classifier of BP convergence over nontrivial shots"""
    nontrivial = [record for record in records if record.defect_count > 0]
    labels = [record.converged for record in nontrivial]
    result = {}
    for feature in FEATURES + (COMBINED_FEATURE,):
        try:
            result[feature] = auc(feature_scores(nontrivial, feature), labels)
        except FeatureError:
            result[feature] = None
    return result


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    prefactor: float
    r_squared: float
    used: tuple
    excluded: tuple = ()


def fit_power_law(points):
    """least squares on (ln p, ln fp); zero-rate points are excluded and listed"""
    used = []
    excluded = []
    for p, fp_rate in points:
        if p is None or p <= 0:
            raise FeatureError(f"power-law fit needs positive p, got {p}")
        if fp_rate is None or fp_rate <= 0:
            excluded.append((p, fp_rate))
        else:
            used.append((float(p), float(fp_rate)))
    if excluded:
        logger.info("power-law fit: excluding %d zero-rate point(s): %s", len(excluded), excluded)
    if len(used) < 3:
        raise FeatureError(f"power-law fit needs >= 3 positive points, got {len(used)}")
    log_p = np.log([p for p, _ in used])
    log_fp = np.log([fp for _, fp in used])
    fit = linregress(log_p, log_fp)
    return PowerLawFit(float(fit.slope), float(np.exp(fit.intercept)), float(fit.rvalue ** 2),
                       tuple(used), tuple(excluded))


def measurement_fp_bound(n_meas, w, p):
    """leading term of P(|m| >= w) for measurement-error false positives"""
    return comb(n_meas, w) * p ** w * (1.0 - p) ** (n_meas - w)


def has_weight2_cluster(code, error_sample):
    """True when two data errors share at least one check"""
    support = error_sample.data_errors.support()
    if support.size < 2:
        return False
    return bool(qubit_adjacency(code, error_sample.basis)[np.ix_(support, support)].any())


@dataclass
class ClusterReport:
    total: int = 0
    with_cluster: int = 0
    by_weight: dict = field(default_factory=dict)  # |e| -> [failures, with_cluster]

    @property
    def fraction(self):
        return self.with_cluster / self.total if self.total else None

    def weight_fraction(self, weight):
        count, clustered = self.by_weight.get(weight, (0, 0))
        return clustered / count if count else None


def cluster_analysis(code, failures):
    """fraction of BP failures whose data errors contain a weight-2 cluster, by |e|"""
    report = ClusterReport()
    for error_sample, _ in failures:
        weight = error_sample.data_weight
        clustered = has_weight2_cluster(code, error_sample)
        report.total += 1
        report.with_cluster += int(clustered)
        cell = report.by_weight.setdefault(weight, [0, 0])
        cell[0] += 1
        cell[1] += int(clustered)
    return report
