# bb_noise.py
"""Error samples and syndromes under code-capacity and phenomenological noise"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from bb_codes import BASES
from bb_gf2 import BitVec, DimensionError, matvec

NOISE_KINDS = ('code_capacity_iid', 'code_capacity_fixed_weight', 'phenomenological')

# final_round: decode the last round's syndrome (one round of data and measurement flips)
# accumulated: decode data flips XORed over every round plus every round's measurement flips
READOUTS = ('final_round', 'accumulated')

NOISE_DEFAULTS = {
    'kind': 'phenomenological',
    'p': 0.001,
    'fixed_weight': None,
    'rounds': 5,
    'readout': 'final_round',
    'meas_p': None,
    'basis': 'Z_memory',
}


class NoiseSpec:
    def __init__(self, d=None):
        """Read noise parameters from a dictionary; missing keys take NOISE_DEFAULTS"""
        d = dict(d or {})
        unknown = set(d) - set(NOISE_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown noise parameter(s): {', '.join(sorted(unknown))}")
        params = dict(NOISE_DEFAULTS)
        params.update(d)

        self.kind = params['kind']
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind '{self.kind}' not in {NOISE_KINDS}")
        self.p = float(params['p'])
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"noise p={self.p} must satisfy 0 <= p < 0.5")
        self.rounds = int(params['rounds'])
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        self.readout = params['readout']
        if self.readout not in READOUTS:
            raise ValueError(f"readout '{self.readout}' not in {READOUTS}")
        meas_p = params['meas_p']
        self.meas_p = None if meas_p is None else float(meas_p)
        if self.meas_p is not None and not 0.0 <= self.meas_p < 0.5:
            raise ValueError(f"meas_p={self.meas_p} must satisfy 0 <= meas_p < 0.5")
        self.basis = params['basis']
        if self.basis not in BASES:
            raise ValueError(f"basis '{self.basis}' not in {BASES}")

        fixed_weight = params['fixed_weight']
        if self.kind == 'code_capacity_fixed_weight':
            if fixed_weight is None or int(fixed_weight) < 0:
                raise ValueError("code_capacity_fixed_weight needs fixed_weight >= 0")
            self.fixed_weight = int(fixed_weight)
        elif fixed_weight is not None:
            raise ValueError(f"fixed_weight is only valid with code_capacity_fixed_weight, not {self.kind}")
        else:
            self.fixed_weight = None

    def to_dict(self):
        return {
            'kind': self.kind,
            'p': self.p,
            'fixed_weight': self.fixed_weight,
            'rounds': self.rounds,
            'readout': self.readout,
            'meas_p': self.meas_p,
            'basis': self.basis,
        }

    @property
    def measurement_p(self):
        """flip probability of one syndrome measurement"""
        return self.p if self.meas_p is None else self.meas_p

    def replace(self, **changes):
        """copy with some parameters changed"""
        params = self.to_dict()
        params.update(changes)
        return NoiseSpec(params)

    def __repr__(self):
        return f"NoiseSpec({self.to_dict()})"


def shot_rng(seed, *keys):
    """independent generator for one shot: a hash of (seed, keys...)"""
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(k) for k in keys]))


@dataclass(frozen=True, eq=False)
class ErrorSample:
    """ground truth for one shot"""
    data_errors: BitVec
    meas_errors: np.ndarray  # decoded rounds x n_checks, uint8
    basis: str = 'Z_memory'

    @property
    def data_weight(self):
        return self.data_errors.popcount()

    @property
    def meas_count(self):
        """measurement flips over every round and check"""
        return int(self.meas_errors.sum())

    @property
    def meas_syndrome(self):
        """per-check XOR of the measurement flips over all rounds"""
        n_checks = self.meas_errors.shape[1]
        if self.meas_errors.shape[0] == 0:
            return BitVec.zeros(n_checks)
        return BitVec.from_bits(np.bitwise_xor.reduce(self.meas_errors, axis=0))


@dataclass(frozen=True)
class Syndrome:
    bits: BitVec
    w: int
    basis: str = 'Z_memory'
    defect_count: int = field(init=False)
    mod_w_class: int = field(init=False)

    def __post_init__(self):
        count = self.bits.popcount()
        object.__setattr__(self, 'defect_count', count)
        object.__setattr__(self, 'mod_w_class', count % self.w)

    @property
    def trivial(self):
        return self.defect_count == 0

    def defects(self):
        """check indices of the defects"""
        return self.bits.support()


def syndrome_for(code, bits, basis='Z_memory'):
    """wraps raw syndrome bits (BitVec or 0/1 sequence) for a code"""
    if not isinstance(bits, BitVec):
        bits = BitVec.from_bits(bits)
    if bits.length != code.n_checks:
        raise DimensionError(f"syndrome length {bits.length} != {code.n_checks} checks")
    return Syndrome(bits, code.w, basis)


def syndrome_of_errors(code, error_indices, basis='Z_memory'):
    """syndrome of data errors on the given qubits with perfect measurements"""
    errors = BitVec.from_indices(error_indices, code.n)
    return syndrome_for(code, matvec(code.check_matrix(basis), errors), basis)


def sample(code, spec, seed, shot=0, point=None):
    """draws one (ErrorSample, Syndrome) pair; identical inputs give identical bits

    point, when given, keys the stream of one sweep point so that points
    of a sweep never share shots.
    """
    rng = shot_rng(seed, shot) if point is None else shot_rng(seed, point, shot)
    check_matrix = code.check_matrix(spec.basis)
    n = code.n
    n_checks = code.n_checks

    if spec.kind == 'code_capacity_iid':
        data = (rng.random(n) < spec.p).astype(np.uint8)
        meas = np.zeros((0, n_checks), dtype=np.uint8)
    elif spec.kind == 'code_capacity_fixed_weight':
        data = np.zeros(n, dtype=np.uint8)
        data[rng.choice(n, size=spec.fixed_weight, replace=False)] = 1
        meas = np.zeros((0, n_checks), dtype=np.uint8)
    else:
        # both readouts draw every round, so they share one stream per shot
        flips = (rng.random((spec.rounds, n)) < spec.p).astype(np.uint8)
        meas = (rng.random((spec.rounds, n_checks)) < spec.measurement_p).astype(np.uint8)
        if spec.readout == 'accumulated':
            data = np.bitwise_xor.reduce(flips, axis=0)
        else:
            data = flips[-1]
            meas = meas[-1:].copy()

    meas.flags.writeable = False
    error_sample = ErrorSample(BitVec.from_bits(data), meas, spec.basis)
    bits = matvec(check_matrix, error_sample.data_errors) ^ error_sample.meas_syndrome
    return error_sample, Syndrome(bits, code.w, spec.basis)


class DefectTerms(NamedTuple):
    data_defects: int
    meas_defects: int
    overlap_correction: int


def defect_decomposition(code, error_sample):
    """splits defect_count into w·|e| + |m_syn| - 2·overlap_correction"""
    check_matrix = code.check_matrix(error_sample.basis)
    support = error_sample.data_errors.support()
    data_defects = int(check_matrix.column_weights()[support].sum())
    meas_bits = error_sample.meas_syndrome
    meas_defects = meas_bits.popcount()
    defect_count = (matvec(check_matrix, error_sample.data_errors) ^ meas_bits).popcount()
    cancelled = data_defects + meas_defects - defect_count
    assert cancelled >= 0 and cancelled % 2 == 0
    return DefectTerms(data_defects, meas_defects, cancelled // 2)
