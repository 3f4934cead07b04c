# bb_bp.py
"""Min-sum belief propagation on a code's Tanner graph, plus the Relay-BP ensemble"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from bb_gf2 import BitVec, DimensionError
from bb_noise import shot_rng

SCHEDULES = ('parallel', 'serial', 'serial_relative')
RELAY_CARRY = ('posterior', 'restart')

# messages and priors are clipped to +-LLR_CLIP
LLR_CLIP = 50.0

BP_DEFAULTS = {
    'max_iter': 100,
    'schedule': 'parallel',
    'ms_scaling': 1.0,
    'channel_p': None,
}

RELAY_DEFAULTS = {
    'num_relays': 10,
    'iters_per_relay': 20,
    'scaling_low': 0.5,
    'scaling_high': 1.0,
    'seed': 0,
    'relay_carry': 'posterior',
    'schedule': 'parallel',
    'channel_p': None,
}


def _merge(defaults, d, what):
    d = dict(d or {})
    unknown = set(d) - set(defaults)
    if unknown:
        raise ValueError(f"unknown {what} parameter(s): {', '.join(sorted(unknown))}")
    params = dict(defaults)
    params.update(d)
    return params


def _channel_p(value):
    if value is None:
        return None
    value = float(value)
    if not 0.0 < value < 0.5:
        raise ValueError(f"channel_p={value} must lie in (0, 0.5)")
    return value


class BPConfig:
    def __init__(self, d=None):
        """Read BP parameters from a dictionary; missing keys take BP_DEFAULTS"""
        params = _merge(BP_DEFAULTS, d, 'BP')
        self.max_iter = int(params['max_iter'])
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        self.schedule = params['schedule']
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule '{self.schedule}' not in {SCHEDULES}")
        self.ms_scaling = float(params['ms_scaling'])
        if not 0.0 < self.ms_scaling <= 1.0:
            raise ValueError(f"ms_scaling={self.ms_scaling} must lie in (0, 1]")
        self.channel_p = _channel_p(params['channel_p'])

    def to_dict(self):
        return {
            'max_iter': self.max_iter,
            'schedule': self.schedule,
            'ms_scaling': self.ms_scaling,
            'channel_p': self.channel_p,
        }

    def replace(self, **changes):
        params = self.to_dict()
        params.update(changes)
        return BPConfig(params)


class RelayConfig:
    def __init__(self, d=None):
        """Read Relay-BP parameters from a dictionary; missing keys take RELAY_DEFAULTS"""
        params = _merge(RELAY_DEFAULTS, d, 'relay')
        self.num_relays = int(params['num_relays'])
        self.iters_per_relay = int(params['iters_per_relay'])
        if self.num_relays < 1 or self.iters_per_relay < 1:
            raise ValueError("num_relays and iters_per_relay must be >= 1")
        self.scaling_low = float(params['scaling_low'])
        self.scaling_high = float(params['scaling_high'])
        if not 0.0 < self.scaling_low <= self.scaling_high <= 1.0:
            raise ValueError("need 0 < scaling_low <= scaling_high <= 1")
        self.seed = int(params['seed'])
        self.relay_carry = params['relay_carry']
        if self.relay_carry not in RELAY_CARRY:
            raise ValueError(f"relay_carry '{self.relay_carry}' not in {RELAY_CARRY}")
        self.schedule = params['schedule']
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule '{self.schedule}' not in {SCHEDULES}")
        self.channel_p = _channel_p(params['channel_p'])

    def to_dict(self):
        return {
            'num_relays': self.num_relays,
            'iters_per_relay': self.iters_per_relay,
            'scaling_low': self.scaling_low,
            'scaling_high': self.scaling_high,
            'seed': self.seed,
            'relay_carry': self.relay_carry,
            'schedule': self.schedule,
            'channel_p': self.channel_p,
        }

    def replace(self, **changes):
        params = self.to_dict()
        params.update(changes)
        return RelayConfig(params)


@dataclass(frozen=True, eq=False)
class BPResult:
    converged: bool
    iterations_used: int
    estimate: BitVec
    final_llrs: np.ndarray
    legs: int = 1


class TannerGraph:
    """Edge lists of a check matrix, padded for vectorised check and bit updates"""

    def __init__(self, check_matrix):
        self.n_checks, self.n_bits = check_matrix.shape
        self.check_bits = check_matrix.row_cols
        edge_check = np.concatenate(
            [np.full(len(bits), c, dtype=np.int64) for c, bits in enumerate(self.check_bits)])
        edge_bit = np.concatenate(self.check_bits).astype(np.int64)
        self.n_edges = edge_bit.size
        self.edge_bit = edge_bit
        self.edge_check = edge_check

        offsets = np.concatenate([[0], np.cumsum([len(bits) for bits in self.check_bits])])
        self.check_edges = tuple(np.arange(offsets[c], offsets[c + 1]) for c in range(self.n_checks))

        # sentinel edge n_edges carries a zero message / infinite magnitude
        self.check_edge_pad = _pad_rows(self.check_edges, self.n_edges)
        self.check_bit_pad = _pad_rows(self.check_bits, self.n_bits)
        bit_edges = [[] for _ in range(self.n_bits)]
        for edge, bit in enumerate(edge_bit):
            bit_edges[bit].append(edge)
        self.bit_edge_pad = _pad_rows(bit_edges, self.n_edges)

    def parity(self, hard):
        """H·hard for a 0/1 array"""
        padded = np.append(hard, 0).astype(np.uint8)
        return (padded[self.check_bit_pad].sum(axis=1) & 1).astype(np.uint8)


def _pad_rows(rows, fill):
    width = max((len(row) for row in rows), default=0)
    padded = np.full((len(rows), width), fill, dtype=np.int64)
    for i, row in enumerate(rows):
        padded[i, :len(row)] = row
    return padded


@lru_cache(maxsize=None)
def tanner_graph(code, basis='Z_memory'):
    return TannerGraph(code.check_matrix(basis))


def channel_llr(p):
    return float(np.log((1.0 - p) / p))


def _flooding_sweep(graph, prior, posterior, c2v, target, scaling):
    """one parallel update: every check reads messages from the previous sweep"""
    v2c = np.clip(posterior[graph.edge_bit] - c2v[:graph.n_edges], -LLR_CLIP, LLR_CLIP)
    v2c = np.append(v2c, np.inf)
    mag = np.abs(v2c)[graph.check_edge_pad]
    neg = (v2c < 0)[graph.check_edge_pad]

    rows = np.arange(mag.shape[0])
    first = np.argmin(mag, axis=1)
    min1 = mag[rows, first]
    mag[rows, first] = np.inf
    min2 = mag.min(axis=1)

    out_mag = np.where(np.arange(mag.shape[1])[None, :] == first[:, None],
                       min2[:, None], min1[:, None])
    out_mag = np.minimum(scaling * out_mag, LLR_CLIP)
    flip = ((neg.sum(axis=1) + target) & 1).astype(bool)
    out_neg = neg ^ flip[:, None]

    new_c2v = np.zeros(graph.n_edges + 1)
    new_c2v[graph.check_edge_pad] = np.where(out_neg, -out_mag, out_mag)
    new_c2v[graph.n_edges] = 0.0
    return prior + new_c2v[graph.bit_edge_pad].sum(axis=1), new_c2v


def _check_message(v2c, syndrome_bit, scaling):
    """min-sum outgoing messages of one check"""
    mag = np.abs(v2c)
    neg = v2c < 0
    if mag.size > 1:
        first = int(np.argmin(mag))
        min1, min2 = np.partition(mag, 1)[:2]
    else:
        first, min1, min2 = 0, mag[0], np.inf
    out_mag = np.full(mag.size, min1)
    out_mag[first] = min2
    out_mag = np.minimum(scaling * out_mag, LLR_CLIP)
    flip = bool((int(neg.sum()) + int(syndrome_bit)) & 1)
    return np.where(neg ^ flip, -out_mag, out_mag)


def _check_reliability(graph, posterior):
    padded = np.append(np.abs(posterior), np.inf)
    return padded[graph.check_bit_pad].min(axis=1)


def _serial_sweep(graph, posterior, c2v, target, scaling, order):
    """checks in `order`, each seeing the messages already updated this sweep"""
    for check in order:
        edges = graph.check_edges[check]
        bits = graph.check_bits[check]
        v2c = np.clip(posterior[bits] - c2v[edges], -LLR_CLIP, LLR_CLIP)
        out = _check_message(v2c, target[check], scaling)
        posterior[bits] = v2c + out
        c2v[edges] = out
    return posterior, c2v


def run_min_sum(graph, target, prior, max_iter, schedule='parallel', scaling=1.0):
    """min-sum BP from the given priors; returns a BPResult"""
    prior = np.clip(np.asarray(prior, dtype=float), -LLR_CLIP, LLR_CLIP)
    hard = (prior < 0).astype(np.uint8)
    if np.array_equal(graph.parity(hard), target):
        return BPResult(True, 0, BitVec.from_bits(hard), _readonly(prior))

    posterior = prior.copy()
    c2v = np.zeros(graph.n_edges + 1)
    natural = np.arange(graph.n_checks)
    for iteration in range(1, max_iter + 1):
        if schedule == 'parallel':
            posterior, c2v = _flooding_sweep(graph, prior, posterior, c2v, target, scaling)
        else:
            order = natural
            if schedule == 'serial_relative':
                order = np.argsort(_check_reliability(graph, posterior), kind='stable')
            posterior, c2v = _serial_sweep(graph, posterior, c2v, target, scaling, order)
        hard = (posterior < 0).astype(np.uint8)
        if np.array_equal(graph.parity(hard), target):
            return BPResult(True, iteration, BitVec.from_bits(hard), _readonly(posterior))
    return BPResult(False, max_iter, BitVec.from_bits(hard), _readonly(posterior))


def _readonly(array):
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


def decode_bp(code, syndrome, cfg, priors=None):
    """min-sum BP on the code's Tanner graph for the syndrome's basis

    Priors default to the channel LLR ln((1-p)/p) with p = cfg.channel_p.
    Hard decisions take bit = 1 only for strictly negative LLRs.
    """
    graph = tanner_graph(code, syndrome.basis)
    if syndrome.bits.length != graph.n_checks:
        raise DimensionError(f"syndrome length {syndrome.bits.length} != {graph.n_checks} checks")
    if priors is None:
        if cfg.channel_p is None:
            raise ValueError("decode_bp needs cfg.channel_p or explicit priors")
        priors = np.full(graph.n_bits, channel_llr(cfg.channel_p))
    elif len(priors) != graph.n_bits:
        raise DimensionError(f"{len(priors)} priors for {graph.n_bits} bits")
    target = syndrome.bits.to_array()
    return run_min_sum(graph, target, priors, cfg.max_iter, cfg.schedule, cfg.ms_scaling)


def decode_relay(code, syndrome, rcfg, rng=None):
    """sequential BP legs with random min-sum scaling; first convergent leg wins

    With relay_carry='posterior' each leg starts from the previous leg's
    posterior LLRs; with 'restart' every leg starts from the channel priors.
    """
    if rcfg.channel_p is None:
        raise ValueError("decode_relay needs rcfg.channel_p")
    if rng is None:
        rng = shot_rng(rcfg.seed)
    graph = tanner_graph(code, syndrome.basis)
    channel = np.full(graph.n_bits, channel_llr(rcfg.channel_p))
    priors = channel
    total = 0
    result = None
    for leg in range(1, rcfg.num_relays + 1):
        scaling = float(rng.uniform(rcfg.scaling_low, rcfg.scaling_high))
        cfg = BPConfig({'max_iter': rcfg.iters_per_relay, 'schedule': rcfg.schedule,
                        'ms_scaling': scaling, 'channel_p': rcfg.channel_p})
        result = decode_bp(code, syndrome, cfg, priors=priors)
        total += result.iterations_used
        if result.converged:
            return replace(result, iterations_used=total, legs=leg)
        if rcfg.relay_carry == 'posterior':
            priors = result.final_llrs
    return replace(result, iterations_used=total, legs=rcfg.num_relays)
