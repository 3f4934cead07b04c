# bb_pipeline.py
"""Discrete-event simulation of a routed BP / BP+OSD decoder pipeline"""

import collections
import heapq
import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from bb_bp import BPConfig, decode_bp
from bb_codes import get_code
from bb_noise import NoiseSpec, sample, shot_rng
from bb_report_utils import read_records_csv

logger = logging.getLogger(__name__)

ROUTINGS = ('mod_w_prerouting', 'baseline_all_through_bp')
ARRIVALS = ('periodic', 'poisson')

# (bp_latency_converge, bp_osd_latency) in microseconds
REGIME_LATENCIES = {
    'code_capacity': (46.0, 108.0),
    'phenomenological': (100.0, 300.0),
}

PIPELINE_DEFAULTS = {
    'regime': 'phenomenological',
    'bp_latency_converge': None,
    'bp_osd_latency': None,
    'arrival_period': 100.0,
    'arrivals': 'periodic',
    'num_bp_workers': 1,
    'num_osd_workers': 1,
    'routing': 'mod_w_prerouting',
    'baseline_decodes_trivial': True,
    'code': 'gross',
    'noise': {'kind': 'phenomenological', 'p': 0.001},
    'bp': {},
    'trace': None,
    'histogram_bin': 50.0,
}

# seed keys of the poisson arrival stream, apart from the per-shot noise streams
ARRIVAL_STREAM = (0xA441, 0x5EED)

# event types
EV_ARRIVAL, EV_DONE = range(2)


class PipelineConfig:
    def __init__(self, d=None):
        """Read pipeline parameters from a dictionary; missing keys take PIPELINE_DEFAULTS

        Service times left as None come from the regime's latency pair.
        """
        d = dict(d or {})
        unknown = set(d) - set(PIPELINE_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown pipeline parameter(s): {', '.join(sorted(unknown))}")
        params = dict(PIPELINE_DEFAULTS)
        params.update(d)

        self.regime = params['regime']
        if self.regime not in REGIME_LATENCIES:
            raise ValueError(f"regime '{self.regime}' not in {tuple(REGIME_LATENCIES)}")
        converge, osd = REGIME_LATENCIES[self.regime]
        self.bp_latency_converge = float(params['bp_latency_converge'] or converge)
        self.bp_osd_latency = float(params['bp_osd_latency'] or osd)
        self.arrival_period = float(params['arrival_period'])
        self.histogram_bin = float(params['histogram_bin'])
        for name in ('bp_latency_converge', 'bp_osd_latency', 'arrival_period', 'histogram_bin'):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

        self.arrivals = params['arrivals']
        if self.arrivals not in ARRIVALS:
            raise ValueError(f"arrivals '{self.arrivals}' not in {ARRIVALS}")
        self.routing = params['routing']
        if self.routing not in ROUTINGS:
            raise ValueError(f"routing '{self.routing}' not in {ROUTINGS}")
        self.baseline_decodes_trivial = bool(params['baseline_decodes_trivial'])
        self.num_bp_workers = int(params['num_bp_workers'])
        self.num_osd_workers = int(params['num_osd_workers'])
        if self.num_bp_workers < 1 or self.num_osd_workers < 1:
            raise ValueError("worker counts must be >= 1")

        self.code = params['code']
        self.noise = NoiseSpec(params['noise'])
        bp = dict(params['bp'] or {})
        bp.setdefault('channel_p', self.noise.p or None)
        self.bp = BPConfig(bp)
        self.trace = params['trace']

    def to_dict(self):
        return {
            'regime': self.regime,
            'bp_latency_converge': self.bp_latency_converge,
            'bp_osd_latency': self.bp_osd_latency,
            'arrival_period': self.arrival_period,
            'arrivals': self.arrivals,
            'num_bp_workers': self.num_bp_workers,
            'num_osd_workers': self.num_osd_workers,
            'routing': self.routing,
            'baseline_decodes_trivial': self.baseline_decodes_trivial,
            'code': self.code,
            'noise': self.noise.to_dict(),
            'bp': self.bp.to_dict(),
            'trace': self.trace,
            'histogram_bin': self.histogram_bin,
        }

    def replace(self, **changes):
        params = self.to_dict()
        params.update(changes)
        return PipelineConfig(params)


class ShotLabel(NamedTuple):
    """what the router and the service time need to know about one shot"""
    trivial: bool
    mod_w_zero: bool
    converged: bool


def labels_from_records(records):
    return [ShotLabel(r.defect_count == 0, bool(r.mod_w_zero), bool(r.converged)) for r in records]


def labels_from_noise(code, noise, bp_cfg, shots, seed):
    """samples and BP-decodes a seeded shot stream"""
    labels = []
    for shot in range(shots):
        _, syndrome = sample(code, noise, seed, shot)
        if syndrome.trivial:
            labels.append(ShotLabel(True, True, True))
            continue
        converged = decode_bp(code, syndrome, bp_cfg).converged
        labels.append(ShotLabel(False, syndrome.mod_w_class == 0, converged))
    return labels


@dataclass
class SimReport:
    shots: int
    completed: int
    nontrivial: int
    trivial_decoded: int
    routed_bp: int
    routed_osd: int
    false_positives: int
    osd_fraction: float
    utilization: dict
    mean_queue_depth: dict
    max_queue_depth: dict
    mean_occupancy: dict
    mean_cost: float
    mean_latency: float
    max_latency: float
    makespan: float
    latency_histogram: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


class _Station:
    """a FIFO queue in front of a pool of identical workers"""

    def __init__(self, name, workers):
        self.name = name
        self.busy = [False] * workers
        self.busy_time = [0.0] * workers
        self.queue = collections.deque()
        self.depth_area = 0.0
        self.occupancy_area = 0.0
        self.max_depth = 0
        self.last_update = 0.0
        self.served = 0

    def free_worker(self):
        """lowest-index idle worker, or None"""
        for index, busy in enumerate(self.busy):
            if not busy:
                return index
        return None

    def account(self, now):
        """integrates the waiting line and the held syndromes (waiting plus in service) up to now"""
        self.depth_area += (now - self.last_update) * len(self.queue)
        self.occupancy_area += (now - self.last_update) * (len(self.queue) + sum(self.busy))
        self.last_update = now


def _arrival_times(cfg, shots, seed):
    if cfg.arrivals == 'periodic':
        return np.arange(shots, dtype=float) * cfg.arrival_period
    gaps = shot_rng(seed, *ARRIVAL_STREAM).exponential(cfg.arrival_period, size=shots)
    return np.concatenate(([0.0], np.cumsum(gaps[:-1]))) if shots else gaps


def _load_labels(cfg, shots, seed):
    if cfg.trace:
        labels = labels_from_records(read_records_csv(cfg.trace))
        if shots is not None and shots < len(labels):
            labels = labels[:shots]
        logger.info("pipeline: %d shot labels from trace %s", len(labels), cfg.trace)
        return labels
    return labels_from_noise(get_code(cfg.code), cfg.noise, cfg.bp, shots, seed)


def run_sim(cfg, shots=None, seed=0, labels=None):
    """routes every shot through the pipeline and reports queue and worker statistics

    labels, when given, replace the configured shot source.
    """
    if labels is None:
        labels = _load_labels(cfg, shots, seed)
    labels = list(labels)
    shots = len(labels)
    arrivals = _arrival_times(cfg, shots, seed)
    stations = {
        'bp': _Station('bp', cfg.num_bp_workers),
        'osd': _Station('osd', cfg.num_osd_workers),
    }

    events = []
    seq = 0

    def push(time, kind, payload):
        nonlocal seq
        heapq.heappush(events, (time, seq, kind, payload))
        seq += 1

    def start(station, now, shot, service):
        worker = station.free_worker()
        station.busy[worker] = True
        station.busy_time[worker] += service
        push(now + service, EV_DONE, (station.name, worker, shot))

    latency = np.zeros(shots)
    cost = np.zeros(shots)
    completed = 0
    nontrivial = trivial_decoded = routed_bp = routed_osd = false_positives = reached_osd = 0
    baseline = cfg.routing == 'baseline_all_through_bp'
    makespan = 0.0

    if shots:
        push(arrivals[0], EV_ARRIVAL, 0)
    while events:
        now, _, kind, payload = heapq.heappop(events)
        if kind == EV_ARRIVAL:
            shot = payload
            if shot + 1 < shots:
                push(arrivals[shot + 1], EV_ARRIVAL, shot + 1)
            label = labels[shot]
            if label.trivial and not (baseline and cfg.baseline_decodes_trivial):
                completed += 1
                makespan = max(makespan, now)
                continue
            if label.trivial:
                # no router: BP runs on the empty syndrome too
                station = stations['bp']
                service = cfg.bp_latency_converge
                trivial_decoded += 1
            elif not baseline and not label.mod_w_zero:
                nontrivial += 1
                station = stations['osd']
                service = cfg.bp_osd_latency
                routed_osd += 1
                reached_osd += 1
            else:
                nontrivial += 1
                station = stations['bp']
                routed_bp += 1
                if label.converged:
                    service = cfg.bp_latency_converge
                else:
                    # BP fails on this path: BP then OSD on the same worker
                    service = cfg.bp_osd_latency
                    reached_osd += 1
                    if not baseline:
                        false_positives += 1
            cost[shot] = service
            station.account(now)
            if station.free_worker() is not None:
                assert not station.queue
                start(station, now, shot, service)
            else:
                station.queue.append((shot, service))
                station.max_depth = max(station.max_depth, len(station.queue))
        else:
            name, worker, shot = payload
            station = stations[name]
            station.account(now)
            station.busy[worker] = False
            station.served += 1
            completed += 1
            latency[shot] = now - arrivals[shot]
            makespan = max(makespan, now)
            if station.queue:
                waiting, service = station.queue.popleft()
                start(station, now, waiting, service)

    assert completed == shots, f"{shots} shots in, {completed} completed"
    assert stations['bp'].served + stations['osd'].served == nontrivial + trivial_decoded

    if makespan > 0:
        for station in stations.values():
            station.account(makespan)
    utilization = {
        name: [min(1.0, busy / makespan) if makespan > 0 else 0.0 for busy in station.busy_time]
        for name, station in stations.items()
    }
    depth = {
        name: station.depth_area / makespan if makespan > 0 else 0.0
        for name, station in stations.items()
    }
    occupancy = {
        name: station.occupancy_area / makespan if makespan > 0 else 0.0
        for name, station in stations.items()
    }

    waited = latency[np.array([not label.trivial for label in labels], dtype=bool)]
    histogram = {'bin_width': cfg.histogram_bin, 'edges': [], 'counts': []}
    if waited.size:
        top = cfg.histogram_bin * (np.floor(waited.max() / cfg.histogram_bin) + 1)
        counts, edges = np.histogram(waited, bins=np.arange(0.0, top + cfg.histogram_bin / 2, cfg.histogram_bin))
        histogram['edges'] = edges.tolist()
        histogram['counts'] = counts.tolist()

    return SimReport(
        shots=shots,
        completed=completed,
        nontrivial=nontrivial,
        trivial_decoded=trivial_decoded,
        routed_bp=routed_bp,
        routed_osd=routed_osd,
        false_positives=false_positives,
        osd_fraction=reached_osd / nontrivial if nontrivial else 0.0,
        utilization=utilization,
        mean_queue_depth=depth,
        max_queue_depth={name: station.max_depth for name, station in stations.items()},
        mean_occupancy=occupancy,
        mean_cost=float(cost.mean()) if shots else 0.0,
        mean_latency=float(latency.mean()) if shots else 0.0,
        max_latency=float(latency.max()) if shots else 0.0,
        makespan=float(makespan),
        latency_histogram=histogram,
        config=cfg.to_dict(),
    )
