"""Queue rearranging and execution-round assembly."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Job, circuit_time, ensure_measured, expand_composites
from .fidelity import epst_star
from .hardware import HardwareModel
from .mapper import DEFAULT_REPEATS, RoutedCircuit, RoutingContext, map_circuit
from .partition import Partition, best_partition


@dataclass(frozen=True)
class SchedulerConfig:
    """Scheduler weights and limits.

    ``delta_t`` is the aging interval in seconds; ``math.inf`` turns aging
    off. ``eta`` caps the fraction of device qubits one round may occupy.
    """

    alpha: float = 6.0
    beta: float = 4.5
    gamma: float = 1.0
    eta: float = 5 / 6
    delta_t: float = 360.0
    repeats: int = DEFAULT_REPEATS
    seed: int = 0
    shot_time_us: float = 200.0
    overhead_s: float = 10.0
    scorer: str = "epst_star"

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("alpha, beta and gamma must be non-negative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.shot_time_us <= 0 or self.overhead_s <= 0:
            raise ValueError("shot time and overhead must be positive")
        if self.scorer not in ("epst_star", "epst_plain"):
            raise ValueError(f"unknown scorer {self.scorer!r}")

    @classmethod
    def from_mapping(cls, data: Mapping) -> SchedulerConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values = {}
        for k, v in data.items():
            if k == "eta" and isinstance(v, str):
                num, _, den = v.partition("/")
                v = float(num) / float(den or 1)
            elif k == "delta_t" and isinstance(v, str) and v.lower() in ("inf", "off", "none"):
                v = math.inf
            values[k] = v
        return cls(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class QueueStats:
    n_min: float
    n_max: float
    s_min: float
    s_max: float
    t_min: float
    t_max: float

    @classmethod
    def of(cls, jobs: Sequence[Job]) -> QueueStats:
        if not jobs:
            raise ValueError("empty queue")
        ns = [j.width for j in jobs]
        ss = [j.shots for j in jobs]
        ts = [j.submit_time for j in jobs]
        return cls(min(ns), max(ns), min(ss), max(ss), min(ts), max(ts))


def _minmax(x: float, lo: float, hi: float) -> float:
    return 0.0 if hi == lo else (x - lo) / (hi - lo)


def aging_bonus(job: Job, now: float, delta_t: float) -> int:
    if math.isinf(delta_t) or now <= job.submit_time:
        return 0
    return math.floor((now - job.submit_time) / delta_t)


def priority_score(job: Job, stats: QueueStats, cfg: SchedulerConfig, now: float) -> float:
    """Min-max normalized width/shots/submit-time penalty plus the aging bonus."""
    sn = _minmax(job.width, stats.n_min, stats.n_max)
    ss = _minmax(job.shots, stats.s_min, stats.s_max)
    st = _minmax(job.submit_time, stats.t_min, stats.t_max)
    return -cfg.alpha * sn - cfg.beta * ss - cfg.gamma * st + aging_bonus(job, now, cfg.delta_t)


def rearrange(queue: Sequence[Job], cfg: SchedulerConfig, now: float) -> list[Job]:
    """Sort by descending priority; ties by submit time, then job id."""
    if not queue:
        return []
    stats = QueueStats.of(queue)
    return sorted(queue, key=lambda j: (-priority_score(j, stats, cfg, now), j.submit_time, j.id))


def submission_order(queue: Iterable[Job]) -> list[Job]:
    return sorted(queue, key=lambda j: (j.submit_time, j.id))


@dataclass(frozen=True)
class Placement:
    job: Job
    partition: Partition
    routed: RoutedCircuit
    t_c_ns: float
    mapping_score: float


@dataclass
class ExecutionRound:
    selected: list[Placement] = field(default_factory=list)
    shots: int = 0
    start_time: float = 0.0
    end_time: float = 0.0
    index: int = 0
    t_c_ns: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.selected

    @property
    def width(self) -> int:
        return sum(p.job.width for p in self.selected)

    @property
    def job_ids(self) -> list[str]:
        return [p.job.id for p in self.selected]

    def epst(self, hw: HardwareModel) -> dict[str, float]:
        """EPST* per job with every circuit padded to the round's longest makespan."""
        return {
            p.job.id: epst_star(p.routed.circuit, p.routed.initial_mapping, hw, t_c=self.t_c_ns).epst_star
            for p in self.selected
        }


def job_rng(job: Job, seed: int) -> np.random.Generator:
    """Per-job generator so mapping results do not depend on scheduling order."""
    return np.random.default_rng([seed, zlib.crc32(job.id.encode())])


def place_job(
    job: Job,
    remaining: set[int],
    hw: HardwareModel,
    cfg: SchedulerConfig,
) -> Placement | None:
    circuit = ensure_measured(job.circuit)
    part = best_partition(circuit, remaining, hw)
    if part is None:
        return None
    result = map_circuit(circuit, part.qubits, hw, cfg.repeats, job_rng(job, cfg.seed), cfg.scorer)
    t_c = circuit_time(expand_composites(result.routed.circuit), hw.durations)
    return Placement(job, part, result.routed, t_c, result.score)


def assemble_round(
    sorted_queue: Sequence[Job],
    hw: HardwareModel,
    cfg: SchedulerConfig,
    now: float = 0.0,
    eta: float | None = None,
) -> tuple[ExecutionRound, list[Job]]:
    """Fill one round from ``sorted_queue`` under the qubit budget ``eta * N``.

    Jobs that do not fit the budget or find no partition on the qubits left
    over are skipped; the walk continues with the next job. Returns the round
    (possibly empty) and the skipped jobs. Placements are committed in queue
    order.
    """
    eta = cfg.eta if eta is None else eta
    budget = eta * hw.num_qubits
    remaining = set(range(hw.num_qubits))
    used = 0
    selected: list[Placement] = []
    skipped: list[Job] = []
    for job in sorted_queue:
        if used + job.width > budget + 1e-9 or job.width > len(remaining):
            skipped.append(job)
            continue
        placement = place_job(job, remaining, hw, cfg)
        if placement is None:
            skipped.append(job)
            continue
        selected.append(placement)
        used += job.width
        remaining.difference_update(placement.partition.qubits)
    rnd = ExecutionRound(selected, start_time=now)
    finalize_round(rnd, cfg)
    return rnd, skipped


def finalize_round(rnd: ExecutionRound, cfg: SchedulerConfig) -> ExecutionRound:
    """Set shots (max over jobs), end time and the aligned makespan."""
    if rnd.selected:
        rnd.shots = max(p.job.shots for p in rnd.selected)
        rnd.t_c_ns = max(p.t_c_ns for p in rnd.selected)
        rnd.end_time = rnd.start_time + rnd.shots * cfg.shot_time_us * 1e-6 + cfg.overhead_s
    else:
        rnd.shots = 0
        rnd.end_time = rnd.start_time
    return rnd
