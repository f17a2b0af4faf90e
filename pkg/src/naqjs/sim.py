"""Discrete-event replay of a job stream on one QPU."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import Job
from .hardware import HardwareModel
from .scheduler import (
    ExecutionRound,
    SchedulerConfig,
    assemble_round,
    rearrange,
    submission_order,
)
from .workload import Workload

logger = logging.getLogger(__name__)

POLICIES = ("FIFO", "FIFO-p", "NAQJS")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeModel:
    shot_time_us: float = 200.0
    overhead_s: float = 10.0

    def __post_init__(self):
        if self.shot_time_us <= 0 or self.overhead_s <= 0:
            raise ValueError("shot time and overhead must be positive")

    def execution_time(self, shots: int) -> float:
        return shots * self.shot_time_us * 1e-6


@dataclass
class JobRecord:
    id: str
    submit: float
    start: float
    complete: float
    width: int
    shots: int
    partition: tuple[int, ...]
    epst_star: float
    round: int

    @property
    def tat(self) -> float:
        return self.complete - self.submit


@dataclass
class RoundRecord:
    index: int
    start: float
    end: float
    shots: int
    job_ids: list[str]
    t_c_ns: float = 0.0


@dataclass
class RunReport:
    policy: str
    hardware: str
    qpu_time: float
    tat_max: float
    tat_avg: float
    tat_std: float
    trf: float
    estimated_pst_avg: float
    rounds: int
    scheduler_runtime: float
    per_job: list[JobRecord] = field(default_factory=list, repr=False)
    round_log: list[RoundRecord] = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict, repr=False)
    seed: int | None = None

    def summary(self) -> dict:
        return {
            "policy": self.policy,
            "hardware": self.hardware,
            "seed": self.seed,
            "qpu_time": self.qpu_time,
            "tat_max": self.tat_max,
            "tat_avg": self.tat_avg,
            "tat_std": self.tat_std,
            "trf": self.trf,
            "estimated_pst_avg": self.estimated_pst_avg,
            "rounds": self.rounds,
            "scheduler_runtime": self.scheduler_runtime,
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out["config"] = self.config
        out["round_log"] = [asdict(r) for r in self.round_log]
        out["per_job"] = [asdict(r) for r in self.per_job]
        return out

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    def write_csv(self, path) -> None:
        cols = ["id", "submit", "start", "complete", "tat", "width", "shots", "epst_star", "round"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.per_job:
                w.writerow([r.id, r.submit, r.start, r.complete, r.tat, r.width, r.shots, r.epst_star, r.round])

    def selection_trace(self) -> list[list[str]]:
        return [list(r.job_ids) for r in self.round_log]


def compute_metrics(records: Sequence[JobRecord], rounds: Sequence[RoundRecord],
                    time_model: TimeModel = TimeModel()) -> dict:
    """Aggregate time, trial and fidelity metrics over a finished run."""
    tats = np.array([r.complete - r.submit for r in records], dtype=float)
    trials_serial = sum(r.shots for r in records)
    trials_parallel = sum(r.shots for r in rounds)
    return {
        "qpu_time": sum(time_model.execution_time(r.shots) for r in rounds),
        "tat_max": float(tats.max()) if len(tats) else 0.0,
        "tat_avg": float(tats.mean()) if len(tats) else 0.0,
        "tat_std": float(tats.std()) if len(tats) else 0.0,
        "trf": trials_serial / trials_parallel if trials_parallel else 1.0,
        "estimated_pst_avg": float(np.mean([r.epst_star for r in records])) if len(records) else 0.0,
        "rounds": len(rounds),
    }


def _policy_name(policy: str) -> str:
    for p in POLICIES:
        if policy.lower() == p.lower():
            return p
    raise ValueError(f"unknown policy {policy!r} (expected one of {', '.join(POLICIES)})")


def select_round(policy: str, queue: Sequence[Job], hw: HardwareModel, cfg: SchedulerConfig,
                 now: float) -> ExecutionRound:
    """One scheduling decision for ``policy`` over the jobs currently queued."""
    if policy == "FIFO":
        head = submission_order(queue)[:1]
        return assemble_round(head, hw, cfg, now, eta=1.0)[0]
    if policy == "FIFO-p":
        return assemble_round(submission_order(queue), hw, cfg, now, eta=1.0)[0]
    ordered = rearrange(queue, cfg, now)
    if ordered and ordered[0].width > cfg.eta * hw.num_qubits + 1e-9:
        # A top-priority job wider than the round budget runs by itself.
        return assemble_round(ordered[:1], hw, cfg, now, eta=1.0)[0]
    return assemble_round(ordered, hw, cfg, now)[0]


def simulate(
    workload: Workload | Sequence[Job],
    hw: HardwareModel,
    policy: str,
    cfg: SchedulerConfig = SchedulerConfig(),
    time_model: TimeModel | None = None,
) -> RunReport:
    """Replay ``workload`` under ``policy`` and collect per-job and aggregate metrics.

    Scheduling work takes no simulated time; its wall-clock cost is reported
    as ``scheduler_runtime``.
    """
    policy = _policy_name(policy)
    if time_model is None:
        time_model = TimeModel(cfg.shot_time_us, cfg.overhead_s)
    else:
        cfg = replace(cfg, shot_time_us=time_model.shot_time_us, overhead_s=time_model.overhead_s)
    jobs = workload.jobs if isinstance(workload, Workload) else list(workload)
    ids = [j.id for j in jobs]
    if len(set(ids)) != len(ids):
        raise SimulationError("duplicate job ids in workload")
    for j in jobs:
        if j.width > hw.num_qubits:
            raise SimulationError(f"job {j.id} needs {j.width} qubits; {hw.name} has {hw.num_qubits}")

    pending = deque(sorted(jobs, key=lambda j: (j.submit_time, j.id)))
    queue: list[Job] = []
    records: list[JobRecord] = []
    rounds: list[RoundRecord] = []
    now = 0.0
    runtime = 0.0
    while pending or queue:
        while pending and pending[0].submit_time <= now:
            queue.append(pending.popleft())
        if not queue:
            now = pending[0].submit_time
            continue
        t0 = time.perf_counter()
        rnd = select_round(policy, queue, hw, cfg, now)
        epst = rnd.epst(hw) if not rnd.empty else {}
        runtime += time.perf_counter() - t0
        if rnd.empty:
            if pending:
                now = pending[0].submit_time
                continue
            stuck = ", ".join(j.id for j in queue[:5])
            raise SimulationError(f"no queued job fits on {hw.name}: {stuck}")
        rnd.index = len(rounds)
        rounds.append(RoundRecord(rnd.index, rnd.start_time, rnd.end_time, rnd.shots, rnd.job_ids, rnd.t_c_ns))
        for p in rnd.selected:
            records.append(JobRecord(
                p.job.id, p.job.submit_time, rnd.start_time, rnd.end_time, p.job.width,
                p.job.shots, tuple(sorted(p.partition.qubits)), epst[p.job.id], rnd.index,
            ))
        chosen = set(rnd.job_ids)
        queue = [j for j in queue if j.id not in chosen]
        if rnd.end_time <= now:  # pragma: no cover - guarded by positive overhead
            raise SimulationError("simulation clock failed to advance")
        now = rnd.end_time
        logger.debug("%s round %d: t=%.1f shots=%d jobs=%s", policy, rnd.index, rnd.start_time,
                     rnd.shots, rnd.job_ids)

    metrics = compute_metrics(records, rounds, time_model)
    return RunReport(
        policy=policy,
        hardware=hw.name,
        scheduler_runtime=runtime,
        per_job=records,
        round_log=rounds,
        config=cfg.to_dict(),
        seed=workload.seed if isinstance(workload, Workload) else None,
        **metrics,
    )


def replay_metrics(report: RunReport) -> dict:
    """Recompute aggregate metrics from a report's own logs."""
    cfg = report.config
    tm = TimeModel(cfg.get("shot_time_us", 200.0), cfg.get("overhead_s", 10.0))
    return compute_metrics(report.per_job, report.round_log, tm)
