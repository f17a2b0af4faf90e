"""Job streams: synthetic generation and JSONL I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import CX, MEASURE, RZ, SX, X, Circuit, Job, circuit_from_dict, circuit_to_dict, load_circuit


@dataclass(frozen=True)
class CircuitProfile:
    """Target statistics for synthesized circuits."""

    min_width: int = 3
    max_width: int = 16
    width_scale: float = 3.0
    gate_median: float = 58.0
    gate_sigma: float = 0.7
    min_gates: int = 7
    max_gates: int = 391
    two_qubit_fraction: float = 0.37
    max_depth: int = 99


PROFILES = {
    # shot range, circuit statistics
    "noise-model": ((1000, 20000), CircuitProfile()),
    "device": ((500, 10000), CircuitProfile(width_scale=3.7, gate_median=58.0, gate_sigma=0.5,
                                            min_gates=19, max_gates=111, two_qubit_fraction=0.2)),
}


@dataclass(frozen=True)
class Workload:
    initial_jobs: tuple[Job, ...]
    arrivals: tuple[Job, ...]
    seed: int | None = None

    @property
    def jobs(self) -> list[Job]:
        return list(self.initial_jobs) + list(self.arrivals)

    def __len__(self):
        return len(self.initial_jobs) + len(self.arrivals)


def synthesize_circuit(rng: np.random.Generator, profile: CircuitProfile = CircuitProfile()) -> Circuit:
    """Random circuit in the supported basis with mostly short-range CX pairs."""
    width = int(np.clip(profile.min_width + round(rng.exponential(profile.width_scale)),
                        profile.min_width, profile.max_width))
    n_gates = int(np.clip(round(rng.lognormal(math.log(profile.gate_median), profile.gate_sigma)),
                          profile.min_gates, profile.max_gates))
    gates = []
    level = [0] * width
    for _ in range(n_gates):
        if rng.random() < profile.two_qubit_fraction:
            a = int(rng.integers(width))
            step = int(rng.geometric(0.6))
            b = a + step if rng.random() < 0.5 else a - step
            if not 0 <= b < width:
                b = 2 * a - b
            b = min(max(b, 0), width - 1)
            if b == a:
                b = a + 1 if a + 1 < width else a - 1
            if rng.random() < 0.5:
                a, b = b, a
            top = max(level[a], level[b]) + 1
            if top > profile.max_depth:
                break
            level[a] = level[b] = top
            gates.append(CX(a, b))
        else:
            q = int(rng.integers(width))
            if level[q] + 1 > profile.max_depth:
                break
            level[q] += 1
            kind = rng.integers(3)
            gates.append(X(q) if kind == 0 else SX(q) if kind == 1 else RZ(float(rng.uniform(-math.pi, math.pi)), q))
    gates += [MEASURE(q) for q in range(width)]
    return Circuit(width, tuple(gates))


def synthesize_corpus(size: int, rng: np.random.Generator, profile: CircuitProfile = CircuitProfile()) -> list[Circuit]:
    return [synthesize_circuit(rng, profile) for _ in range(size)]


def generate_workload(
    seed: int = 0,
    initial: int = 44,
    arrivals: int = 400,
    profile: str = "noise-model",
    corpus: Sequence[Circuit] | None = None,
    corpus_size: int = 77,
    shots: tuple[int, int] | None = None,
) -> Workload:
    """Initial jobs at t=0 followed by arrivals spaced 0 or 1 s apart.

    Circuits are drawn uniformly from ``corpus``; when none is given a corpus
    of ``corpus_size`` circuits is synthesized from the same seed.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r} (expected one of {sorted(PROFILES)})")
    (lo, hi), circuit_profile = PROFILES[profile]
    if shots is not None:
        lo, hi = shots
    if lo < 1 or hi < lo:
        raise ValueError(f"bad shot range [{lo}, {hi}]")
    if initial < 0 or arrivals < 0:
        raise ValueError("job counts must be non-negative")
    rng = np.random.default_rng(seed)
    if corpus is None:
        if corpus_size < 1:
            raise ValueError("empty corpus and synthesis disabled")
        corpus = synthesize_corpus(corpus_size, rng, circuit_profile)
    elif not corpus:
        raise ValueError("empty corpus")

    def make(i: int, t: float) -> Job:
        c = corpus[int(rng.integers(len(corpus)))]
        return Job(f"j{i:05d}", c, int(rng.integers(lo, hi + 1)), t)

    first = [make(i, 0.0) for i in range(initial)]
    later = []
    t = 0.0
    for i in range(initial, initial + arrivals):
        t += float(rng.integers(2))
        later.append(make(i, t))
    return Workload(tuple(first), tuple(later), seed)


# --------------------------------------------------------------------------
# JSONL


def job_to_dict(job: Job) -> dict:
    return {"id": job.id, "circuit": circuit_to_dict(job.circuit), "shots": job.shots, "t": job.submit_time}


def write_workload(workload: Workload | Sequence[Job], path) -> None:
    jobs = workload.jobs if isinstance(workload, Workload) else list(workload)
    with open(path, "w") as fh:
        for job in jobs:
            fh.write(json.dumps(job_to_dict(job)) + "\n")


def read_workload(path) -> Workload:
    """Load a JSONL job stream; ``circuit`` may be inline JSON or a file path."""
    path = Path(path)
    jobs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                circ = rec["circuit"]
                if isinstance(circ, str):
                    ref = Path(circ)
                    circuit = load_circuit(ref if ref.is_absolute() else path.parent / ref)
                else:
                    circuit = circuit_from_dict(circ)
                jobs.append(Job(str(rec["id"]), circuit, rec["shots"], float(rec.get("t", 0.0))))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad job record ({exc})") from None
    jobs.sort(key=lambda j: (j.submit_time))
    initial = tuple(j for j in jobs if j.submit_time == 0)
    later = tuple(j for j in jobs if j.submit_time > 0)
    return Workload(initial, later)
