"""Allocate a connected region of free physical qubits to one circuit."""
from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Collection

from .circuit import Circuit
from .fidelity import fidelity_degree, fidelity_score
from .hardware import HardwareModel


@dataclass(frozen=True)
class Partition:
    qubits: tuple[int, ...]
    score: float
    starting_point: int

    def __len__(self):
        return len(self.qubits)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.qubits))


def _degree(q: int, remaining: AbstractSet[int], hw: HardwareModel) -> int:
    return sum(1 for j in hw.graph.neighbors(q) if j in remaining)


def starting_points(remaining: AbstractSet[int], circuit: Circuit, hw: HardwareModel) -> list[int]:
    """Free qubits whose free degree beats the circuit's largest logical degree.

    Falls back to the free qubits of maximal free degree when none does.
    """
    if not remaining:
        return []
    logical = circuit.max_logical_degree()
    degrees = {q: _degree(q, remaining, hw) for q in sorted(remaining)}
    points = [q for q, d in degrees.items() if d > logical]
    if points:
        return points
    top = max(degrees.values())
    return [q for q, d in degrees.items() if d == top]


def grow_partition(
    start: int,
    width: int,
    remaining: AbstractSet[int],
    hw: HardwareModel,
) -> list[int] | None:
    """Greedily add the free frontier qubit with the highest fidelity degree.

    Returns the qubits in insertion order, or ``None`` if the connected free
    region around ``start`` holds fewer than ``width`` qubits.
    """
    if start not in remaining or width < 1:
        return None
    chosen = [start]
    members = {start}
    frontier: set[int] = set()
    adj = hw.graph.adjacency
    degree_cache: dict[int, float] = {}
    while len(chosen) < width:
        frontier.update(j for j in adj[chosen[-1]] if j in remaining and j not in members)
        if not frontier:
            return None
        best, best_df = -1, -1.0
        for q in sorted(frontier):
            df = degree_cache.get(q)
            if df is None:
                df = degree_cache[q] = fidelity_degree(q, remaining, hw)
            if df > best_df:
                best, best_df = q, df
        chosen.append(best)
        members.add(best)
        frontier.discard(best)
    return chosen


def best_partition(
    circuit: Circuit,
    remaining: AbstractSet[int],
    hw: HardwareModel,
    candidates: list | None = None,
) -> Partition | None:
    """Highest-scoring grown partition over all starting points.

    Ties go to the lexicographically smallest sorted qubit set. If
    ``candidates`` is a list, every evaluated partition is appended to it.
    """
    width = circuit.n
    if width > len(remaining) or width == 0:
        return None
    best: Partition | None = None
    seen: set[tuple[int, ...]] = set()
    for start in starting_points(remaining, circuit, hw):
        qubits = grow_partition(start, width, remaining, hw)
        if qubits is None:
            continue
        key = tuple(sorted(qubits))
        if key in seen:
            continue
        seen.add(key)
        part = Partition(tuple(qubits), fidelity_score(key, circuit, hw), start)
        if candidates is not None:
            candidates.append(part)
        if best is None or part.score > best.score or (part.score == best.score and key < best.key):
            best = part
    return best
