"""Device description: coupling graph plus calibration data."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

logger = logging.getLogger(__name__)

# Mean calibration of the 66-qubit reference device.
MEAN_R_1Q = 0.9985
MEAN_R_2Q = 0.9707
MEAN_R_RO = 0.9397
MEAN_T1_US = 27.35
MEAN_T2_US = 20.0
DEFAULT_DURATIONS_NS = {"1q": 50.0, "2q": 300.0, "measure": 1000.0}

JITTER = 0.2
ERROR_CAP = 0.75
NOISE_DISTANCE_WEIGHT = 10.0

# 16-qubit heavy-hex ring with four pendant qubits (0, 6, 9, 15).
RING16_EDGES = (
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7),
    (7, 10), (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14),
)


def edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class CouplingGraph:
    num_qubits: int
    edges: frozenset[tuple[int, int]]
    adjacency: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __init__(self, num_qubits: int, edges: Iterable[tuple[int, int]]):
        normalized = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < num_qubits and 0 <= b < num_qubits):
                raise ValueError(f"edge ({a}, {b}) out of range for {num_qubits} qubits")
            normalized.add(edge_key(a, b))
        adj: list[set[int]] = [set() for _ in range(num_qubits)]
        for a, b in normalized:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "edges", frozenset(normalized))
        object.__setattr__(self, "adjacency", tuple(frozenset(s) for s in adj))
        if num_qubits and not self.is_connected():
            logger.warning("coupling graph with %d qubits is not connected", num_qubits)

    def neighbors(self, q: int) -> frozenset[int]:
        return self.adjacency[q]

    def degree(self, q: int) -> int:
        return len(self.adjacency[q])

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    def is_connected(self, qubits: Iterable[int] | None = None) -> bool:
        nodes = set(range(self.num_qubits)) if qubits is None else set(qubits)
        if not nodes:
            return True
        start = next(iter(nodes))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen == nodes


@dataclass(frozen=True)
class Calibration:
    """Per-element reliabilities, coherence times (µs) and durations (ns)."""

    r_1q: tuple[float, ...]
    r_2q: Mapping[tuple[int, int], float]
    r_ro: tuple[float, ...]
    t1_us: tuple[float, ...]
    t2_us: tuple[float, ...]
    durations_ns: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_DURATIONS_NS))

    def __post_init__(self):
        object.__setattr__(self, "r_1q", tuple(float(r) for r in self.r_1q))
        object.__setattr__(self, "r_ro", tuple(float(r) for r in self.r_ro))
        object.__setattr__(self, "t1_us", tuple(float(t) for t in self.t1_us))
        object.__setattr__(self, "t2_us", tuple(float(t) for t in self.t2_us))
        object.__setattr__(self, "r_2q", {edge_key(*e): float(r) for e, r in self.r_2q.items()})
        for name in ("r_1q", "r_ro"):
            for r in getattr(self, name):
                if not 0 < r <= 1:
                    raise ValueError(f"{name} reliability {r} outside (0, 1]")
        for e, r in self.r_2q.items():
            if not 0 < r <= 1:
                raise ValueError(f"r_2q{e} reliability {r} outside (0, 1]")
        for t1, t2 in zip(self.t1_us, self.t2_us):
            if not (t1 > 0 and t2 > 0):
                raise ValueError("T1 and T2 must be positive")
            if t2 > 2 * t1:
                raise ValueError(f"T2={t2} exceeds 2*T1={2 * t1}")

    def edge_reliability(self, a: int, b: int) -> float:
        return self.r_2q[edge_key(a, b)]


@dataclass(frozen=True)
class HardwareModel:
    graph: CouplingGraph
    cal: Calibration
    name: str = "custom"

    def __post_init__(self):
        n = self.graph.num_qubits
        for attr in ("r_1q", "r_ro", "t1_us", "t2_us"):
            if len(getattr(self.cal, attr)) != n:
                raise ValueError(f"calibration {attr} has {len(getattr(self.cal, attr))} entries for {n} qubits")
        missing = self.graph.edges - set(self.cal.r_2q)
        if missing:
            raise ValueError(f"no r_2q for coupling edges {sorted(missing)}")

    @property
    def num_qubits(self) -> int:
        return self.graph.num_qubits

    @property
    def durations(self) -> Mapping[str, float]:
        return self.cal.durations_ns

    def r_2q(self, a: int, b: int) -> float:
        return self.cal.r_2q[edge_key(a, b)]

    # JSON ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "edges": [list(e) for e in sorted(self.graph.edges)],
            "r_1q": list(self.cal.r_1q),
            "r_2q": {f"{a}-{b}": r for (a, b), r in sorted(self.cal.r_2q.items())},
            "r_ro": list(self.cal.r_ro),
            "t1_us": list(self.cal.t1_us),
            "t2_us": list(self.cal.t2_us),
            "durations_ns": dict(self.cal.durations_ns),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> HardwareModel:
        r_2q = {}
        for key, r in data["r_2q"].items():
            a, b = key.split("-")
            r_2q[(int(a), int(b))] = r
        cal = Calibration(
            r_1q=data["r_1q"],
            r_2q=r_2q,
            r_ro=data["r_ro"],
            t1_us=data["t1_us"],
            t2_us=data["t2_us"],
            durations_ns=dict(data.get("durations_ns", DEFAULT_DURATIONS_NS)),
        )
        graph = CouplingGraph(data["num_qubits"], [tuple(e) for e in data["edges"]])
        return cls(graph, cal, data.get("name", "custom"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> HardwareModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


def jittered_calibration(graph: CouplingGraph, seed: int = 0, jitter: float = JITTER) -> Calibration:
    """Calibration around the reference means with uniform relative jitter.

    Jitter is applied to error rates (1 - r) and to T1/T2.
    """
    rng = np.random.default_rng(seed)
    n = graph.num_qubits
    edges = sorted(graph.edges)

    def spread(mean, size):
        return mean * rng.uniform(1 - jitter, 1 + jitter, size)

    r_1q = 1 - spread(1 - MEAN_R_1Q, n)
    r_2q = 1 - spread(1 - MEAN_R_2Q, len(edges))
    r_ro = 1 - spread(1 - MEAN_R_RO, n)
    t1 = spread(MEAN_T1_US, n)
    t2 = np.minimum(spread(MEAN_T2_US, n), 2 * t1)
    return Calibration(
        r_1q=tuple(r_1q.tolist()),
        r_2q={e: float(r) for e, r in zip(edges, r_2q)},
        r_ro=tuple(r_ro.tolist()),
        t1_us=tuple(t1.tolist()),
        t2_us=tuple(t2.tolist()),
    )


def uniform_calibration(
    graph: CouplingGraph,
    r_1q: float = MEAN_R_1Q,
    r_2q: float = MEAN_R_2Q,
    r_ro: float = MEAN_R_RO,
    t1_us: float = MEAN_T1_US,
    t2_us: float = MEAN_T2_US,
    durations_ns: Mapping[str, float] | None = None,
) -> Calibration:
    n = graph.num_qubits
    return Calibration(
        r_1q=(r_1q,) * n,
        r_2q={e: r_2q for e in graph.edges},
        r_ro=(r_ro,) * n,
        t1_us=(t1_us,) * n,
        t2_us=(t2_us,) * n,
        durations_ns=dict(durations_ns or DEFAULT_DURATIONS_NS),
    )


def grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return edges


def builtin_graph(name: str) -> CouplingGraph:
    if name == "ring16":
        return CouplingGraph(16, RING16_EDGES)
    if name == "chain16":
        return CouplingGraph(16, [e for e in RING16_EDGES if e != (1, 4)])
    if name == "grid66":
        # 6 x 11 square lattice; an approximation of the 66-qubit reference chip.
        return CouplingGraph(66, grid_edges(6, 11))
    raise ValueError(f"unknown topology {name!r} (expected ring16, chain16 or grid66)")


BUILTIN_TOPOLOGIES = ("ring16", "chain16", "grid66")


def builtin_topology(name: str, seed: int = 0) -> HardwareModel:
    """Built-in device with jittered default calibration.

    ``chain16`` shares its per-element calibration with ``ring16``: only the
    (1, 4) coupler is gone.
    """
    graph = builtin_graph(name)
    if name == "chain16":
        ring = builtin_topology("ring16", seed)
        cal = replace(ring.cal, r_2q={e: r for e, r in ring.cal.r_2q.items() if e != (1, 4)})
        return HardwareModel(graph, cal, name)
    return HardwareModel(graph, jittered_calibration(graph, seed), name)


def scale_noise(hw: HardwareModel, level: float, cap: float = ERROR_CAP) -> HardwareModel:
    """Multiply every gate and readout error rate by ``level``."""
    if level <= 0:
        raise ValueError("noise level must be positive")
    clamped = 0

    def scale(r: float) -> float:
        nonlocal clamped
        e = (1.0 - r) * level
        if e > cap:
            clamped += 1
            e = cap
        return 1.0 - e

    if level == 1:
        return hw
    cal = replace(
        hw.cal,
        r_1q=tuple(scale(r) for r in hw.cal.r_1q),
        r_2q={e: scale(r) for e, r in hw.cal.r_2q.items()},
        r_ro=tuple(scale(r) for r in hw.cal.r_ro),
    )
    if clamped:
        logger.warning("scale_noise(%g): %d error rate(s) clamped to %g", level, clamped, cap)
    return HardwareModel(hw.graph, cal, hw.name)


def _weights(hw: HardwareModel, qubits: list[int], noise_aware: bool, lam: float) -> csr_matrix:
    index = {q: i for i, q in enumerate(qubits)}
    rows, cols, vals = [], [], []
    for a, b in hw.graph.edges:
        if a in index and b in index:
            w = 1.0 + lam * (1.0 - hw.r_2q(a, b)) if noise_aware else 1.0
            rows += [index[a], index[b]]
            cols += [index[b], index[a]]
            vals += [w, w]
    n = len(qubits)
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def distance_matrix(
    hw: HardwareModel,
    noise_aware: bool = False,
    lam: float = NOISE_DISTANCE_WEIGHT,
    qubits: list[int] | None = None,
) -> np.ndarray:
    """All-pairs shortest-path distances.

    Hop counts when ``noise_aware`` is false; otherwise each edge weighs
    ``1 + lam * (1 - r_2q)``. When ``qubits`` is given, paths are restricted
    to the induced subgraph and the matrix is indexed in that order.
    Disconnected pairs get ``inf``.
    """
    if qubits is None:
        qubits = list(range(hw.num_qubits))
    if not qubits:
        return np.zeros((0, 0))
    w = _weights(hw, list(qubits), noise_aware, lam)
    return shortest_path(w, method="D", directed=False, unweighted=not noise_aware)


def components(hw: HardwareModel, qubits: list[int]) -> int:
    w = _weights(hw, qubits, False, 0.0)
    return connected_components(w, directed=False)[0]
