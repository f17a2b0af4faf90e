"""Initial placement and SWAP/BRIDGE routing inside a partition.

The router is a SABRE-style lookahead search. Distances come from the
noise-weighted shortest paths of the partition subgraph, so a detour over
reliable couplers can beat a short path over a bad one. Each candidate
insertion also pays for its own CX errors, and a CX that is exactly two hops
away may be executed in place with a BRIDGE instead of moving qubits.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuit import (
    BRIDGE,
    SWAP,
    Circuit,
    GateKind,
    GateOp,
    build_dag,
    ensure_measured,
    expand_composites,
    reverse_circuit,
)
from .fidelity import epst_plain, epst_star
from .hardware import NOISE_DISTANCE_WEIGHT, HardwareModel, distance_matrix, edge_key

logger = logging.getLogger(__name__)

EXTENDED_SET_SIZE = 20
EXTENDED_SET_WEIGHT = 0.5
DECAY_STEP = 0.001
DECAY_RESET = 5
DEFAULT_REPEATS = 3


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RoutedCircuit:
    circuit: Circuit
    initial_mapping: dict[int, int]
    final_mapping: dict[int, int]
    swaps: int = 0
    bridges: int = 0
    partition: tuple[int, ...] = ()

    @property
    def inserted(self) -> dict[str, int]:
        return {"swap": self.swaps, "bridge": self.bridges}


def check_mapping(mapping: Mapping[int, int], width: int, partition: Sequence[int]) -> None:
    if sorted(mapping) != list(range(width)):
        raise ValueError(f"mapping keys {sorted(mapping)} do not cover logical qubits 0..{width - 1}")
    image = list(mapping.values())
    if len(set(image)) != len(image):
        raise ValueError("mapping is not injective")
    if not set(image) <= set(partition):
        raise ValueError(f"mapping image {sorted(image)} leaves partition {sorted(partition)}")


class RoutingContext:
    """Distance tables and coupler errors for one partition, shared across routing calls."""

    def __init__(self, hw: HardwareModel, partition: Sequence[int], noise_aware: bool = True,
                 lam: float = NOISE_DISTANCE_WEIGHT):
        self.hw = hw
        self.partition = tuple(partition)
        part = set(self.partition)
        self.adjacency = {p: sorted(j for j in hw.graph.neighbors(p) if j in part) for p in self.partition}
        self.edges = sorted(
            edge_key(a, b) for a in self.partition for b in self.adjacency[a] if a < b
        )
        self.error = {e: 1.0 - hw.r_2q(*e) for e in self.edges}
        order = list(self.partition)
        hops = distance_matrix(hw, False, qubits=order)
        dist = distance_matrix(hw, noise_aware, lam, qubits=order) if noise_aware else hops
        if np.isinf(hops).any():
            raise RoutingError(f"partition {sorted(self.partition)} is not connected")
        n = hw.num_qubits
        # Dense tables indexed by physical qubit; cells outside the partition stay unused.
        self.dist = [[0.0] * n for _ in range(n)]
        self.hops = [[0] * n for _ in range(n)]
        for i, a in enumerate(order):
            row_d, row_h = self.dist[a], self.hops[a]
            for j, b in enumerate(order):
                row_d[b] = float(dist[i, j])
                row_h[b] = int(hops[i, j])

    def next_hop(self, a: int, b: int) -> int:
        """Neighbour of ``a`` on a shortest noise-weighted path towards ``b``."""
        best, best_d = -1, float("inf")
        for nb in self.adjacency[a]:
            d = self.dist[a][nb] + self.dist[nb][b]
            if d < best_d - 1e-12:
                best, best_d = nb, d
        return best


def route(
    circuit: Circuit,
    partition: Sequence[int],
    initial: Mapping[int, int],
    hw: HardwareModel,
    ctx: RoutingContext | None = None,
    allow_bridge: bool = True,
) -> RoutedCircuit:
    """Legalize ``circuit`` on ``partition`` starting from ``initial``.

    The returned circuit acts on physical qubits (width = device size) and
    keeps inserted SWAP/BRIDGE gates unexpanded.
    """
    check_mapping(initial, circuit.n, partition)
    if ctx is None:
        ctx = RoutingContext(hw, partition)
    circuit = expand_composites(circuit)
    gates = circuit.gates
    dag = build_dag(circuit)
    succ = dag.successors
    indeg = dag.in_degrees()
    is2q = [g.kind is GateKind.CX or g.kind is GateKind.CZ for g in gates]

    l2p = [0] * circuit.n
    for l, p in initial.items():
        l2p[l] = p
    p2l = {p: l for l, p in enumerate(l2p)}
    dist, hops, adjacency, error = ctx.dist, ctx.hops, ctx.adjacency, ctx.error
    decay = {p: 1.0 for p in ctx.partition}

    out: list[GateOp] = []
    front = [i for i, d in enumerate(indeg) if d == 0]
    n_swaps = n_bridges = 0
    since_reset = 0
    stalled = 0
    stall_limit = 3 * len(ctx.partition) + 10

    def h(i, mapping) -> float:
        # Adjacent gates cost their own CX error; the rest their noise distance.
        a, b = gates[i].qubits
        pa, pb = mapping[a], mapping[b]
        if hops[pa][pb] == 1:
            return error[(pa, pb) if pa < pb else (pb, pa)]
        return dist[pa][pb]

    def complete(i, ready):
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)

    while front:
        # Emit everything that is legal under the current mapping.
        executed = True
        while executed:
            executed = False
            pending = []
            for i in front:
                g = gates[i]
                if is2q[i]:
                    a, b = g.qubits
                    if hops[l2p[a]][l2p[b]] != 1:
                        pending.append(i)
                        continue
                    stalled = 0
                out.append(g.relabel(l2p))
                complete(i, pending)
                executed = True
            front = pending
        if not front:
            break
        front.sort()

        if stalled >= stall_limit:
            i = front[0]
            a, b = gates[i].qubits
            pa, pb = l2p[a], l2p[b]
            nxt = ctx.next_hop(pa, pb)
            logger.debug("router stalled; forcing SWAP(%d,%d) toward %d", pa, nxt, pb)
            choice = ("swap", edge_key(pa, nxt), None)
        else:
            choice = _select_insertion(front, gates, succ, is2q, l2p, p2l, ctx, decay, h, allow_bridge)

        kind, (x, y), bridged = choice
        since_reset += 1
        if kind == "swap":
            out.append(SWAP(x, y))
            lx, ly = p2l.get(x), p2l.get(y)
            if lx is not None:
                l2p[lx] = y
            if ly is not None:
                l2p[ly] = x
            p2l = {p: l for l, p in enumerate(l2p)}
            decay[x] += DECAY_STEP
            decay[y] += DECAY_STEP
            n_swaps += 1
            stalled += 1
        else:
            i, middle = bridged
            c, t = gates[i].qubits
            out.append(BRIDGE(l2p[c], middle, l2p[t]))
            front.remove(i)
            complete(i, front)
            n_bridges += 1
            stalled = 0
        if since_reset >= DECAY_RESET:
            since_reset = 0
            for p in decay:
                decay[p] = 1.0

    routed = Circuit(hw.num_qubits, tuple(out))
    final = {l: p for l, p in enumerate(l2p)}
    return RoutedCircuit(routed, dict(initial), final, n_swaps, n_bridges, tuple(ctx.partition))


def _extended_set(front, succ, is2q) -> list[int]:
    ext: list[int] = []
    seen = set(front)
    queue = deque(front)
    while queue and len(ext) < EXTENDED_SET_SIZE:
        u = queue.popleft()
        for v in succ[u]:
            if v in seen:
                continue
            seen.add(v)
            queue.append(v)
            if is2q[v]:
                ext.append(v)
                if len(ext) >= EXTENDED_SET_SIZE:
                    break
    return ext


def _select_insertion(front, gates, succ, is2q, l2p, p2l, ctx, decay, h, allow_bridge):
    """Cheapest SWAP or BRIDGE for the current front layer.

    Returns ``(kind, edge, bridged)`` where ``bridged`` is ``(gate index,
    middle qubit)`` for a BRIDGE.
    """
    ext = _extended_set(front, succ, is2q)
    n_ext = len(ext)
    error = ctx.error

    swap_edges = set()
    for i in front:
        for l in gates[i].qubits:
            p = l2p[l]
            for nb in ctx.adjacency[p]:
                swap_edges.add(edge_key(p, nb))

    best_cost = float("inf")
    best = None
    for x, y in sorted(swap_edges):
        lx, ly = p2l.get(x), p2l.get(y)
        trial = l2p.copy()
        if lx is not None:
            trial[lx] = y
        if ly is not None:
            trial[ly] = x
        cost = sum(h(i, trial) for i in front)
        if n_ext:
            cost += EXTENDED_SET_WEIGHT * sum(h(i, trial) for i in ext) / n_ext
        cost = max(decay[x], decay[y]) * cost + 3 * error[(x, y)]
        if cost < best_cost - 1e-12:
            best_cost, best = cost, ("swap", (x, y), None)

    if allow_bridge:
        ext_cost = EXTENDED_SET_WEIGHT * sum(h(i, l2p) for i in ext) / n_ext if n_ext else 0.0
        front_costs = {i: h(i, l2p) for i in front}
        total_front = sum(front_costs.values())
        bridge_options = []
        for i in front:
            g = gates[i]
            if g.kind is not GateKind.CX:
                continue
            pc, pt = l2p[g.qubits[0]], l2p[g.qubits[1]]
            if ctx.hops[pc][pt] != 2:
                continue
            middles = [m for m in ctx.adjacency[pc] if pt in ctx.adjacency[m]]
            own, m = min((2 * error[edge_key(pc, m)] + 2 * error[edge_key(m, pt)], m) for m in middles)
            cost = total_front - front_costs[i] + ext_cost + own
            bridge_options.append((cost, edge_key(pc, pt), i, m))
        for cost, key, i, m in sorted(bridge_options):
            if cost <= best_cost + 1e-12:
                best_cost, best = cost, ("bridge", key, (i, m))
            break
    return best


# --------------------------------------------------------------------------
# Initial mapping

Scorer = Callable[[RoutedCircuit, HardwareModel], float]


def score_epst_star(routed: RoutedCircuit, hw: HardwareModel) -> float:
    return epst_star(routed.circuit, routed.initial_mapping, hw).epst_star


def score_epst_plain(routed: RoutedCircuit, hw: HardwareModel) -> float:
    return epst_plain(routed.circuit, routed.initial_mapping, hw)


SCORERS: dict[str, Scorer] = {"epst_star": score_epst_star, "epst_plain": score_epst_plain}


@dataclass(frozen=True)
class MappingResult:
    mapping: dict[int, int]
    routed: RoutedCircuit
    score: float
    candidates: tuple[float, ...] = field(default=(), repr=False)


def map_circuit(
    circuit: Circuit,
    partition: Sequence[int],
    hw: HardwareModel,
    repeats: int = DEFAULT_REPEATS,
    rng: np.random.Generator | int | None = None,
    scorer: Scorer | str = score_epst_star,
    ctx: RoutingContext | None = None,
) -> MappingResult:
    """Noise-aware initial mapping by repeated forward/reverse traversal.

    Each repeat draws a random placement, scores it, then refreshes it by
    routing the circuit forward and the reversed circuit back from the
    resulting final mapping, and scores the refreshed start as well. The
    start whose routed circuit scores best is kept (first one on ties).
    Returns the mapping together with its routed circuit.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if isinstance(scorer, str):
        scorer = SCORERS[scorer]
    rng = np.random.default_rng(rng)
    circuit = ensure_measured(circuit)
    if circuit.n != len(partition):
        raise ValueError(f"width-{circuit.n} circuit on a {len(partition)}-qubit partition")
    if ctx is None:
        ctx = RoutingContext(hw, partition)
    reversed_c = reverse_circuit(circuit)

    best_score = 0.0
    best_mapping: dict[int, int] | None = None
    best_routed: RoutedCircuit | None = None
    scores = []
    for _ in range(repeats):
        perm = rng.permutation(len(partition))
        start = {l: partition[int(perm[l])] for l in range(circuit.n)}
        routed = route(circuit, partition, start, hw, ctx)
        for refresh in (False, True):
            if refresh:
                start = route(reversed_c, partition, routed.final_mapping, hw, ctx).final_mapping
                routed = route(circuit, partition, start, hw, ctx)
            score = scorer(routed, hw)
            scores.append(score)
            if best_mapping is None:
                best_mapping = start
            if score > best_score:
                best_score, best_mapping, best_routed = score, start, routed
    if best_routed is None:
        best_routed = route(circuit, partition, best_mapping, hw, ctx)
    return MappingResult(dict(best_mapping), best_routed, best_score, tuple(scores))


def initial_mapping(
    circuit: Circuit,
    partition: Sequence[int],
    hw: HardwareModel,
    repeats: int = DEFAULT_REPEATS,
    rng: np.random.Generator | int | None = None,
) -> dict[int, int]:
    return map_circuit(circuit, partition, hw, repeats, rng).mapping


def routed_to_dict(routed: RoutedCircuit, original: Circuit | None = None) -> dict:
    from .circuit import circuit_to_dict

    out = {
        "routed": circuit_to_dict(routed.circuit),
        "initial_mapping": {str(k): v for k, v in routed.initial_mapping.items()},
        "final_mapping": {str(k): v for k, v in routed.final_mapping.items()},
        "swaps": routed.swaps,
        "bridges": routed.bridges,
        "partition": list(routed.partition),
    }
    if original is not None:
        out["original"] = circuit_to_dict(original)
    return out


def routed_from_dict(data: Mapping) -> tuple[RoutedCircuit, Circuit | None]:
    from .circuit import circuit_from_dict

    routed = RoutedCircuit(
        circuit_from_dict(data["routed"]),
        {int(k): int(v) for k, v in data["initial_mapping"].items()},
        {int(k): int(v) for k, v in data["final_mapping"].items()},
        int(data.get("swaps", 0)),
        int(data.get("bridges", 0)),
        tuple(data.get("partition", sorted(data["initial_mapping"].values()))),
    )
    original = circuit_from_dict(data["original"]) if "original" in data else None
    return routed, original
