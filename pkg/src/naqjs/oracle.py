"""Small-scale reference checks: statevector simulation and exhaustive search.

Amplitude index convention: qubit 0 is the least significant bit.
"""
from __future__ import annotations

import itertools
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, GateKind, GateOp, RZ, SX, ensure_measured, expand_composites
from .fidelity import epst_star
from .hardware import HardwareModel
from .mapper import RoutedCircuit, RoutingContext, route

MAX_QUBITS = 12
MAX_BRUTE_FORCE = 6
PHASE_TOL = 1e-9

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    # Tensor axis 0 is the most significant qubit (n - 1).
    axis = n - 1 - q
    psi = np.tensordot(u, psi, axes=([1], [axis]))
    return np.moveaxis(psi, 0, axis)


def _index(n: int, fixed: Mapping[int, int]):
    idx = [slice(None)] * n
    for q, v in fixed.items():
        idx[n - 1 - q] = v
    return tuple(idx)


def _apply(psi: np.ndarray, g: GateOp, n: int) -> np.ndarray:
    k = g.kind
    if k is GateKind.X:
        return _apply_1q(psi, _X, g.qubits[0], n)
    if k is GateKind.SX:
        return _apply_1q(psi, _SX, g.qubits[0], n)
    if k is GateKind.RZ:
        return _apply_1q(psi, _rz(g.theta), g.qubits[0], n)
    if k is GateKind.CX:
        c, t = g.qubits
        out = psi.copy()
        out[_index(n, {c: 1, t: 0})] = psi[_index(n, {c: 1, t: 1})]
        out[_index(n, {c: 1, t: 1})] = psi[_index(n, {c: 1, t: 0})]
        return out
    if k is GateKind.CZ:
        a, b = g.qubits
        out = psi.copy()
        out[_index(n, {a: 1, b: 1})] *= -1
        return out
    if k is GateKind.SWAP:
        a, b = g.qubits
        out = psi.copy()
        out[_index(n, {a: 0, b: 1})] = psi[_index(n, {a: 1, b: 0})]
        out[_index(n, {a: 1, b: 0})] = psi[_index(n, {a: 0, b: 1})]
        return out
    if k is GateKind.BRIDGE:
        # Its net action is CX(control, target); the middle qubit is untouched.
        c, _, t = g.qubits
        return _apply(psi, GateOp(GateKind.CX, (c, t)), n)
    # MEASURE and BARRIER leave the pre-measurement state alone.
    return psi


def simulate_state(c: Circuit, initial: np.ndarray | None = None) -> np.ndarray:
    """Pre-measurement statevector of ``c`` starting from |0...0> (or ``initial``)."""
    n = c.n
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the simulator limit of {MAX_QUBITS}")
    if initial is None:
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.asarray(initial, dtype=complex).copy()
    psi = psi.reshape((2,) * n) if n else psi
    for g in c.gates:
        psi = _apply(psi, g, n)
    return psi.reshape(-1)


def same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = PHASE_TOL) -> bool:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return na == nb
    return abs(np.vdot(a, b)) / (na * nb) >= 1 - tol


def permute_state(psi: np.ndarray, n: int, perm: Sequence[int]) -> np.ndarray:
    """Move qubit ``i`` of ``psi`` to position ``perm[i]``."""
    t = psi.reshape((2,) * n)
    # Axis a of t holds qubit n-1-a; it must land on axis n-1-perm[n-1-a].
    dest = [n - 1 - perm[n - 1 - a] for a in range(n)]
    return np.moveaxis(t, list(range(n)), dest).reshape(-1)


def _preparation(n: int, rng: np.random.Generator) -> list[GateOp]:
    gates = []
    for q in range(n):
        gates += [RZ(rng.uniform(0, 2 * np.pi), q), SX(q), RZ(rng.uniform(0, 2 * np.pi), q)]
    return gates


def equivalent_under_permutation(
    original: Circuit,
    routed: RoutedCircuit,
    trials: int = 3,
    seed: int = 0,
    tol: float = PHASE_TOL,
) -> bool:
    """Whether ``routed`` implements ``original`` up to its final qubit permutation.

    The comparison runs from several random product states (prepared with
    RZ/SX layers) as well as from |0...0>, on the compacted partition qubits.
    """
    n = original.n
    if len(routed.initial_mapping) != n:
        raise ValueError(f"width mismatch: original {n}, routed mapping {len(routed.initial_mapping)}")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the simulator limit of {MAX_QUBITS}")
    physical = sorted(set(routed.initial_mapping.values()) | routed.circuit.used_qubits())
    if len(physical) != n:
        return False
    compact = {p: i for i, p in enumerate(physical)}
    start = [compact[routed.initial_mapping[l]] for l in range(n)]
    end = [compact[routed.final_mapping[l]] for l in range(n)]
    body = Circuit(n, tuple(g.relabel(compact) for g in expand_composites(routed.circuit).gates))

    rng = np.random.default_rng(seed)
    for trial in range(trials + 1):
        prep = _preparation(n, rng) if trial else []
        psi = simulate_state(Circuit(n, tuple(prep) + original.gates))
        phys_prep = Circuit(n, tuple(g.relabel(start) for g in prep))
        phi = simulate_state(body, simulate_state(phys_prep))
        if not same_up_to_phase(phi, permute_state(psi, n, end), tol):
            return False
    return True


def brute_force_mapping_argmax(
    circuit: Circuit,
    partition: Sequence[int],
    hw: HardwareModel,
    return_scores: bool = False,
):
    """Route every placement of ``circuit`` on ``partition``; keep the best EPST*.

    Ties go to the lexicographically smallest placement tuple.
    """
    if len(partition) > MAX_BRUTE_FORCE:
        raise ValueError(f"partition of {len(partition)} qubits is too large for exhaustive search")
    circuit = ensure_measured(circuit)
    ctx = RoutingContext(hw, partition)
    best, best_score = None, -1.0
    scores = []
    for placement in itertools.permutations(sorted(partition), circuit.n):
        mapping = dict(enumerate(placement))
        score = epst_star(route(circuit, partition, mapping, hw, ctx).circuit, mapping, hw).epst_star
        scores.append(score)
        if score > best_score:
            best, best_score = mapping, score
    if return_scores:
        return best, best_score, scores
    return best
