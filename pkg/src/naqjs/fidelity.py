"""Reliability estimates for circuits placed on a device."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Iterable, Mapping

from .circuit import Circuit, GateKind, ONE_QUBIT_GATES, circuit_time, expand_composites
from .hardware import HardwareModel, edge_key


@dataclass(frozen=True)
class FidelityReport:
    epst_star: float
    gate_1q: float
    gate_2q: float
    readout: float
    amplitude_damping: float
    phase_damping: float
    t_c_ns: float

    @property
    def factors(self) -> tuple[float, ...]:
        return (self.gate_1q, self.gate_2q, self.readout, self.amplitude_damping, self.phase_damping)


def pure_dephasing_time(t1: float, t2: float) -> float:
    """T_phi = T1*T2 / (2*T1 - T2), in the units of the inputs.

    Tends to T2/2 as T1 grows without bound; infinite when both are.
    """
    if math.isinf(t1):
        return math.inf if math.isinf(t2) else t2 / 2
    if 2 * t1 <= t2:
        raise ValueError(f"T2={t2} must be below 2*T1={2 * t1}")
    return t1 * t2 / (2 * t1 - t2)


def decoherence_factors(t_c_ns: float, t1_us: float, t2_us: float) -> tuple[float, float]:
    """(r_a, r_p): survival probabilities against amplitude and phase damping."""
    t_c_us = t_c_ns / 1000.0
    r_a = math.exp(-t_c_us / t1_us) if not math.isinf(t1_us) else 1.0
    t_phi = pure_dephasing_time(t1_us, t2_us)
    r_p = math.exp(-t_c_us / t_phi) if not math.isinf(t_phi) else 1.0
    return r_a, r_p


def _occupied(circuit: Circuit, mapping) -> list[int]:
    if mapping is None:
        return sorted(circuit.used_qubits())
    if isinstance(mapping, Mapping):
        return sorted(mapping.values())
    return sorted(mapping)


def epst_star(
    circuit: Circuit,
    mapping,
    hw: HardwareModel,
    t_c: float | None = None,
) -> FidelityReport:
    """Estimated probability of a successful trial for a routed circuit.

    ``circuit`` acts on physical qubits. ``mapping`` (logical -> physical, or
    any collection of physical qubits) names the qubits whose decoherence is
    charged; all of them idle for the full makespan ``t_c`` (ns). ``t_c`` is
    computed from the device durations unless given, which is how a longer
    co-scheduled round is accounted for.
    """
    c = expand_composites(circuit)
    cal = hw.cal
    g1 = g2 = 1.0
    measured = []
    for g in c.gates:
        k = g.kind
        if k in ONE_QUBIT_GATES:
            g1 *= cal.r_1q[g.qubits[0]]
        elif k is GateKind.CX or k is GateKind.CZ:
            key = edge_key(*g.qubits)
            try:
                g2 *= cal.r_2q[key]
            except KeyError:
                raise ValueError(f"no two-qubit reliability for edge {key}") from None
        elif k is GateKind.MEASURE:
            measured.append(g.qubits[0])
    occupied = _occupied(c, mapping)
    if not measured:
        measured = occupied
    ro = 1.0
    for q in measured:
        ro *= cal.r_ro[q]
    if t_c is None:
        t_c = circuit_time(c, hw.durations)
    ra = rp = 1.0
    for q in occupied:
        a, p = decoherence_factors(t_c, cal.t1_us[q], cal.t2_us[q])
        ra *= a
        rp *= p
    total = g1 * g2 * ro * ra * rp
    return FidelityReport(total, g1, g2, ro, ra, rp, float(t_c))


def epst_plain(circuit: Circuit, mapping, hw: HardwareModel) -> float:
    """Average-reliability variant: device means raised to the operation counts, no decoherence."""
    c = expand_composites(circuit)
    cal = hw.cal
    mean_1q = sum(cal.r_1q) / len(cal.r_1q)
    mean_2q = sum(cal.r_2q.values()) / len(cal.r_2q) if cal.r_2q else 1.0
    mean_ro = sum(cal.r_ro) / len(cal.r_ro)
    n_ro = c.count(GateKind.MEASURE) or len(_occupied(c, mapping))
    return mean_1q ** c.num_1q * mean_2q ** c.num_2q * mean_ro ** n_ro


def fidelity_score(partition: Collection[int], circuit: Circuit, hw: HardwareModel) -> float:
    """Partition score: -N_2q*(1 - mean r_2q) - N_ro*(1 - mean r_ro) over the partition."""
    qubits = set(partition)
    if len(qubits) != circuit.n:
        raise ValueError(f"partition has {len(qubits)} qubits for a width-{circuit.n} circuit")
    n_2q = circuit.num_2q
    n_ro = len(circuit.measured_qubits()) if circuit.n else 0
    internal = [r for (a, b), r in hw.cal.r_2q.items() if a in qubits and b in qubits and hw.graph.has_edge(a, b)]
    score = 0.0
    if n_2q:
        if not internal:
            return -math.inf
        score -= n_2q * (1 - sum(internal) / len(internal))
    if n_ro:
        score -= n_ro * (1 - sum(hw.cal.r_ro[q] for q in qubits) / len(qubits))
    return score


def fidelity_degree(q: int, remaining: Collection[int] | None, hw: HardwareModel) -> float:
    """2 * sum of r_2q to neighbours still in ``remaining`` plus the readout reliability."""
    total = 0.0
    for j in hw.graph.neighbors(q):
        if remaining is None or j in remaining:
            total += hw.r_2q(q, j)
    return 2 * total + hw.cal.r_ro[q]
