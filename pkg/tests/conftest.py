import numpy as np
import pytest
from hypothesis import strategies as st

from naqjs.circuit import CX, CZ, RZ, SX, X, Circuit, MEASURE
from naqjs.hardware import Calibration, CouplingGraph, HardwareModel, builtin_topology, uniform_calibration


def random_circuit(rng: np.random.Generator, n: int, n_gates: int, two_qubit=0.4, cz=0.2, measure=False) -> Circuit:
    gates = []
    for _ in range(n_gates):
        r = rng.random()
        if n > 1 and r < two_qubit:
            a, b = (int(q) for q in rng.choice(n, 2, replace=False))
            gates.append(CZ(a, b) if rng.random() < cz else CX(a, b))
        else:
            q = int(rng.integers(n))
            k = rng.integers(3)
            gates.append(X(q) if k == 0 else SX(q) if k == 1 else RZ(float(rng.uniform(-np.pi, np.pi)), q))
    if measure:
        gates += [MEASURE(q) for q in range(n)]
    return Circuit(n, tuple(gates))


def path_hw(r_2q, r_ro=0.95, r_1q=0.999, t1=1e9, t2=1e9, name="path") -> HardwareModel:
    """Linear device 0-1-...; ``r_2q`` lists the edge reliabilities in order."""
    n = len(r_2q) + 1
    edges = [(i, i + 1) for i in range(n - 1)]
    cal = Calibration(
        r_1q=(r_1q,) * n,
        r_2q=dict(zip(edges, r_2q)),
        r_ro=(r_ro,) * n if np.isscalar(r_ro) else tuple(r_ro),
        t1_us=(t1,) * n,
        t2_us=(t2,) * n,
    )
    return HardwareModel(CouplingGraph(n, edges), cal, name)


def uniform_hw(graph: CouplingGraph, **kw) -> HardwareModel:
    return HardwareModel(graph, uniform_calibration(graph, **kw), "uniform")


@pytest.fixture(scope="session")
def ring16():
    return builtin_topology("ring16")


@st.composite
def circuits(draw, max_qubits=6, max_gates=30, min_qubits=1):
    n = draw(st.integers(min_qubits, max_qubits))
    seed = draw(st.integers(0, 2**32 - 1))
    g = draw(st.integers(0, max_gates))
    return random_circuit(np.random.default_rng(seed), n, g)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
