import json
import logging

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naqjs.hardware import (
    ERROR_CAP, MEAN_R_2Q, Calibration, CouplingGraph, HardwareModel,
    builtin_topology, distance_matrix, scale_noise,
)

from conftest import path_hw, uniform_hw


def test_builtin_sizes():
    ring = builtin_topology("ring16")
    chain = builtin_topology("chain16")
    grid = builtin_topology("grid66")
    assert ring.num_qubits == 16 and chain.num_qubits == 16
    assert grid.num_qubits == 66
    assert len(chain.graph.edges) == len(ring.graph.edges) - 1
    assert not chain.graph.has_edge(1, 4) and ring.graph.has_edge(1, 4)
    assert ring.graph.is_connected() and chain.graph.is_connected() and grid.graph.is_connected()


def test_builtin_unknown():
    with pytest.raises(ValueError):
        builtin_topology("falcon27")


def test_builtin_calibration_is_seeded_and_jittered():
    a, b = builtin_topology("ring16", 3), builtin_topology("ring16", 3)
    assert a.cal == b.cal
    rs = np.array(list(a.cal.r_2q.values()))
    assert rs.std() > 0
    assert np.all(np.abs((1 - rs) / (1 - MEAN_R_2Q) - 1) <= 0.2 + 1e-12)
    assert all(t2 <= 2 * t1 for t1, t2 in zip(a.cal.t1_us, a.cal.t2_us))


def test_chain_shares_ring_calibration():
    ring, chain = builtin_topology("ring16", 5), builtin_topology("chain16", 5)
    assert chain.cal.r_1q == ring.cal.r_1q
    assert all(chain.cal.r_2q[e] == ring.cal.r_2q[e] for e in chain.graph.edges)


def test_disconnected_graph_warns(caplog):
    with caplog.at_level(logging.WARNING):
        CouplingGraph(4, [(0, 1), (2, 3)])
    assert "connected" in caplog.text


def test_graph_rejects_self_loop_and_range():
    with pytest.raises(ValueError):
        CouplingGraph(3, [(1, 1)])
    with pytest.raises(ValueError):
        CouplingGraph(3, [(0, 3)])


def test_calibration_validation():
    g = CouplingGraph(2, [(0, 1)])
    with pytest.raises(ValueError):
        Calibration((1.0, 1.0), {(0, 1): 1.2}, (1.0, 1.0), (10, 10), (5, 5))
    with pytest.raises(ValueError):
        Calibration((1.0, 1.0), {(0, 1): 0.9}, (1.0, 1.0), (10, 10), (25, 5))
    cal = Calibration((1.0, 1.0), {}, (1.0, 1.0), (10, 10), (5, 5))
    with pytest.raises(ValueError):
        HardwareModel(g, cal, "missing-edge")


def test_scale_noise_examples():
    hw = uniform_hw(CouplingGraph(3, [(0, 1), (1, 2)]), r_2q=0.97, r_ro=0.94)
    assert scale_noise(hw, 1) is hw
    assert scale_noise(hw, 2).r_2q(0, 1) == pytest.approx(0.94)
    assert scale_noise(hw, 0.5).cal.r_ro[0] == pytest.approx(0.97)
    assert scale_noise(hw, 2).cal.t1_us == hw.cal.t1_us


def test_scale_noise_caps_and_warns(caplog):
    hw = uniform_hw(CouplingGraph(2, [(0, 1)]), r_ro=0.9)
    with caplog.at_level(logging.WARNING):
        out = scale_noise(hw, 100)
    assert out.cal.r_ro[0] == pytest.approx(1 - ERROR_CAP)
    assert "clamped" in caplog.text
    with pytest.raises(ValueError):
        scale_noise(hw, 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3))
def test_scale_noise_composes(a, b):
    hw = builtin_topology("ring16", 1)
    two = scale_noise(scale_noise(hw, a), b)
    one = scale_noise(hw, a * b)
    if a <= 1 and a * b <= 1:  # no clamping anywhere on this path
        np.testing.assert_allclose(two.cal.r_ro, one.cal.r_ro, rtol=1e-12)
        np.testing.assert_allclose(list(two.cal.r_2q.values()), list(one.cal.r_2q.values()), rtol=1e-12)


def test_distance_examples():
    hw = path_hw([0.9, 0.99])
    hops = distance_matrix(hw)
    assert hops[0, 1] == 1 and hops[0, 2] == 2
    assert distance_matrix(hw, noise_aware=True)[0, 2] == pytest.approx(3.1)


def test_distance_disconnected_is_inf():
    g = CouplingGraph(4, [(0, 1), (2, 3)])
    d = distance_matrix(uniform_hw(g))
    assert np.isinf(d[0, 3])


@st.composite
def random_graphs(draw):
    n = draw(st.integers(2, 12))
    seed = draw(st.integers(0, 2**31))
    g = nx.gnp_random_graph(n, 0.4, seed=seed)
    for i in range(n - 1):  # keep it connected
        if not nx.has_path(g, i, i + 1):
            g.add_edge(i, i + 1)
    return n, sorted(tuple(sorted(e)) for e in g.edges), seed


@settings(max_examples=50, deadline=None)
@given(random_graphs(), st.booleans())
def test_distance_metric_properties(spec, noise_aware):
    n, edges, seed = spec
    rng = np.random.default_rng(seed)
    graph = CouplingGraph(n, edges)
    cal = Calibration(
        (0.999,) * n, {e: float(rng.uniform(0.8, 1.0)) for e in edges}, (0.95,) * n, (30.0,) * n, (20.0,) * n,
    )
    d = distance_matrix(HardwareModel(graph, cal, "rand"), noise_aware)
    assert np.allclose(d, d.T)
    assert np.all(np.diag(d) == 0)
    # axes (i, j, k): d[i,k] <= d[i,j] + d[j,k]
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9)
    if not noise_aware:
        ref = dict(nx.all_pairs_shortest_path_length(nx.Graph(edges)))
        for i in range(n):
            for j in range(n):
                assert d[i, j] == ref[i][j]


def test_calibration_json_round_trip(tmp_path):
    hw = builtin_topology("ring16", 11)
    path = tmp_path / "cal.json"
    hw.save(path)
    data = json.loads(path.read_text())
    assert set(data) >= {"num_qubits", "edges", "r_1q", "r_2q", "r_ro", "t1_us", "t2_us", "durations_ns"}
    again = HardwareModel.load(path)
    assert again.cal == hw.cal and again.graph.edges == hw.graph.edges
