import json

import numpy as np
import pytest

from naqjs.circuit import CX, MEASURE, Circuit, Job, serialize_circuit
from naqjs.hardware import builtin_topology
from naqjs.scheduler import SchedulerConfig
from naqjs.sim import (
    JobRecord, RoundRecord, SimulationError, TimeModel, compute_metrics, replay_metrics, simulate,
)
from naqjs.workload import PROFILES, generate_workload, read_workload, synthesize_corpus, write_workload


@pytest.fixture(scope="module")
def ring():
    return builtin_topology("ring16", 0)


@pytest.fixture(scope="module")
def small_workload():
    return generate_workload(seed=3, initial=6, arrivals=24)


@pytest.fixture(scope="module")
def reports(ring, small_workload):
    return {p: simulate(small_workload, ring, p) for p in ("FIFO", "FIFO-p", "NAQJS")}


def bell(n=2):
    return Circuit(n, (CX(0, 1),) + tuple(MEASURE(q) for q in range(n)))


def test_fifo_qpu_time_closed_form(ring):
    rep = simulate([Job("a", bell(), 1000), Job("b", bell(), 2000)], ring, "FIFO")
    assert rep.qpu_time == pytest.approx(0.6)
    assert rep.trf == 1


@pytest.mark.parametrize("policy", ["FIFO", "FIFO-p", "NAQJS"])
def test_single_job_tat(ring, policy):
    rep = simulate([Job("a", bell(3), 4000)], ring, policy)
    assert rep.tat_avg == pytest.approx(4000 * 200e-6 + 10)
    assert rep.tat_std == 0


def test_time_model_validation():
    with pytest.raises(ValueError):
        TimeModel(0, 10)
    assert TimeModel().execution_time(5000) == pytest.approx(1.0)


def test_metrics_examples():
    recs = [
        JobRecord("a", 0.0, 0.0, 100.0, 2, 10000, (0, 1), 0.5, 0),
        JobRecord("b", 0.0, 0.0, 100.0, 2, 5000, (2, 3), 0.5, 0),
        JobRecord("c", 50.0, 100.0, 150.0, 2, 5000, (0, 1), 0.5, 1),
    ]
    rounds = [RoundRecord(0, 0.0, 100.0, 5000, ["a", "b"]), RoundRecord(1, 100.0, 150.0, 5000, ["c"])]
    m = compute_metrics(recs, rounds)
    assert m["trf"] == 2.0
    assert m["tat_max"] == 100 and m["tat_avg"] == 100 and m["tat_std"] == 0
    assert m["qpu_time"] == pytest.approx(2.0)


def test_too_wide_job_is_hard_error(ring):
    wide = Job("huge", Circuit(17, ()), 10)
    with pytest.raises(SimulationError, match="huge"):
        simulate([wide], ring, "FIFO")


def test_unknown_policy(ring):
    with pytest.raises(ValueError):
        simulate([Job("a", bell(), 1)], ring, "LIFO")


def test_conservation_and_order(reports, small_workload):
    ids = sorted(j.id for j in small_workload.jobs)
    for rep in reports.values():
        assert sorted(r.id for r in rep.per_job) == ids
        assert all(r.complete >= r.submit and r.start >= r.submit for r in rep.per_job)
        starts = [r.start for r in rep.round_log]
        assert all(b > a for a, b in zip(starts, starts[1:]))
        assert all(np.isfinite(r.complete) for r in rep.per_job)
        assert rep.trf >= 1
        assert 0 <= rep.estimated_pst_avg <= 1


def test_fifo_uses_most_qpu_time(reports):
    assert reports["FIFO"].trf == 1
    assert reports["FIFO"].qpu_time >= reports["FIFO-p"].qpu_time
    assert reports["FIFO"].qpu_time >= reports["NAQJS"].qpu_time


def test_report_replays(reports):
    for rep in reports.values():
        m = replay_metrics(rep)
        for key in ("qpu_time", "tat_max", "tat_avg", "tat_std", "trf", "estimated_pst_avg", "rounds"):
            assert m[key] == getattr(rep, key)


def test_qpu_time_is_sum_over_rounds(reports):
    for rep in reports.values():
        assert rep.qpu_time == pytest.approx(sum(r.shots for r in rep.round_log) * 200e-6)


def test_report_files(reports, tmp_path):
    rep = reports["NAQJS"]
    rep.write_json(tmp_path / "r.json")
    rep.write_csv(tmp_path / "r.csv")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["policy"] == "NAQJS" and len(data["per_job"]) == len(rep.per_job)
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header == "id,submit,start,complete,tat,width,shots,epst_star,round"


def test_simulation_deterministic(ring, small_workload):
    a = simulate(small_workload, ring, "NAQJS")
    b = simulate(small_workload, ring, "NAQJS")
    assert a.selection_trace() == b.selection_trace()
    assert [r.epst_star for r in a.per_job] == [r.epst_star for r in b.per_job]


# -- workload -------------------------------------------------------------


def test_workload_reproducible():
    a, b = generate_workload(seed=5, initial=4, arrivals=30), generate_workload(seed=5, initial=4, arrivals=30)
    assert a == b
    assert generate_workload(seed=6, initial=4, arrivals=30) != a


def test_workload_defaults():
    wl = generate_workload(seed=1)
    assert len(wl.initial_jobs) == 44 and len(wl.arrivals) == 400
    assert all(j.submit_time == 0 for j in wl.initial_jobs)
    assert all(1000 <= j.shots <= 20000 for j in wl.jobs)
    times = [0.0] + [j.submit_time for j in wl.arrivals]
    assert all(b - a in (0.0, 1.0) for a, b in zip(times, times[1:]))
    assert len({j.id for j in wl.jobs}) == len(wl)


def test_device_profile_shots():
    wl = generate_workload(seed=1, initial=10, arrivals=100, profile="device")
    lo, hi = PROFILES["device"][0]
    assert all(lo <= j.shots <= hi for j in wl.jobs)


def test_workload_errors():
    with pytest.raises(ValueError):
        generate_workload(profile="cloud")
    with pytest.raises(ValueError):
        generate_workload(corpus=[])
    with pytest.raises(ValueError):
        generate_workload(corpus_size=0)


def test_synthetic_corpus_statistics():
    corpus = synthesize_corpus(2000, np.random.default_rng(0))
    widths = np.array([c.n for c in corpus])
    gates = np.array([len(c.gates) - c.n for c in corpus])  # without the final measurements
    assert widths.min() >= 3 and widths.max() <= 16
    assert 5 <= widths.mean() <= 7
    assert 55 <= gates.mean() <= 85
    assert max(c.depth() for c in corpus) <= 100


def test_workload_jsonl_round_trip(tmp_path):
    wl = generate_workload(seed=2, initial=3, arrivals=7)
    path = tmp_path / "w.jsonl"
    write_workload(wl, path)
    again = read_workload(path)
    assert again.jobs == wl.jobs


def test_workload_circuit_file_reference(tmp_path):
    (tmp_path / "bell.qasm").write_text(serialize_circuit(bell()))
    (tmp_path / "w.jsonl").write_text(json.dumps({"id": "x", "circuit": "bell.qasm", "shots": 10, "t": 2}) + "\n")
    wl = read_workload(tmp_path / "w.jsonl")
    assert wl.arrivals[0].circuit == bell() and not wl.initial_jobs


def test_workload_bad_record(tmp_path):
    (tmp_path / "w.jsonl").write_text('{"id": "x"}\n')
    with pytest.raises(ValueError, match="w.jsonl:1"):
        read_workload(tmp_path / "w.jsonl")
