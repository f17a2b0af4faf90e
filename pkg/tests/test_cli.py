import csv
import json
import logging

import pytest

from naqjs.circuit import CX, MEASURE, Circuit, Job, serialize_circuit
from naqjs.cli import EXIT_CONFIG, EXIT_SIMULATION, EXIT_VERIFY, main
from naqjs.workload import write_workload


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("NAQJS_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.jsonl"
    assert main(["generate", "--seed", "4", "--initial", "3", "--arrivals", "9", "-o", str(path)]) == 0
    return path


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_generate_defaults(out):
    assert main(["generate", "--profile", "noise-model", "--seed", "7"]) == 0
    lines = (out / "workload_seed7.jsonl").read_text().splitlines()
    assert len(lines) == 444


def test_generate_counts_and_determinism(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for p in (a, b):
        assert main(["generate", "--initial", "0", "--arrivals", "10", "--seed", "1", "-o", str(p)]) == 0
    assert len(a.read_text().splitlines()) == 10
    assert a.read_bytes() == b.read_bytes()


def test_run_writes_reports(out, small):
    assert main(["run", "--workload", str(small), "--policies", "fifo,fifo-p,naqjs", "--seeds", "0,1"]) == 0
    table = rows(out / "comparison.csv")
    assert [(r["seed"], r["policy"]) for r in table] == [
        ("0", "FIFO"), ("0", "FIFO-p"), ("0", "NAQJS"), ("1", "FIFO"), ("1", "FIFO-p"), ("1", "NAQJS"),
    ]
    assert set(table[0]) >= {"qpu_time", "d_qpu_pct", "tat_max", "tat_avg", "d_tat_avg_pct", "tat_std",
                             "d_tat_std_pct", "rt", "trf", "pst"}
    for policy in ("fifo", "fifo-p", "naqjs"):
        data = json.loads((out / f"{policy}_seed0.json").read_text())
        assert len(data["per_job"]) == 12
        assert (out / f"{policy}_seed0.csv").exists()


def test_fifo_only_deltas_are_zero(out, small):
    assert main(["run", "--workload", str(small), "--policies", "fifo"]) == 0
    (row,) = rows(out / "comparison.csv")
    assert float(row["d_qpu_pct"]) == float(row["d_tat_avg_pct"]) == float(row["d_tat_std_pct"]) == 0


def test_run_parallel_matches_serial(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["run", "--workload", str(small), "--policies", "fifo,naqjs"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--jobs", "2"]) == 0
    drop = lambda t: [{k: v for k, v in r.items() if k != "rt"} for r in t]
    assert drop(rows(a / "comparison.csv")) == drop(rows(b / "comparison.csv"))


def test_sweep_gamma(out, small):
    assert main(["sweep", "--workload", str(small), "--gamma", "0,0.5,1,2"]) == 0
    means = rows(out / "sweep_gamma_mean.csv")
    assert [float(r["value"]) for r in means] == [0, 0.5, 1, 2]
    assert all("tat_avg" in r and "tat_std" in r for r in means)


def test_sweep_needs_one_list(out, small):
    assert main(["sweep", "--workload", str(small)]) == EXIT_CONFIG


def test_config_file_and_errors(tmp_path, out, small):
    toml = tmp_path / "cfg.toml"
    toml.write_text('alpha = 0\nbeta = 0\neta = "1"\ndelta_t = "inf"\n')
    assert main(["run", "--workload", str(small), "--policies", "naqjs", "--config", str(toml)]) == 0
    cfg = json.loads((out / "naqjs_seed0.json").read_text())["config"]
    assert cfg["alpha"] == 0 and cfg["eta"] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"alpha": 1, "unknown": 2}')
    assert main(["run", "--workload", str(small), "--config", str(bad)]) == EXIT_CONFIG
    assert main(["run", "--workload", str(tmp_path / "missing.jsonl")]) == EXIT_CONFIG
    assert main(["run", "--hardware", "nope", "--workload", str(small)]) == EXIT_CONFIG


def test_simulation_error_exit(tmp_path, out):
    path = tmp_path / "wide.jsonl"
    write_workload([Job("wide", Circuit(20, ()), 10, 0.0)], path)
    assert main(["run", "--workload", str(path), "--policies", "fifo"]) == EXIT_SIMULATION


def test_verify_pass_and_mutation(tmp_path, small):
    routed = tmp_path / "routed"
    assert main(["verify", "--workload", str(small), "--emit-routed", str(routed)]) == 0
    files = sorted(routed.glob("*.routed.json"))
    assert files
    assert main(["verify", "--routed", *map(str, files)]) == 0
    data = json.loads(files[0].read_text())
    gates = data["routed"]["gates"]
    idx = next(i for i, g in enumerate(gates) if g["kind"] in ("cx", "sx", "x"))
    gates[idx] = {"kind": "cz", "qubits": gates[idx]["qubits"]} if gates[idx]["kind"] == "cx" else \
        {"kind": "rz", "qubits": gates[idx]["qubits"], "theta": 0.7}
    bad = tmp_path / "bad.routed.json"
    bad.write_text(json.dumps(data))
    assert main(["verify", "--routed", str(bad)]) == EXIT_VERIFY


def test_verify_illegal_routing_detected(tmp_path):
    c = Circuit(2, (CX(0, 1), MEASURE(0), MEASURE(1)))
    data = {
        "original": {"n": 2, "gates": [{"kind": "cx", "qubits": [0, 1]}, {"kind": "measure", "qubits": [0]},
                                       {"kind": "measure", "qubits": [1]}]},
        "routed": {"n": 16, "gates": [{"kind": "cx", "qubits": [0, 5]}, {"kind": "measure", "qubits": [0]},
                                      {"kind": "measure", "qubits": [5]}]},
        "initial_mapping": {"0": 0, "1": 5},
        "final_mapping": {"0": 0, "1": 5},
    }
    path = tmp_path / "illegal.json"
    path.write_text(json.dumps(data))
    assert main(["verify", "--routed", str(path)]) == EXIT_VERIFY


def test_verify_wide_circuit_legality_only(tmp_path, caplog, capsys):
    c = Circuit(16, tuple(CX(i, (i + 5) % 16) for i in range(16)))
    path = tmp_path / "wide.qasm"
    path.write_text(serialize_circuit(c))
    with caplog.at_level(logging.WARNING):
        assert main(["verify", "--circuit", str(path)]) == 0
    assert "legality checked only" in caplog.text
    assert "equivalence skipped" in capsys.readouterr().out


def test_verify_nothing_is_config_error():
    assert main(["verify"]) == EXIT_CONFIG


def test_bad_policy_name_rejected():
    with pytest.raises(SystemExit) as err:
        main(["run", "--policies", "lifo"])
    assert err.value.code == 2
