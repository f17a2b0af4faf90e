"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 simulation error,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .circuit import Circuit, ensure_measured, expand_composites, load_circuit
from .hardware import BUILTIN_TOPOLOGIES, HardwareModel, builtin_topology, scale_noise
from .mapper import RoutingError, map_circuit, routed_from_dict, routed_to_dict
from .oracle import MAX_QUBITS, equivalent_under_permutation
from .partition import best_partition
from .scheduler import SchedulerConfig
from .sim import POLICIES, SimulationError, simulate
from .workload import PROFILES, generate_workload, read_workload, write_workload

logger = logging.getLogger("naqjs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_VERIFY = 4

OUTPUT_ENV = "NAQJS_OUTPUT_DIR"
CONFIG_KEYS = ("alpha", "beta", "gamma", "eta", "delta_t", "repeats", "shot_time_us", "overhead_s")

COMPARISON_COLUMNS = [
    "seed", "policy", "qpu_time", "d_qpu_pct", "tat_max", "tat_avg", "d_tat_avg_pct",
    "tat_std", "d_tat_std_pct", "rt", "trf", "pst",
]


class ConfigError(Exception):
    pass


def _float_or_fraction(text: str) -> float:
    num, _, den = text.partition("/")
    try:
        return float(num) / float(den or 1)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    return [_float_or_fraction(x.strip()) for x in text.split(",") if x.strip()]


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # Python < 3.11
            import tomli as tomllib

        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_config(args) -> SchedulerConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None and not isinstance(v, list):
            values[key] = v
    if getattr(args, "no_aging", False):
        values["delta_t"] = "inf"
    try:
        return SchedulerConfig.from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_hardware(args) -> HardwareModel:
    name = args.hardware
    try:
        if name in BUILTIN_TOPOLOGIES:
            hw = builtin_topology(name, args.hw_seed)
        else:
            hw = HardwareModel.load(name)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load hardware {name!r}: {exc}") from None
    level = getattr(args, "noise_level", None)
    if level is not None and not isinstance(level, list) and level != 1:
        hw = scale_noise(hw, level)
    return hw


def _policies(text: str) -> list[str]:
    out = []
    for p in text.split(","):
        match = [q for q in POLICIES if q.lower() == p.strip().lower()]
        if not match:
            raise argparse.ArgumentTypeError(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
        out.append(match[0])
    return out


def _output_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV, "naqjs-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workload_for(args, seed: int):
    if args.workload:
        try:
            return read_workload(args.workload)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read workload: {exc}") from None
    return generate_workload(seed, args.initial, args.arrivals, args.profile, corpus_size=args.corpus_size)


# --------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    shots = (args.shots_min, args.shots_max) if args.shots_min is not None or args.shots_max is not None else None
    if shots is not None:
        lo, hi = PROFILES[args.profile][0]
        shots = (args.shots_min or lo, args.shots_max or hi)
    try:
        wl = generate_workload(args.seed, args.initial, args.arrivals, args.profile,
                               corpus_size=args.corpus_size, shots=shots)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    path = Path(args.output) if args.output else _output_dir(args) / f"workload_seed{args.seed}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_workload(wl, path)
    print(f"wrote {len(wl)} jobs to {path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# run / sweep


def _run_one(task):
    workload, hw, policy, cfg = task
    return simulate(workload, hw, policy, cfg)


def _execute(tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def _pct(value: float, base: float | None):
    if base is None or base == 0:
        return ""
    return 100.0 * (value - base) / base


def comparison_rows(reports) -> list[dict]:
    """Table rows with percentage differences against the FIFO run of the same seed."""
    fifo = {r.seed: r for r in reports if r.policy == "FIFO"}
    rows = []
    for r in reports:
        base = fifo.get(r.seed)
        rows.append({
            "seed": r.seed,
            "policy": r.policy,
            "qpu_time": r.qpu_time,
            "d_qpu_pct": _pct(r.qpu_time, base.qpu_time if base else None),
            "tat_max": r.tat_max,
            "tat_avg": r.tat_avg,
            "d_tat_avg_pct": _pct(r.tat_avg, base.tat_avg if base else None),
            "tat_std": r.tat_std,
            "d_tat_std_pct": _pct(r.tat_std, base.tat_std if base else None),
            "rt": r.scheduler_runtime,
            "trf": r.trf,
            "pst": r.estimated_pst_avg,
        })
    return rows


def _write_rows(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


def cmd_run(args) -> int:
    cfg = build_config(args)
    hw = load_hardware(args)
    out = _output_dir(args)
    tasks = []
    for seed in args.seeds:
        wl = _workload_for(args, seed)
        for policy in args.policies:
            tasks.append((wl, hw, policy, replace(cfg, seed=seed)))
    try:
        reports = _execute(tasks, args.jobs)
    except SimulationError as exc:
        logger.error("simulation failed: %s", exc)
        return EXIT_SIMULATION
    for (wl, _, policy, cfg_s), rep in zip(tasks, reports):
        rep.seed = cfg_s.seed
        stem = f"{policy.lower()}_seed{cfg_s.seed}"
        rep.write_json(out / f"{stem}.json")
        rep.write_csv(out / f"{stem}.csv")
    rows = comparison_rows(reports)
    _write_rows(out / "comparison.csv", rows, COMPARISON_COLUMNS)
    for row in rows:
        print(f"seed={row['seed']} {row['policy']:>6}: qpu={row['qpu_time']:.2f}s "
              f"tat_avg={row['tat_avg']:.1f}s tat_std={row['tat_std']:.1f}s trf={row['trf']:.2f} "
              f"pst={row['pst']:.4g} rt={row['rt']:.2f}s")
    return EXIT_OK


SWEEPABLE = ("alpha", "beta", "gamma", "eta", "delta_t", "noise_level")


def cmd_sweep(args) -> int:
    swept = [k for k in SWEEPABLE if isinstance(getattr(args, k, None), list)]
    if len(swept) != 1:
        raise ConfigError(f"sweep needs exactly one list-valued parameter among {', '.join(SWEEPABLE)}")
    param = swept[0]
    values = getattr(args, param)
    base_cfg = build_config(args)
    out = _output_dir(args)
    tasks, labels = [], []
    for value in values:
        if param == "noise_level":
            hw = load_hardware(argparse.Namespace(**{**vars(args), "noise_level": value}))
            cfg = base_cfg
        else:
            hw = load_hardware(argparse.Namespace(**{**vars(args), "noise_level": None}))
            cfg = replace(base_cfg, **{param: value})
        for seed in args.seeds:
            wl = _workload_for(args, seed)
            for policy in args.policies:
                tasks.append((wl, hw, policy, replace(cfg, seed=seed)))
                labels.append((value, seed, policy))
    try:
        reports = _execute(tasks, args.jobs)
    except SimulationError as exc:
        logger.error("simulation failed: %s", exc)
        return EXIT_SIMULATION
    rows = []
    for (value, seed, policy), rep in zip(labels, reports):
        rows.append({"param": param, "value": value, "seed": seed, "policy": policy,
                     "qpu_time": rep.qpu_time, "tat_max": rep.tat_max, "tat_avg": rep.tat_avg,
                     "tat_std": rep.tat_std, "trf": rep.trf, "pst": rep.estimated_pst_avg,
                     "rt": rep.scheduler_runtime})
    cols = ["param", "value", "seed", "policy", "qpu_time", "tat_max", "tat_avg", "tat_std", "trf", "pst", "rt"]
    _write_rows(out / f"sweep_{param}.csv", rows, cols)
    summary = []
    for value in values:
        for policy in args.policies:
            sel = [r for r in rows if r["value"] == value and r["policy"] == policy]
            mean = {k: sum(r[k] for r in sel) / len(sel) for k in ("qpu_time", "tat_max", "tat_avg", "tat_std", "trf", "pst")}
            summary.append({"param": param, "value": value, "policy": policy, **mean})
            print(f"{param}={value:g} {policy:>6}: tat_avg={mean['tat_avg']:.1f}s tat_std={mean['tat_std']:.1f}s "
                  f"qpu={mean['qpu_time']:.2f}s pst={mean['pst']:.4g}")
    _write_rows(out / f"sweep_{param}_mean.csv", summary,
                ["param", "value", "policy", "qpu_time", "tat_max", "tat_avg", "tat_std", "trf", "pst"])
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def check_legality(routed_circuit: Circuit, hw: HardwareModel) -> list[str]:
    problems = []
    for g in expand_composites(routed_circuit).gates:
        if g.kind.is_two_qubit and not hw.graph.has_edge(*g.qubits):
            problems.append(f"{g!r} is not on a coupling edge")
    return problems


def _verify_routed(name: str, original: Circuit, routed, hw: HardwareModel) -> bool:
    problems = check_legality(routed.circuit, hw)
    if problems:
        print(f"FAIL {name}: {problems[0]}" + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
        return False
    if original.n > MAX_QUBITS:
        logger.warning("%s: width %d exceeds the oracle limit of %d; legality checked only",
                       name, original.n, MAX_QUBITS)
        print(f"ok   {name}: legal (equivalence skipped, width {original.n})")
        return True
    if not equivalent_under_permutation(original, routed):
        print(f"FAIL {name}: routed circuit is not equivalent to the original")
        return False
    print(f"ok   {name}: legal and equivalent ({routed.swaps} swap, {routed.bridges} bridge)")
    return True


def cmd_verify(args) -> int:
    hw = load_hardware(args)
    cfg = build_config(args)
    ok = True
    count = 0
    for path in args.routed or []:
        try:
            routed, original = routed_from_dict(json.loads(Path(path).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read routed circuit {path}: {exc}") from None
        if original is None:
            raise ConfigError(f"{path}: routed file carries no original circuit")
        ok &= _verify_routed(str(path), ensure_measured(original), routed, hw)
        count += 1

    items: list[tuple[str, Circuit, object]] = []
    if args.workload:
        wl = read_workload(args.workload)
        items += [(j.id, j.circuit, j) for j in wl.jobs]
    for path in args.circuit or []:
        try:
            items.append((str(path), load_circuit(path), None))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read circuit {path}: {exc}") from None

    seen: dict = {}
    emit = Path(args.emit_routed) if args.emit_routed else None
    if emit:
        emit.mkdir(parents=True, exist_ok=True)
    for name, circuit, job in items:
        circuit = ensure_measured(circuit)
        key = (circuit.n, circuit.gates)
        if key in seen:
            continue
        seen[key] = name
        if circuit.n > hw.num_qubits:
            print(f"FAIL {name}: needs {circuit.n} qubits, device has {hw.num_qubits}")
            ok = False
            continue
        part = best_partition(circuit, set(range(hw.num_qubits)), hw)
        try:
            result = map_circuit(circuit, part.qubits, hw, cfg.repeats, cfg.seed)
        except RoutingError as exc:
            print(f"FAIL {name}: {exc}")
            ok = False
            continue
        if emit:
            safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
            (emit / f"{safe}.routed.json").write_text(json.dumps(routed_to_dict(result.routed, circuit)))
        ok &= _verify_routed(name, circuit, result.routed, hw)
        count += 1
    if count == 0:
        raise ConfigError("nothing to verify: pass --workload, --circuit or --routed")
    print(f"{count} circuit(s) checked: {'all passed' if ok else 'FAILURES'}")
    return EXIT_OK if ok else EXIT_VERIFY


# --------------------------------------------------------------------------
# argument parsing


def _add_hardware(p):
    p.add_argument("--hardware", default="ring16",
                   help=f"built-in topology ({', '.join(BUILTIN_TOPOLOGIES)}) or calibration JSON path")
    p.add_argument("--hw-seed", type=int, default=0, help="seed of the built-in calibration jitter")


def _add_sched(p, sweep=False):
    num = _float_list if sweep else _float_or_fraction
    p.add_argument("--config", help="JSON or TOML file with scheduler settings")
    p.add_argument("--alpha", type=num)
    p.add_argument("--beta", type=num)
    p.add_argument("--gamma", type=num)
    p.add_argument("--eta", type=num)
    p.add_argument("--delta-t", dest="delta_t", type=num)
    p.add_argument("--no-aging", action="store_true", help="disable priority aging")
    p.add_argument("--repeats", type=int)
    p.add_argument("--shot-time-us", dest="shot_time_us", type=float)
    p.add_argument("--overhead-s", dest="overhead_s", type=float)
    p.add_argument("--noise-level", dest="noise_level", type=num)


def _add_workload(p):
    p.add_argument("--workload", help="JSONL job stream (otherwise generated per seed)")
    p.add_argument("--profile", choices=sorted(PROFILES), default="noise-model")
    p.add_argument("--initial", type=int, default=44)
    p.add_argument("--arrivals", type=int, default=400)
    p.add_argument("--corpus-size", type=int, default=77)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="naqjs", description="Noise-aware quantum job scheduling simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic workload as JSONL")
    g.add_argument("--profile", choices=sorted(PROFILES), default="noise-model")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--initial", type=int, default=44)
    g.add_argument("--arrivals", type=int, default=400)
    g.add_argument("--corpus-size", type=int, default=77)
    g.add_argument("--shots-min", type=int)
    g.add_argument("--shots-max", type=int)
    g.add_argument("-o", "--output", help="output file (default: <out>/workload_seed<seed>.jsonl)")
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./naqjs-out)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="simulate policies and write reports")
    _add_hardware(r)
    _add_sched(r)
    _add_workload(r)
    r.add_argument("--policies", type=_policies, default=list(POLICIES))
    r.add_argument("--seeds", "--seed", dest="seeds", type=_int_list, default=[0])
    r.add_argument("--jobs", type=int, default=1, help="parallel simulations")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./naqjs-out)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="vary one parameter (comma list) across seeds")
    _add_hardware(s)
    _add_sched(s, sweep=True)
    _add_workload(s)
    s.add_argument("--policies", type=_policies, default=["NAQJS"])
    s.add_argument("--seeds", "--seed", dest="seeds", type=_int_list, default=[0])
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="route circuits and check legality and equivalence")
    _add_hardware(v)
    _add_sched(v)
    v.add_argument("--workload")
    v.add_argument("--circuit", nargs="*", help="QASM or JSON circuit files")
    v.add_argument("--routed", nargs="*", help="routed-circuit JSON files to check as given")
    v.add_argument("--emit-routed", help="directory to write routed-circuit JSON files into")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
