"""Gate-list circuit IR.

Circuits are immutable tuples of :class:`GateOp`. The dependency DAG is derived
on demand by :func:`build_dag`; nothing in the IR caches it.

Qubit indices in a :class:`Circuit` are logical until the circuit has been
routed, after which they refer to physical qubits of the device.
"""
from __future__ import annotations

import ast
import enum
import json
import math
import operator
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class CircuitError(ValueError):
    """Malformed circuit or unsupported input."""


class QasmSyntaxError(CircuitError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class GateKind(enum.Enum):
    X = "x"
    SX = "sx"
    RZ = "rz"
    CZ = "cz"
    CX = "cx"
    SWAP = "swap"
    BRIDGE = "bridge"
    MEASURE = "measure"
    BARRIER = "barrier"

    @property
    def arity(self) -> int | None:
        """Number of qubits the gate acts on; ``None`` for variadic barriers."""
        return _ARITY[self]

    @property
    def is_two_qubit(self) -> bool:
        return self in (GateKind.CX, GateKind.CZ)


_ARITY = {
    GateKind.X: 1,
    GateKind.SX: 1,
    GateKind.RZ: 1,
    GateKind.MEASURE: 1,
    GateKind.CX: 2,
    GateKind.CZ: 2,
    GateKind.SWAP: 2,
    GateKind.BRIDGE: 3,
    GateKind.BARRIER: None,
}

ONE_QUBIT_GATES = frozenset({GateKind.X, GateKind.SX, GateKind.RZ})
COMPOSITES = frozenset({GateKind.SWAP, GateKind.BRIDGE})


@dataclass(frozen=True, slots=True)
class GateOp:
    """One gate application.

    ``qubits`` is ordered: (control, target) for CX and (control, middle,
    target) for BRIDGE. ``duration`` is in nanoseconds and normally left unset
    so that the hardware model decides it.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None
    duration: float | None = None

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        arity = self.kind.arity
        if arity is not None and len(qubits) != arity:
            raise CircuitError(
                f"{self.kind.value} expects {arity} qubit(s), got {len(qubits)}"
            )
        if not qubits:
            raise CircuitError(f"{self.kind.value} acts on no qubits")
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"repeated qubit in {self.kind.value}{qubits}")
        if any(q < 0 for q in qubits):
            raise CircuitError(f"negative qubit index in {self.kind.value}{qubits}")
        if self.kind is GateKind.RZ:
            if self.theta is None:
                raise CircuitError("rz requires an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise CircuitError(f"{self.kind.value} takes no angle")

    def relabel(self, mapping: Mapping[int, int] | Sequence[int]) -> GateOp:
        return GateOp(self.kind, tuple(mapping[q] for q in self.qubits), self.theta, self.duration)

    def __repr__(self):
        args = ",".join(map(str, self.qubits))
        if self.theta is not None:
            return f"{self.kind.name}({self.theta:g})[{args}]"
        return f"{self.kind.name}({args})"


def X(q): return GateOp(GateKind.X, (q,))
def SX(q): return GateOp(GateKind.SX, (q,))
def RZ(theta, q): return GateOp(GateKind.RZ, (q,), theta)
def CX(c, t): return GateOp(GateKind.CX, (c, t))
def CZ(a, b): return GateOp(GateKind.CZ, (a, b))
def SWAP(a, b): return GateOp(GateKind.SWAP, (a, b))
def BRIDGE(c, m, t): return GateOp(GateKind.BRIDGE, (c, m, t))
def MEASURE(q): return GateOp(GateKind.MEASURE, (q,))
def BARRIER(*qs): return GateOp(GateKind.BARRIER, tuple(qs))


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[GateOp, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 0:
            raise CircuitError("negative circuit width")
        for g in self.gates:
            for q in g.qubits:
                if q >= self.n:
                    raise CircuitError(f"qubit index {q} out of range for width {self.n} in {g!r}")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count(self, *kinds: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind in kinds)

    @property
    def num_1q(self) -> int:
        return self.count(*ONE_QUBIT_GATES)

    @property
    def num_2q(self) -> int:
        """Two-qubit gate count, with SWAP and BRIDGE counted as their CX expansions."""
        return self.count(GateKind.CX, GateKind.CZ) + 3 * self.count(GateKind.SWAP) + 4 * self.count(GateKind.BRIDGE)

    @property
    def has_measurements(self) -> bool:
        return any(g.kind is GateKind.MEASURE for g in self.gates)

    def measured_qubits(self) -> list[int]:
        """Qubits read out at the end; every qubit when no measure is present."""
        measured = [g.qubits[0] for g in self.gates if g.kind is GateKind.MEASURE]
        return measured if measured else list(range(self.n))

    def used_qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def depth(self) -> int:
        level = [0] * self.n
        for g in self.gates:
            if g.kind is GateKind.BARRIER:
                top = max(level[q] for q in g.qubits)
            else:
                top = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = top
        return max(level, default=0)

    def interaction_edges(self) -> set[tuple[int, int]]:
        """Logical qubit pairs that appear together in a two-qubit gate."""
        edges = set()
        for g in self.gates:
            if g.kind.is_two_qubit or g.kind is GateKind.SWAP:
                a, b = g.qubits
                edges.add((min(a, b), max(a, b)))
        return edges

    def max_logical_degree(self) -> int:
        deg = [0] * self.n
        for a, b in self.interaction_edges():
            deg[a] += 1
            deg[b] += 1
        return max(deg, default=0)


def ensure_measured(c: Circuit) -> Circuit:
    """Append a measurement on every qubit if the circuit has none."""
    if c.has_measurements:
        return c
    return Circuit(c.n, c.gates + tuple(MEASURE(q) for q in range(c.n)))


@dataclass(frozen=True)
class Job:
    id: str
    circuit: Circuit
    shots: int
    submit_time: float = 0.0

    def __post_init__(self):
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValueError(f"job {self.id}: shots must be a positive integer, got {self.shots}")
        if self.submit_time < 0:
            raise ValueError(f"job {self.id}: negative submit time")
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def width(self) -> int:
        return self.circuit.n


# --------------------------------------------------------------------------
# DAG


@dataclass(frozen=True)
class CircuitDag:
    """Dependency DAG over gate indices of ``gates``."""

    gates: tuple[GateOp, ...]
    successors: tuple[tuple[int, ...], ...]
    predecessors: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.gates)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, succ in enumerate(self.successors) for v in succ]

    def in_degrees(self) -> list[int]:
        return [len(p) for p in self.predecessors]

    def topological_order(self) -> list[int]:
        indeg = self.in_degrees()
        ready = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        head = 0
        while head < len(ready):
            u = ready[head]
            head += 1
            order.append(u)
            for v in self.successors[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        return order


def build_dag(c: Circuit) -> CircuitDag:
    n_gates = len(c.gates)
    succ: list[list[int]] = [[] for _ in range(n_gates)]
    pred: list[list[int]] = [[] for _ in range(n_gates)]
    last: dict[int, int] = {}
    for i, g in enumerate(c.gates):
        for q in g.qubits:
            j = last.get(q)
            if j is not None and j not in pred[i]:
                succ[j].append(i)
                pred[i].append(j)
            last[q] = i
    return CircuitDag(c.gates, tuple(map(tuple, succ)), tuple(map(tuple, pred)))


# --------------------------------------------------------------------------
# Timing


def gate_duration(g: GateOp, durations: Mapping) -> float:
    """Look up a gate's duration in ns.

    ``durations`` may be keyed by :class:`GateKind` or by the categories
    ``"1q"``, ``"2q"`` and ``"measure"``. SWAP and BRIDGE default to the
    serial length of their CX expansions.
    """
    if g.duration is not None:
        return g.duration
    if g.kind is GateKind.BARRIER:
        return 0.0
    if g.kind in durations:
        return float(durations[g.kind])
    if g.kind in ONE_QUBIT_GATES:
        key = "1q"
    elif g.kind.is_two_qubit:
        key = "2q"
    elif g.kind is GateKind.MEASURE:
        key = "measure"
    elif g.kind in COMPOSITES:
        cx = durations.get(GateKind.CX, durations.get("2q"))
        if cx is None:
            raise KeyError(f"no duration for {g.kind.value}")
        return float(cx) * (3 if g.kind is GateKind.SWAP else 4)
    else:  # pragma: no cover
        raise KeyError(g.kind)
    if key not in durations:
        raise KeyError(f"no duration for {g.kind.value} (looked for {key!r})")
    return float(durations[key])


def circuit_time(c: Circuit, durations: Mapping, dag: CircuitDag | None = None) -> float:
    """Makespan of ``c`` in ns, traversing its DAG in topological order.

    Every qubit keeps its own clock. A gate on several qubits first brings
    their clocks to the latest of them, then advances all by its duration.
    """
    if dag is None:
        dag = build_dag(c)
    clock = [0.0] * c.n
    indeg = dag.in_degrees()
    queue = [i for i, d in enumerate(indeg) if d == 0]
    head = 0
    while head < len(queue):
        i = queue[head]
        head += 1
        g = dag.gates[i]
        d = gate_duration(g, durations)
        qs = g.qubits
        if len(qs) == 1:
            clock[qs[0]] += d
        else:
            t = max(clock[q] for q in qs) + d
            for q in qs:
                clock[q] = t
        for j in dag.successors[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    return max(clock, default=0.0)


# --------------------------------------------------------------------------
# Transformations


def reverse_circuit(c: Circuit) -> Circuit:
    """Reverse gate order; measurements stay at the end in their original order."""
    body = [g for g in c.gates if g.kind is not GateKind.MEASURE]
    measures = [g for g in c.gates if g.kind is GateKind.MEASURE]
    return Circuit(c.n, tuple(reversed(body)) + tuple(measures))


def expand_composites(c: Circuit) -> Circuit:
    """Replace SWAP and BRIDGE by their CX sequences."""
    if not any(g.kind in COMPOSITES for g in c.gates):
        return c
    out: list[GateOp] = []
    for g in c.gates:
        if g.kind is GateKind.SWAP:
            a, b = g.qubits
            out += [CX(a, b), CX(b, a), CX(a, b)]
        elif g.kind is GateKind.BRIDGE:
            a, m, t = g.qubits
            out += [CX(m, t), CX(a, m), CX(m, t), CX(a, m)]
        else:
            out.append(g)
    return Circuit(c.n, tuple(out))


def relabel_circuit(c: Circuit, mapping: Mapping[int, int] | Sequence[int], n: int) -> Circuit:
    return Circuit(n, tuple(g.relabel(mapping) for g in c.gates))


# --------------------------------------------------------------------------
# Parsing and serialization

_ANGLE_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _eval_angle(expr: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _ANGLE_OPS:
            return _ANGLE_OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(expr)

    return ev(ast.parse(expr.strip(), mode="eval"))


_STATEMENT = re.compile(r"\s*([a-zA-Z_][a-zA-Z0-9_]*)\s*(\(([^)]*)\))?\s*(.*)$", re.S)
_QARG = re.compile(r"^([a-zA-Z_][a-zA-Z0-9_]*)\s*(\[\s*(\d+)\s*\])?$")
_REG = re.compile(r"^([a-zA-Z_][a-zA-Z0-9_]*)\s*\[\s*(\d+)\s*\]$")


def _iter_statements(source: str):
    """Yield (statement, line, col) with comments stripped."""
    lines = source.split("\n")
    buf, start = [], None
    for lineno, raw in enumerate(lines, 1):
        text = raw.split("//", 1)[0]
        col0 = 0
        for idx, ch in enumerate(text):
            if start is None and not ch.isspace():
                start = (lineno, idx + 1)
            if ch == ";":
                stmt = "".join(buf) + text[col0:idx]
                yield stmt.strip(), start
                buf, start, col0 = [], None, idx + 1
        rest = text[col0:]
        if rest.strip():
            buf.append(rest + " ")
        elif start is not None:
            buf.append(" ")
    if "".join(buf).strip():
        raise QasmSyntaxError("missing ';' at end of input", *start)


def _parse_qasm(source: str) -> Circuit:
    qreg: tuple[str, int] | None = None
    cregs: dict[str, int] = {}
    gates: list[GateOp] = []
    header_seen = False

    for stmt, (line, col) in _iter_statements(source):
        if not stmt:
            continue
        if stmt.startswith("OPENQASM"):
            if stmt.split()[1:] != ["2.0"]:
                raise QasmSyntaxError(f"unsupported version: {stmt!r}", line, col)
            header_seen = True
            continue
        if stmt.startswith("include"):
            continue
        m = _STATEMENT.match(stmt)
        if not m:
            raise QasmSyntaxError(f"cannot parse {stmt!r}", line, col)
        name, _, params, rest = m.groups()
        rest = rest.strip()

        if name in ("qreg", "creg"):
            r = _REG.match(rest)
            if not r:
                raise QasmSyntaxError(f"bad register declaration {stmt!r}", line, col)
            if name == "qreg":
                if qreg is not None:
                    raise QasmSyntaxError("only one qreg is supported", line, col)
                qreg = (r.group(1), int(r.group(2)))
            else:
                cregs[r.group(1)] = int(r.group(2))
            continue

        if qreg is None:
            raise QasmSyntaxError(f"gate {name!r} before qreg declaration", line, col)
        qname, width = qreg

        def qubit_arg(arg: str) -> list[int]:
            a = _QARG.match(arg.strip())
            if not a or a.group(1) != qname:
                raise QasmSyntaxError(f"bad qubit argument {arg.strip()!r}", line, col)
            if a.group(3) is None:
                return list(range(width))
            idx = int(a.group(3))
            if idx >= width:
                raise QasmSyntaxError(f"qubit index {idx} out of range for {qname}[{width}]", line, col)
            return [idx]

        if name == "measure":
            parts = rest.split("->")
            if len(parts) != 2:
                raise QasmSyntaxError("measure requires '->'", line, col)
            src = qubit_arg(parts[0])
            tgt = parts[1].strip()
            creg_name = tgt.split("[")[0].strip()
            if creg_name not in cregs:
                raise QasmSyntaxError(f"unknown classical register {creg_name!r}", line, col)
            gates.extend(MEASURE(q) for q in src)
            continue
        if name == "barrier":
            qs: list[int] = []
            for arg in rest.split(","):
                qs.extend(q for q in qubit_arg(arg) if q not in qs)
            gates.append(BARRIER(*qs))
            continue

        try:
            kind = GateKind(name)
        except ValueError:
            raise QasmSyntaxError(f"unsupported gate {name!r}", line, col) from None
        theta = None
        if kind is GateKind.RZ:
            if params is None:
                raise QasmSyntaxError("rz requires an angle", line, col)
            try:
                theta = _eval_angle(params)
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise QasmSyntaxError(f"bad angle expression {params!r}", line, col) from None
        elif params is not None:
            raise QasmSyntaxError(f"{name} takes no parameters", line, col)
        args = [a for a in rest.split(",")] if rest else []
        if len(args) != kind.arity:
            raise QasmSyntaxError(f"{name} expects {kind.arity} qubit(s), got {len(args)}", line, col)
        resolved = [qubit_arg(a) for a in args]
        if kind.arity == 1:
            gates.extend(GateOp(kind, (q,), theta) for q in resolved[0])
        else:
            if any(len(r) != 1 for r in resolved):
                raise QasmSyntaxError(f"register broadcast not supported for {name}", line, col)
            try:
                gates.append(GateOp(kind, tuple(r[0] for r in resolved), theta))
            except CircuitError as exc:
                raise QasmSyntaxError(str(exc), line, col) from None

    if not header_seen and qreg is None:
        raise QasmSyntaxError("no qreg declared", 1)
    if qreg is None:
        raise QasmSyntaxError("no qreg declared", 1)
    return Circuit(qreg[1], tuple(gates))


def circuit_from_dict(data: Mapping) -> Circuit:
    try:
        n = int(data["n"])
        gates = []
        for entry in data["gates"]:
            try:
                kind = GateKind(str(entry["kind"]).lower())
            except ValueError:
                raise CircuitError(f"unsupported gate kind {entry['kind']!r}") from None
            gates.append(GateOp(kind, tuple(entry["qubits"]), entry.get("theta")))
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed circuit JSON: {exc}") from None
    return Circuit(n, tuple(gates))


def circuit_to_dict(c: Circuit) -> dict:
    gates = []
    for g in c.gates:
        entry = {"kind": g.kind.value, "qubits": list(g.qubits)}
        if g.theta is not None:
            entry["theta"] = g.theta
        gates.append(entry)
    return {"n": c.n, "gates": gates}


def parse_circuit(source: str, format: str = "qasm") -> Circuit:
    """Parse a circuit from OpenQASM 2.0 (supported subset) or JSON text."""
    if format in ("qasm", "qasm2", "qasm2-subset"):
        return _parse_qasm(source)
    if format == "json":
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise QasmSyntaxError(exc.msg, exc.lineno, exc.colno) from None
        return circuit_from_dict(data)
    raise ValueError(f"unknown circuit format {format!r}")


def serialize_circuit(c: Circuit, format: str = "qasm") -> str:
    if format == "json":
        return json.dumps(circuit_to_dict(c))
    if format not in ("qasm", "qasm2", "qasm2-subset"):
        raise ValueError(f"unknown circuit format {format!r}")
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.n}];", f"creg c[{c.n}];"]
    n_meas = 0
    for g in c.gates:
        args = ",".join(f"q[{q}]" for q in g.qubits)
        if g.kind is GateKind.MEASURE:
            lines.append(f"measure q[{g.qubits[0]}] -> c[{min(n_meas, c.n - 1)}];")
            n_meas += 1
        elif g.kind is GateKind.RZ:
            lines.append(f"rz({g.theta!r}) {args};")
        else:
            lines.append(f"{g.kind.value} {args};")
    return "\n".join(lines) + "\n"


def load_circuit(path) -> Circuit:
    from pathlib import Path

    path = Path(path)
    fmt = "json" if path.suffix == ".json" else "qasm"
    return parse_circuit(path.read_text(), fmt)


def concat(*circuits: Circuit) -> Circuit:
    n = max((c.n for c in circuits), default=0)
    gates: list[GateOp] = []
    for c in circuits:
        gates.extend(c.gates)
    return Circuit(n, tuple(gates))


def from_gates(n: int, gates: Iterable[GateOp]) -> Circuit:
    return Circuit(n, tuple(gates))
