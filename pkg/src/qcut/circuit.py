"""
Circuits made of dense unitary gates, clustered random circuits, and cutting into fragments.

Qubit 0 is the most significant bit of every bitstring produced by this package.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from qcut.errors import CircuitParseError, CutSetError, InvalidArgumentError

UNITARITY_TOL = 1e-12


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True, eq=False)
class Gate:
    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "targets", targets)
        if matrix.ndim != 2 or matrix.shape != (2 ** len(targets),) * 2:
            raise InvalidArgumentError(
                f"gate matrix of shape {matrix.shape} does not act on {len(targets)} qubit(s)"
            )
        if len(set(targets)) != len(targets) or any(t < 0 for t in targets):
            raise InvalidArgumentError(f"invalid gate targets {targets}")
        deviation = np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
        if deviation >= UNITARITY_TOL:
            raise InvalidArgumentError(f"gate matrix is not unitary (max|U'U - I| = {deviation:.2e})")

    @property
    def num_qubits(self) -> int:
        return len(self.targets)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gate):
            return NotImplemented
        return self.targets == other.targets and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash((self.targets, self.matrix.tobytes()))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 0:
            raise InvalidArgumentError("num_qubits must be non-negative")
        for index, gate in enumerate(self.gates):
            if max(gate.targets) >= self.num_qubits:
                raise InvalidArgumentError(
                    f"gate {index} targets {gate.targets} outside a {self.num_qubits}-qubit circuit"
                )


@dataclass(frozen=True, order=True)
class CutPoint:
    """A cut on `wire` placed immediately after the gate at index `position`."""

    wire: int
    position: int


####################################################################################################
# random circuits


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a Haar-random unitary by QR-decomposing a complex Ginibre matrix."""
    if dim < 2 or not _is_power_of_two(dim):
        raise InvalidArgumentError(f"dimension must be a power of two >= 2, got {dim}")
    ginibre = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r)
    # fix the phase freedom of QR so the output is Haar distributed
    phases = diag / np.abs(diag)
    return q * phases


def cluster_sizes(num_qubits: int, num_clusters: int) -> list[int]:
    """Split qubits as evenly as possible, larger clusters first."""
    base, extra = divmod(num_qubits, num_clusters)
    return [base + int(index < extra) for index in range(num_clusters)]


def build_clustered_ruc(
    num_qubits: int, num_fragments: int, rng: np.random.Generator
) -> tuple[Circuit, list[CutPoint]]:
    """
    Build a clustered random unitary circuit and the cuts that split it into one fragment per cluster.

    Layers: a Haar unitary on every cluster, a Haar two-qubit gate between the last qubit of each
    cluster and the first qubit of the next, then another Haar unitary on every cluster.  The
    lower-indexed cluster's wire is cut on both sides of each inter-cluster gate, so the gate joins
    the fragment of the higher-indexed cluster and the circuit has 2 * (num_fragments - 1) cuts.
    """
    if num_fragments < 2:
        raise InvalidArgumentError("need at least two fragments")
    if num_qubits < 2 * num_fragments:
        raise InvalidArgumentError(
            f"{num_qubits} qubits cannot form {num_fragments} clusters of at least two qubits"
        )
    sizes = cluster_sizes(num_qubits, num_fragments)
    starts = np.cumsum([0] + sizes[:-1]).tolist()
    clusters = [tuple(range(start, start + size)) for start, size in zip(starts, sizes)]

    gates: list[Gate] = []
    for cluster in clusters:
        gates.append(Gate(haar_random_unitary(2 ** len(cluster), rng), cluster))
    cuts = []
    for index, (upper, lower) in enumerate(zip(clusters[:-1], clusters[1:])):
        cuts.append(CutPoint(upper[-1], index))
        cuts.append(CutPoint(upper[-1], len(gates)))
        gates.append(Gate(haar_random_unitary(4, rng), (upper[-1], lower[0])))
    for cluster in clusters:
        gates.append(Gate(haar_random_unitary(2 ** len(cluster), rng), cluster))
    return Circuit(num_qubits, tuple(gates)), sorted(cuts, key=lambda cut: (cut.position, cut.wire))


####################################################################################################
# fragments


@dataclass(frozen=True)
class Fragment:
    """
    A subcircuit produced by cutting.

    Local qubit q of `subcircuit` is a segment of the original wire `wires[q]`.  Quantum inputs and
    outputs are local qubit indices in ascending order; their positions in these tuples are the
    "slots" referenced by stitches.  Classical outputs are listed in local qubit order, which is
    also the bit order of the fragment's classical bitstrings.
    """

    index: int
    subcircuit: Circuit
    wires: tuple[int, ...]
    quantum_inputs: tuple[int, ...]
    quantum_outputs: tuple[int, ...]
    input_stitches: tuple[int, ...] = ()
    output_stitches: tuple[int, ...] = ()

    @property
    def num_qubits(self) -> int:
        return self.subcircuit.num_qubits

    @property
    def q_in(self) -> int:
        return len(self.quantum_inputs)

    @property
    def q_out(self) -> int:
        return len(self.quantum_outputs)

    @property
    def classical_input_count(self) -> int:
        return self.num_qubits - self.q_in

    @property
    def classical_output_count(self) -> int:
        return self.num_qubits - self.q_out

    @property
    def classical_outputs(self) -> tuple[int, ...]:
        quantum = set(self.quantum_outputs)
        return tuple(q for q in range(self.num_qubits) if q not in quantum)

    @property
    def classical_output_wires(self) -> tuple[int, ...]:
        return tuple(self.wires[q] for q in self.classical_outputs)

    @property
    def num_variants(self) -> int:
        return 4**self.q_in * 3**self.q_out


@dataclass(frozen=True)
class Stitch:
    upstream: int
    output_slot: int
    downstream: int
    input_slot: int


@dataclass(frozen=True)
class FragmentGraph:
    num_qubits: int
    fragments: tuple[Fragment, ...]
    stitches: tuple[Stitch, ...]
    output_order: Mapping[tuple[int, int], int] = field(default_factory=dict)

    @property
    def num_cuts(self) -> int:
        return len(self.stitches)

    @property
    def num_variants(self) -> int:
        return sum(fragment.num_variants for fragment in self.fragments)


class _DisjointSet:
    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, item: int) -> int:
        while self.parent[item] != item:
            self.parent[item] = self.parent[self.parent[item]]
            item = self.parent[item]
        return item

    def union(self, a: int, b: int) -> None:
        root_a, root_b = self.find(a), self.find(b)
        if root_a != root_b:
            self.parent[max(root_a, root_b)] = min(root_a, root_b)


def cut_circuit(circuit: Circuit, cuts: Iterable[CutPoint]) -> FragmentGraph:
    """
    Sever the given wires and collect the connected pieces of the circuit into fragments.

    Fragments are ordered by their earliest gate; stitches are ordered by (position, wire) of the
    cuts that produced them.  Wires without gates become single-qubit fragments.
    """
    cuts = sorted(cuts, key=lambda cut: (cut.position, cut.wire))
    if not cuts:
        raise CutSetError("no cuts given")
    if len(set(cuts)) != len(cuts):
        raise InvalidArgumentError("a wire is cut twice at the same position")

    gates = circuit.gates
    wire_gates: list[list[int]] = [[] for _ in range(circuit.num_qubits)]
    for index, gate in enumerate(gates):
        for wire in gate.targets:
            wire_gates[wire].append(index)

    wire_cuts: list[list[int]] = [[] for _ in range(circuit.num_qubits)]
    for cut in cuts:
        if not 0 <= cut.wire < circuit.num_qubits:
            raise InvalidArgumentError(f"cut wire {cut.wire} outside the circuit")
        if not 0 <= cut.position < len(gates) or cut.wire not in gates[cut.position].targets:
            raise InvalidArgumentError(f"{cut} does not follow a gate acting on wire {cut.wire}")
        wire_cuts[cut.wire].append(cut.position)

    # segment (wire, k) holds the gates on `wire` between its k-th and (k+1)-th cut
    def segment_of(wire: int, gate_index: int) -> int:
        return sum(position < gate_index for position in wire_cuts[wire])

    segments: dict[tuple[int, int], list[int]] = {}
    for wire in range(circuit.num_qubits):
        for k in range(len(wire_cuts[wire]) + 1):
            segments[wire, k] = []
        for gate_index in wire_gates[wire]:
            segments[wire, segment_of(wire, gate_index)].append(gate_index)
    for (wire, k), members in segments.items():
        if k > 0 and not members:
            raise InvalidArgumentError(f"cut on wire {wire} has no gate downstream of it")

    components = _DisjointSet(len(gates))
    for members in segments.values():
        for gate_index in members[1:]:
            components.union(members[0], gate_index)

    # group segments by component; gateless wires get a component of their own
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for (wire, k), members in segments.items():
        label = (0, components.find(members[0])) if members else (1, wire)
        groups.setdefault(label, []).append((wire, k))
    if len(groups) < 2:
        raise CutSetError("the cuts do not split the circuit into separate fragments")

    def first_gate(label: tuple[int, int]) -> tuple[int, int]:
        kind, value = label
        if kind == 1:
            return (1, value)
        return (0, min(g for seg in groups[label] for g in segments[seg]))

    ordered = sorted(groups, key=first_gate)
    locate: dict[tuple[int, int], tuple[int, int]] = {}  # segment -> (fragment, local qubit)
    fragment_segments = []
    for f, label in enumerate(ordered):
        segs = sorted(groups[label])
        fragment_segments.append(segs)
        for local, seg in enumerate(segs):
            locate[seg] = (f, local)

    # stitch i joins the end of segment (wire, k) to the start of segment (wire, k + 1)
    stitch_ends = []
    for cut in cuts:
        k = wire_cuts[cut.wire].index(cut.position)
        stitch_ends.append((locate[cut.wire, k], locate[cut.wire, k + 1]))

    fragments = []
    output_order: dict[tuple[int, int], int] = {}
    for f, segs in enumerate(fragment_segments):
        last = {wire: len(wire_cuts[wire]) for wire, _ in segs}
        local_of = {seg: local for local, seg in enumerate(segs)}
        frag_gates = sorted({g for seg in segs for g in segments[seg]})
        sub_gates = []
        for gate_index in frag_gates:
            gate = gates[gate_index]
            targets = tuple(local_of[w, segment_of(w, gate_index)] for w in gate.targets)
            sub_gates.append(Gate(gate.matrix, targets))
        quantum_inputs = tuple(local for local, (wire, k) in enumerate(segs) if k > 0)
        quantum_outputs = tuple(local for local, (wire, k) in enumerate(segs) if k < last[wire])
        input_stitches = []
        for local in quantum_inputs:
            input_stitches.append(next(i for i, (_, down) in enumerate(stitch_ends) if down == (f, local)))
        output_stitches = []
        for local in quantum_outputs:
            output_stitches.append(next(i for i, (up, _) in enumerate(stitch_ends) if up == (f, local)))
        fragment = Fragment(
            index=f,
            subcircuit=Circuit(len(segs), tuple(sub_gates)),
            wires=tuple(wire for wire, _ in segs),
            quantum_inputs=quantum_inputs,
            quantum_outputs=quantum_outputs,
            input_stitches=tuple(input_stitches),
            output_stitches=tuple(output_stitches),
        )
        fragments.append(fragment)
        for wire in fragment.classical_output_wires:
            output_order[f, wire] = wire

    stitches = []
    for (up_f, up_local), (down_f, down_local) in stitch_ends:
        stitches.append(
            Stitch(
                upstream=up_f,
                output_slot=fragments[up_f].quantum_outputs.index(up_local),
                downstream=down_f,
                input_slot=fragments[down_f].quantum_inputs.index(down_local),
            )
        )
    return FragmentGraph(circuit.num_qubits, tuple(fragments), tuple(stitches), output_order)


def clustered_topology(num_qubits: int, num_fragments: int) -> FragmentGraph:
    """Fragment graph of a clustered circuit; the structure does not depend on the random gates."""
    circuit, cuts = build_clustered_ruc(num_qubits, num_fragments, np.random.default_rng(0))
    return cut_circuit(circuit, cuts)


####################################################################################################
# JSON


def _matrix_to_json(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "num_qubits": circuit.num_qubits,
        "gates": [
            {"targets": list(gate.targets), "matrix": _matrix_to_json(gate.matrix)}
            for gate in circuit.gates
        ],
    }


def circuit_to_json(circuit: Circuit, indent: int | None = None) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=indent)


def circuit_from_dict(doc: object) -> Circuit:
    if not isinstance(doc, dict) or "num_qubits" not in doc or "gates" not in doc:
        raise CircuitParseError("circuit document needs 'num_qubits' and 'gates'")
    num_qubits = doc["num_qubits"]
    if not isinstance(num_qubits, int) or num_qubits < 0:
        raise CircuitParseError("'num_qubits' must be a non-negative integer")
    if not isinstance(doc["gates"], list):
        raise CircuitParseError("'gates' must be a list")
    gates = []
    for index, entry in enumerate(doc["gates"]):
        where = f"gates[{index}]"
        try:
            targets = tuple(entry["targets"])
            matrix = np.array(
                [[complex(re, im) for re, im in row] for row in entry["matrix"]], dtype=complex
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CircuitParseError(f"{where}: malformed gate ({exc})") from None
        if not all(isinstance(t, int) for t in targets):
            raise CircuitParseError(f"{where}: targets must be integers")
        if any(t >= num_qubits for t in targets):
            raise CircuitParseError(f"{where}: targets {targets} outside a {num_qubits}-qubit circuit")
        try:
            gates.append(Gate(matrix, targets))
        except InvalidArgumentError as exc:
            raise CircuitParseError(f"{where}: {exc}") from None
    return Circuit(num_qubits, tuple(gates))


def circuit_from_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return circuit_from_dict(doc)


def cuts_to_json(cuts: Sequence[CutPoint]) -> list[dict]:
    return [{"wire": cut.wire, "position": cut.position} for cut in cuts]


def cuts_from_json(doc: Sequence[Mapping]) -> list[CutPoint]:
    try:
        return [CutPoint(int(entry["wire"]), int(entry["position"])) for entry in doc]
    except (KeyError, TypeError, ValueError) as exc:
        raise CircuitParseError(f"malformed cut list ({exc})") from None
