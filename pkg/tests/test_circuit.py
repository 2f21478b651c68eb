import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcut.circuit import (
    Circuit,
    CutPoint,
    Gate,
    build_clustered_ruc,
    circuit_from_json,
    circuit_to_json,
    cluster_sizes,
    clustered_topology,
    cut_circuit,
    cuts_from_json,
    cuts_to_json,
    haar_random_unitary,
)
from qcut.errors import CircuitParseError, CutSetError, InvalidArgumentError

from conftest import ghz_circuit


@pytest.mark.parametrize("dim", [2, 4, 8])
def test_haar_unitary_is_unitary(dim):
    u = haar_random_unitary(dim, np.random.default_rng(dim))
    assert np.abs(u.conj().T @ u - np.eye(dim)).max() < 1e-12


def test_haar_unitary_deterministic():
    a = haar_random_unitary(4, np.random.default_rng(7))
    b = haar_random_unitary(4, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_haar_trace_moment():
    # the Haar average of |tr U|^2 is 1 in every dimension
    rng = np.random.default_rng(1)
    samples = np.array([abs(np.trace(haar_random_unitary(2, rng))) ** 2 for _ in range(10_000)])
    stderr = samples.std() / np.sqrt(samples.size)
    assert abs(samples.mean() - 1) < 5 * stderr


def test_haar_rejects_bad_dimension():
    with pytest.raises(InvalidArgumentError):
        haar_random_unitary(3, np.random.default_rng())


def test_cluster_sizes():
    assert cluster_sizes(10, 3) == [4, 3, 3]
    assert cluster_sizes(4, 2) == [2, 2]


def test_clustered_ruc_layout():
    circuit, cuts = build_clustered_ruc(10, 3, np.random.default_rng(0))
    # 3 cluster unitaries, 2 bridging gates, 3 cluster unitaries
    assert len(circuit.gates) == 8
    bridges = [g for g in circuit.gates if g.num_qubits == 2 and g.targets in ((3, 4), (6, 7))]
    assert len(bridges) == 2
    # both sides of each bridging gate are cut on the upper cluster's last wire
    assert len(cuts) == 4
    assert {c.wire for c in cuts} == {3, 6}


def test_clustered_ruc_smallest():
    circuit, cuts = build_clustered_ruc(4, 2, np.random.default_rng(0))
    assert len(cuts) == 2
    graph = cut_circuit(circuit, cuts)
    assert len(graph.fragments) == 2


@pytest.mark.parametrize("q,f", [(3, 2), (5, 3)])
def test_clustered_ruc_inadmissible(q, f):
    with pytest.raises(InvalidArgumentError):
        build_clustered_ruc(q, f, np.random.default_rng(0))


def test_clustered_topology_ten_three():
    graph = clustered_topology(10, 3)
    assert [(f.q_in, f.q_out) for f in graph.fragments] == [(1, 1), (2, 2), (1, 1)]
    assert [f.classical_output_count for f in graph.fragments] == [4, 3, 3]
    assert graph.num_cuts == 4
    assert graph.num_variants == 12 + 144 + 12


@given(st.integers(2, 4).flatmap(lambda f: st.tuples(st.just(f), st.integers(2 * f, 14))))
@settings(max_examples=25, deadline=None)
def test_clustered_topology_invariants(fq):
    f, q = fq
    graph = clustered_topology(q, f)
    assert len(graph.fragments) == f
    assert sum(fr.classical_output_count for fr in graph.fragments) == q
    assert graph.num_cuts == 2 * (f - 1)
    # each quantum slot is used by exactly one stitch
    outs = sorted((s.upstream, s.output_slot) for s in graph.stitches)
    ins = sorted((s.downstream, s.input_slot) for s in graph.stitches)
    assert outs == sorted({(fr.index, k) for fr in graph.fragments for k in range(fr.q_out)})
    assert ins == sorted({(fr.index, k) for fr in graph.fragments for k in range(fr.q_in)})
    assert sorted(graph.output_order.values()) == list(range(q))


def test_ghz_cut(ghz_graph):
    a, b = ghz_graph.fragments
    assert (a.q_in, a.q_out) == (0, 1)
    assert (b.q_in, b.q_out) == (1, 0)
    assert a.wires == (0, 1) and b.wires == (1, 2)
    assert len(ghz_graph.stitches) == 1
    assert ghz_graph.stitches[0].upstream == 0 and ghz_graph.stitches[0].downstream == 1
    assert len(a.subcircuit.gates) == 2 and len(b.subcircuit.gates) == 1


def test_cut_errors(ghz):
    with pytest.raises(CutSetError):
        cut_circuit(ghz, [])
    with pytest.raises(InvalidArgumentError):
        cut_circuit(ghz, [CutPoint(1, 1), CutPoint(1, 1)])
    with pytest.raises(InvalidArgumentError):
        cut_circuit(ghz, [CutPoint(2, 0)])  # gate 0 does not touch wire 2
    with pytest.raises(InvalidArgumentError):
        cut_circuit(ghz, [CutPoint(2, 2)])  # nothing after the last gate on wire 2


def test_cut_that_does_not_disconnect():
    circuit = Circuit(2, (Gate(np.eye(4), (0, 1)), Gate(np.eye(4), (0, 1))))
    with pytest.raises(CutSetError):
        cut_circuit(circuit, [CutPoint(0, 0)])


def test_gate_validation():
    with pytest.raises(InvalidArgumentError):
        Gate(np.ones((2, 2)), (0,))
    with pytest.raises(InvalidArgumentError):
        Gate(np.eye(4), (0,))
    with pytest.raises(InvalidArgumentError):
        Gate(np.eye(4), (1, 1))
    with pytest.raises(InvalidArgumentError):
        Circuit(1, (Gate(np.eye(2), (1,)),))


@pytest.mark.parametrize("q,f,seed", [(6, 2, 0), (9, 3, 1)])
def test_json_round_trip(q, f, seed):
    circuit, cuts = build_clustered_ruc(q, f, np.random.default_rng(seed))
    assert circuit_from_json(circuit_to_json(circuit)) == circuit
    assert cuts_from_json(json.loads(json.dumps(cuts_to_json(cuts)))) == cuts


def test_ghz_json_fixture():
    s = 2**-0.5
    text = json.dumps(
        {
            "num_qubits": 3,
            "gates": [
                {"targets": [0], "matrix": [[[s, 0], [s, 0]], [[s, 0], [-s, 0]]]},
                {"targets": [0, 1], "matrix": [[[float(v), 0] for v in row] for row in np.eye(4)[[0, 1, 3, 2]]]},
                {"targets": [1, 2], "matrix": [[[float(v), 0] for v in row] for row in np.eye(4)[[0, 1, 3, 2]]]},
            ],
        }
    )
    circuit = circuit_from_json(text)
    assert circuit.num_qubits == 3 and len(circuit.gates) == 3
    assert np.allclose(circuit.gates[1].matrix, ghz_circuit().gates[1].matrix)


def test_json_non_unitary_names_gate():
    doc = json.loads(circuit_to_json(ghz_circuit()))
    doc["gates"][2]["matrix"][0][0] = [2.0, 0.0]
    with pytest.raises(CircuitParseError, match=r"gates\[2\]"):
        circuit_from_json(json.dumps(doc))


def test_json_syntax_error_reports_position():
    with pytest.raises(CircuitParseError, match="line 2"):
        circuit_from_json('{"num_qubits": 1,\n "gates": [}')


def test_json_missing_fields():
    with pytest.raises(CircuitParseError):
        circuit_from_json('{"gates": []}')
    with pytest.raises(CircuitParseError):
        circuit_from_json('{"num_qubits": 1, "gates": [{"targets": [0]}]}')
