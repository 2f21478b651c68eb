import numpy as np
import pytest

from qcut.circuit import Circuit, CutPoint, Gate, cut_circuit

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def ghz_circuit() -> Circuit:
    return Circuit(3, (Gate(H, (0,)), Gate(CNOT, (0, 1)), Gate(CNOT, (1, 2))))


def ghz_cuts() -> list[CutPoint]:
    return [CutPoint(wire=1, position=1)]


@pytest.fixture
def ghz():
    return ghz_circuit()


@pytest.fixture
def ghz_graph():
    return cut_circuit(ghz_circuit(), ghz_cuts())


@pytest.fixture
def identity_graph():
    """One wire cut between two single-qubit gates: each fragment is one qubit."""
    x = np.array([[0, 1], [1, 0]])
    circuit = Circuit(1, (Gate(np.eye(2), (0,)), Gate(x, (0,))))
    return cut_circuit(circuit, [CutPoint(0, 0)])


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion, then assert it."""

    def check(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
