"""Dense statevector simulation of circuits and fragment variants, plus shot sampling."""
from __future__ import annotations

import itertools
import os
import warnings
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from qcut.circuit import Circuit, Fragment
from qcut.errors import InvalidArgumentError, ResourceError

DEFAULT_STATEVECTOR_LIMIT = 26

PREP_LABELS = ("Z+", "Z-", "X+", "Y+")
BASES = ("Z", "X", "Y")

_S2 = 1 / np.sqrt(2)
PREP_STATES = {
    "Z+": np.array([1, 0], dtype=complex),
    "Z-": np.array([0, 1], dtype=complex),
    "X+": np.array([_S2, _S2], dtype=complex),
    "X-": np.array([_S2, -_S2], dtype=complex),
    "Y+": np.array([_S2, 1j * _S2], dtype=complex),
    "Y-": np.array([_S2, -1j * _S2], dtype=complex),
}

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _S2
# rotations taking the +1 eigenstate of each basis to |0>
BASIS_ROTATIONS = {
    "Z": np.eye(2, dtype=complex),
    "X": _HADAMARD,
    "Y": _HADAMARD @ np.diag([1, -1j]),
}


class DegenerateSampleWarning(UserWarning):
    pass


def statevector_limit() -> int:
    value = os.environ.get("QCUT_STATEVECTOR_LIMIT")
    return int(value) if value else DEFAULT_STATEVECTOR_LIMIT


def _check_size(num_qubits: int, limit: int | None) -> None:
    limit = statevector_limit() if limit is None else limit
    if num_qubits > limit:
        raise ResourceError(f"{num_qubits} qubits exceeds the statevector limit of {limit}")


def apply_gate(state: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a gate to a state stored as a tensor with one axis of size 2 per qubit."""
    k = len(targets)
    tensor = matrix.reshape((2,) * (2 * k))
    state = np.tensordot(tensor, state, axes=(list(range(k, 2 * k)), list(targets)))
    return np.moveaxis(state, list(range(k)), list(targets))


def simulate(circuit: Circuit, initial: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Final state tensor of a circuit run on a product of single-qubit states (default |0...0>)."""
    n = circuit.num_qubits
    if initial is None:
        state = np.zeros((2,) * n, dtype=complex)
        state[(0,) * n] = 1
    else:
        state = np.ones((), dtype=complex)
        for vec in initial:
            state = np.multiply.outer(state, vec)
    for gate in circuit.gates:
        state = apply_gate(state, gate.matrix, gate.targets)
    return state


####################################################################################################
# fragment variants


@dataclass(frozen=True)
class VariantKey:
    preparations: tuple[str, ...]
    bases: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "preparations", tuple(self.preparations))
        object.__setattr__(self, "bases", tuple(self.bases))
        if not set(self.preparations) <= set(PREP_LABELS):
            raise InvalidArgumentError(f"unknown preparation in {self.preparations}")
        if not set(self.bases) <= set(BASES):
            raise InvalidArgumentError(f"unknown measurement basis in {self.bases}")

    def label(self) -> str:
        return ",".join(self.preparations) + "|" + ",".join(self.bases)

    def to_json(self) -> dict:
        return {"preparations": list(self.preparations), "bases": list(self.bases)}

    @classmethod
    def from_json(cls, doc: Mapping) -> "VariantKey":
        return cls(tuple(doc["preparations"]), tuple(doc["bases"]))


def variant_keys(fragment: Fragment) -> Iterator[VariantKey]:
    for preps in itertools.product(PREP_LABELS, repeat=fragment.q_in):
        for bases in itertools.product(BASES, repeat=fragment.q_out):
            yield VariantKey(preps, bases)


@dataclass(frozen=True, eq=False)
class VariantDistribution:
    """
    Joint outcome distribution of one fragment variant.

    `probs[r, s]`: r indexes the quantum-output eigenvalues, bit 0 of an output meaning +1, and
    s indexes the classical-output bitstring.  Both use the fragment's local qubit order.
    """

    key: VariantKey
    probs: np.ndarray

    def as_dict(self) -> dict[tuple[tuple[int, ...], str], float]:
        q_out = self.probs.shape[0].bit_length() - 1
        c_out = self.probs.shape[1].bit_length() - 1
        out = {}
        for r, s in zip(*np.nonzero(self.probs)):
            signs = tuple(-1 if bit == "1" else 1 for bit in format(r, f"0{q_out}b")) if q_out else ()
            out[signs, format(s, f"0{c_out}b") if c_out else ""] = float(self.probs[r, s])
        return out


@dataclass(frozen=True, eq=False)
class VariantCounts:
    key: VariantKey
    n: int
    counts: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(self.counts.shape)
        return self.counts / self.n

    def to_json(self) -> dict:
        q_out = self.counts.shape[0].bit_length() - 1
        c_out = self.counts.shape[1].bit_length() - 1
        tallies = {}
        for r, s in zip(*np.nonzero(self.counts)):
            signs = "".join("-" if bit == "1" else "+" for bit in format(r, f"0{q_out}b")) if q_out else ""
            bits = format(s, f"0{c_out}b") if c_out else ""
            tallies[f"{signs}:{bits}"] = int(self.counts[r, s])
        return {"key": self.key.to_json(), "n": self.n, "q_out": q_out, "c_out": c_out, "counts": tallies}

    @classmethod
    def from_json(cls, doc: Mapping) -> "VariantCounts":
        q_out, c_out = int(doc["q_out"]), int(doc["c_out"])
        counts = np.zeros((2**q_out, 2**c_out), dtype=np.int64)
        for label, value in doc["counts"].items():
            signs, bits = label.split(":")
            r = int("".join("1" if sign == "-" else "0" for sign in signs) or "0", 2)
            counts[r, int(bits or "0", 2)] = value
        return cls(VariantKey.from_json(doc["key"]), int(doc["n"]), counts)


def exact_variant_distribution(
    fragment: Fragment, key: VariantKey, limit: int | None = None
) -> VariantDistribution:
    if len(key.preparations) != fragment.q_in or len(key.bases) != fragment.q_out:
        raise InvalidArgumentError(f"variant {key.label()} does not match the fragment's cuts")
    _check_size(fragment.num_qubits, limit)
    initial = [PREP_STATES["Z+"]] * fragment.num_qubits
    for qubit, label in zip(fragment.quantum_inputs, key.preparations):
        initial[qubit] = PREP_STATES[label]
    state = simulate(fragment.subcircuit, initial)
    for qubit, basis in zip(fragment.quantum_outputs, key.bases):
        state = apply_gate(state, BASIS_ROTATIONS[basis], (qubit,))
    order = list(fragment.quantum_outputs) + list(fragment.classical_outputs)
    probs = (np.abs(state) ** 2).transpose(order).reshape(2**fragment.q_out, 2**fragment.classical_output_count)
    return VariantDistribution(key, probs)


def exact_variant_distributions(
    fragment: Fragment, limit: int | None = None
) -> dict[VariantKey, VariantDistribution]:
    return {key: exact_variant_distribution(fragment, key, limit) for key in variant_keys(fragment)}


def _multinomial(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    flat = np.clip(probs.ravel(), 0, None)
    total = flat.sum()
    if total <= 0:
        raise InvalidArgumentError("cannot sample an all-zero distribution")
    return rng.multinomial(n, flat / total).reshape(probs.shape)


def sample_variant(dist: VariantDistribution, n: int, rng: np.random.Generator) -> VariantCounts:
    if n < 0:
        raise InvalidArgumentError("shot count must be non-negative")
    return VariantCounts(dist.key, n, _multinomial(dist.probs, n, rng))


####################################################################################################
# full circuits


def exact_full_distribution(circuit: Circuit, limit: int | None = None) -> np.ndarray:
    """Born probabilities of all 2^Q bitstrings, indexed with qubit 0 as the most significant bit."""
    _check_size(circuit.num_qubits, limit)
    return (np.abs(simulate(circuit)) ** 2).ravel()


def sample_full(
    circuit: Circuit,
    shots: int,
    rng: np.random.Generator,
    exact: np.ndarray | None = None,
    limit: int | None = None,
) -> np.ndarray:
    """Empirical frequencies from sampling the whole circuit `shots` times."""
    if shots < 0:
        raise InvalidArgumentError("shot count must be non-negative")
    if exact is None:
        exact = exact_full_distribution(circuit, limit)
    if shots == 0:
        warnings.warn("no shots taken; returning an empty distribution", DegenerateSampleWarning)
        return np.zeros_like(exact)
    return _multinomial(exact, shots, rng) / shots
