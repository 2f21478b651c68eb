"""Fidelities between distributions, analytic infidelity estimates and instance statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from qcut.circuit import FragmentGraph
from qcut.errors import InvalidArgumentError, InvalidDistributionError

Distribution = Union[np.ndarray, Mapping[object, float]]


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


@dataclass(frozen=True)
class InstanceStats:
    mean: float
    std: float
    count: int


def _aligned(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        p = dict(p) if isinstance(p, Mapping) else dict(enumerate(np.asarray(p)))
        q = dict(q) if isinstance(q, Mapping) else dict(enumerate(np.asarray(q)))
        keys = list(dict.fromkeys([*p, *q]))
        return (
            np.array([p.get(k, 0.0) for k in keys], dtype=float),
            np.array([q.get(k, 0.0) for k in keys], dtype=float),
        )
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InvalidArgumentError(f"distributions have shapes {p.shape} and {q.shape}")
    return p, q


def fidelity(p: Distribution, q: Distribution) -> FidelityReport:
    """Squared Bhattacharyya overlap; keys missing from one side count as probability zero."""
    p, q = _aligned(p, q)
    if (p < 0).any() or (q < 0).any():
        raise InvalidDistributionError("fidelity needs non-negative distributions")
    return FidelityReport(float(np.sum(np.sqrt(p * q)) ** 2))


def expected_infidelity_full(num_qubits: int, shots: int) -> float:
    """Second-order expected infidelity of sampling a generic Q-qubit distribution S times."""
    if shots <= 0:
        raise InvalidArgumentError("shot count must be positive")
    return (2**num_qubits - 1) / (4 * shots)


def legend_infidelity_full(num_qubits: int, shots: int) -> float:
    """The coarser 2^Q / S scaling form for full-circuit sampling."""
    if shots <= 0:
        raise InvalidArgumentError("shot count must be positive")
    return 2**num_qubits / shots


@dataclass(frozen=True)
class CutInfidelityEstimate:
    estimate: float
    bound: float


def estimate_infidelity_cut(graph: FragmentGraph, n: int) -> CutInfidelityEstimate:
    """
    Scaling estimate sum_f 2^C_o / n for cut-and-reconstruct, and the pessimistic bound
    (4^K / n) sum_f 2^(C_o - Q_i).
    """
    if n <= 0:
        raise InvalidArgumentError("shots per variant must be positive")
    estimate = sum(2.0**f.classical_output_count for f in graph.fragments) / n
    bound = 4.0**graph.num_cuts / n * sum(2.0 ** (f.classical_output_count - f.q_in) for f in graph.fragments)
    return CutInfidelityEstimate(estimate, bound)


def second_order_infidelity(p: Distribution, epsilon: Distribution) -> float:
    """Infidelity of p + epsilon against p, expanded to second order in epsilon."""
    if isinstance(epsilon, Mapping) and isinstance(p, Mapping) and not set(epsilon) <= set(p):
        raise InvalidArgumentError("epsilon has support outside p")
    p, eps = _aligned(p, epsilon)
    support = eps != 0
    if (p[support] <= 0).any():
        raise InvalidArgumentError("epsilon is non-zero where p vanishes")
    total = eps.sum()
    return float(-total - total**2 / 4 + np.sum(eps[support] ** 2 / p[support]) / 4)


def instance_stats(values: Sequence[float]) -> InstanceStats:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("no values to summarize")
    return InstanceStats(float(values.mean()), float(values.std()), int(values.size))
