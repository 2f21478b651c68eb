"""Stitching fragment tensors back into a distribution over the full circuit's bitstrings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qcut.circuit import Fragment, FragmentGraph
from qcut.errors import DegenerateReconstructionError, TopologyError

PAULI_LABELS = ("I", "X", "Y", "Z")


@dataclass(frozen=True, eq=False)
class FragmentTensor:
    """
    Real tensor with one Pauli axis (I, X, Y, Z) per incident cut and a classical-bitstring axis.

    `cut_axes` lists (stitch id, side) for each Pauli axis: quantum inputs first, then outputs.
    """

    fragment: int
    cut_axes: tuple[tuple[int, str], ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != len(self.cut_axes) + 1:
            raise TopologyError(
                f"tensor for fragment {self.fragment} has {self.values.ndim} axes, "
                f"expected {len(self.cut_axes) + 1}"
            )
        if any(size != 4 for size in self.values.shape[:-1]):
            raise TopologyError(f"cut axes of fragment {self.fragment} must have dimension 4")

    @classmethod
    def for_fragment(cls, fragment: Fragment, values: np.ndarray) -> "FragmentTensor":
        axes = tuple((sid, "input") for sid in fragment.input_stitches)
        axes += tuple((sid, "output") for sid in fragment.output_stitches)
        return cls(fragment.index, axes, np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class RawReconstruction:
    """Unclipped reconstruction over all 2^Q bitstrings (qubit 0 most significant)."""

    num_qubits: int
    values: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {
            format(b, f"0{self.num_qubits}b"): float(self.values[b]) for b in np.flatnonzero(self.values)
        }


def _validate(tensors: Sequence[FragmentTensor], graph: FragmentGraph) -> None:
    if len(tensors) != len(graph.fragments):
        raise TopologyError(f"got {len(tensors)} tensors for {len(graph.fragments)} fragments")
    for tensor, fragment in zip(tensors, graph.fragments):
        expected = FragmentTensor.for_fragment(fragment, np.zeros((4,) * (fragment.q_in + fragment.q_out) + (1,)))
        if tensor.fragment != fragment.index or tensor.cut_axes != expected.cut_axes:
            raise TopologyError(f"tensor axes {tensor.cut_axes} do not match fragment {fragment.index}")
        if tensor.values.shape[-1] != 2**fragment.classical_output_count:
            raise TopologyError(f"classical axis of fragment {fragment.index} has the wrong size")


def _default_order(graph: FragmentGraph) -> list[int]:
    order: list[int] = []
    for stitch in graph.stitches:
        for f in (stitch.upstream, stitch.downstream):
            if f not in order:
                order.append(f)
    order += [f for f in range(len(graph.fragments)) if f not in order]
    return order


def contract(
    tensors: Sequence[FragmentTensor],
    graph: FragmentGraph,
    order: Sequence[int] | None = None,
) -> RawReconstruction:
    """
    Sum products of fragment tensors over all shared Pauli indices, with weight 1/2 per cut.

    Fragments are absorbed one at a time in `order` (default: the order in which stitches first
    reach them); each absorption sums every stitch shared with the fragments already absorbed.
    Bitstrings never observed on a fragment are dropped before contracting.
    """
    _validate(tensors, graph)
    order = _default_order(graph) if order is None else list(order)
    if sorted(order) != list(range(len(graph.fragments))):
        raise TopologyError(f"contraction order {order} is not a permutation of the fragments")

    num_cuts = graph.num_cuts
    observed = []
    operands = []
    for tensor in tensors:
        flat = tensor.values.reshape(-1, tensor.values.shape[-1])
        keep = np.flatnonzero(np.any(flat != 0, axis=0))
        observed.append(keep)
        indices = [sid for sid, _ in tensor.cut_axes] + [num_cuts + tensor.fragment]
        operands.append((tensor.values[..., keep], indices))

    def absorb(*pairs):
        flat = [i for _, indices in pairs for i in indices]
        out = [i for i in dict.fromkeys(flat) if flat.count(i) == 1]
        args = [x for values, indices in pairs for x in (values, indices)]
        return np.einsum(*args, out), out

    # a stitch with both ends on one fragment is traced out on absorption
    result, result_indices = absorb(operands[order[0]])
    for f in order[1:]:
        result, result_indices = absorb((result, result_indices), operands[f])

    frag_order = [i - num_cuts for i in result_indices]
    result = np.transpose(result, np.argsort(frag_order)) / 2.0**num_cuts

    sizes = [2**f.classical_output_count for f in graph.fragments]
    dense = np.zeros(sizes)
    dense[np.ix_(*observed)] = result

    # reorder fragment bits into global wire order
    wires = [graph.output_order[f.index, w] for f in graph.fragments for w in f.classical_output_wires]
    bits = dense.reshape((2,) * graph.num_qubits)
    values = np.transpose(bits, np.argsort(wires)).ravel()
    return RawReconstruction(graph.num_qubits, values)


def negative_mass(raw: RawReconstruction | np.ndarray) -> float:
    values = raw.values if isinstance(raw, RawReconstruction) else np.asarray(raw)
    return max(0.0, float(-values[values < 0].sum()))


def clip_and_normalize(raw: RawReconstruction | np.ndarray) -> np.ndarray:
    """Zero out negative entries and rescale to unit total."""
    values = raw.values if isinstance(raw, RawReconstruction) else np.asarray(raw, dtype=float)
    clipped = np.where(values > 0, values, 0.0)
    total = clipped.sum()
    if total <= 0:
        raise DegenerateReconstructionError("reconstruction has no positive entries")
    return clipped / total
