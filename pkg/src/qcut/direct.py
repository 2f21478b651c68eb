"""
Direct fragment characterization: conditional distributions indexed by Pauli eigenstates.

Table axes follow the fragment's cuts, quantum inputs first and then quantum outputs (slot order),
each with one entry per eigenstate condition in CONDITIONS order, followed by a classical-bitstring
axis.  Preparation-side entries that were never prepared hold NaN until completion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from qcut.circuit import Fragment
from qcut.errors import IncompleteDataError
from qcut.fragsim import VariantCounts, VariantDistribution, VariantKey, variant_keys
from qcut.recombine import FragmentTensor

CONDITIONS = ("Z+", "Z-", "X+", "X-", "Y+", "Y-")
_INDEX = {label: i for i, label in enumerate(CONDITIONS)}

# rows I, X, Y, Z; the identity averages the three eigenbases
EIGEN_TO_PAULI = np.array(
    [
        [1 / 3] * 6,
        [0, 0, 1, -1, 0, 0],
        [0, 0, 0, 0, 1, -1],
        [1, -1, 0, 0, 0, 0],
    ]
)

VariantData = Union[VariantCounts, VariantDistribution, np.ndarray]


def frequencies(data: VariantData) -> np.ndarray:
    """Outcome frequencies of a variant, shaped (2^Q_o, 2^C_o)."""
    if isinstance(data, VariantCounts):
        return data.frequencies
    if isinstance(data, VariantDistribution):
        return data.probs
    return np.asarray(data, dtype=float)


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    fragment: Fragment
    values: np.ndarray

    @property
    def completed(self) -> bool:
        return not np.isnan(self.values).any()

    def condition(self, *labels: str) -> np.ndarray:
        """Sub-normalized distribution over classical bitstrings for one condition per cut."""
        return self.values[tuple(_INDEX[label] for label in labels)]

    def as_dict(self) -> dict[str, dict[str, float]]:
        c_out = self.fragment.classical_output_count
        out = {}
        for index in np.ndindex(self.values.shape[:-1]):
            label = "|".join(CONDITIONS[i] for i in index)
            dist = self.values[index]
            out[label] = {format(s, f"0{c_out}b") if c_out else "": float(v) for s, v in enumerate(dist)}
        return out


def tabulate_conditions(fragment: Fragment, data: Mapping[VariantKey, VariantData]) -> ConditionalTable:
    """Credit each variant's outcome frequencies to the matching eigenstate conditions."""
    cuts = fragment.q_in + fragment.q_out
    shape = (len(CONDITIONS),) * cuts + (2**fragment.classical_output_count,)
    values = np.full(shape, np.nan)
    for key in variant_keys(fragment):
        if key not in data:
            raise IncompleteDataError(f"missing data for variant {key.label()}")
        freqs = frequencies(data[key]).reshape((2,) * fragment.q_out + (-1,))
        prep_index = tuple(_INDEX[label] for label in key.preparations)
        meas_index = np.ix_(*[[_INDEX[basis + "+"], _INDEX[basis + "-"]] for basis in key.bases])
        values[prep_index + tuple(meas_index)] = freqs
    return ConditionalTable(fragment, values)


def complete_preparation_conditions(table: ConditionalTable) -> ConditionalTable:
    """Fill X- and Y- on every preparation axis from Z+ + Z- = X+ + X- = Y+ + Y-."""
    values = table.values.copy()
    for axis in range(table.fragment.q_in):
        view = np.moveaxis(values, axis, 0)
        identity = view[_INDEX["Z+"]] + view[_INDEX["Z-"]]
        view[_INDEX["X-"]] = identity - view[_INDEX["X+"]]
        view[_INDEX["Y-"]] = identity - view[_INDEX["Y+"]]
    return ConditionalTable(table.fragment, values)


def pauli_tensor(table: ConditionalTable) -> FragmentTensor:
    if not table.completed:
        raise IncompleteDataError("conditional table has unpopulated conditions; complete it first")
    values = table.values
    for axis in range(table.fragment.q_in + table.fragment.q_out):
        values = np.moveaxis(np.tensordot(EIGEN_TO_PAULI, values, axes=(1, axis)), 0, axis)
    return FragmentTensor.for_fragment(table.fragment, values)


def direct_tensor(fragment: Fragment, data: Mapping[VariantKey, VariantData]) -> FragmentTensor:
    return pauli_tensor(complete_preparation_conditions(tabulate_conditions(fragment, data)))
