"""
Maximum-likelihood fragment tomography.

Each fragment is modelled by block-diagonal Choi blocks, one Hermitian matrix per classical output
bitstring s, acting on (quantum inputs) x (quantum outputs).  With a pure input state rho and a
projector P on the quantum outputs, the probability of outcome (P, s) is

    2^Q_i * tr[block_s (rho^T (x) P)],

so the blocks of a trace-preserving fragment sum to unit trace.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from qcut.circuit import Fragment
from qcut.direct import VariantData, frequencies
from qcut.errors import FitError, IncompleteDataError
from qcut.fragsim import BASIS_ROTATIONS, PREP_LABELS, PREP_STATES, VariantKey, variant_keys
from qcut.recombine import FragmentTensor

PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_PREP_PROJECTORS = {label: np.outer(PREP_STATES[label], PREP_STATES[label].conj()) for label in PREP_LABELS}
# projectors onto the +1 / -1 eigenstates of each measurement basis
_MEAS_PROJECTORS = {
    basis: [rot.conj().T @ np.diag(d) @ rot for d in ([1, 0], [0, 1])]
    for basis, rot in BASIS_ROTATIONS.items()
}


@dataclass(frozen=True, eq=False)
class ChoiBlocks:
    q_in: int
    q_out: int
    c_out: int
    blocks: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return 2 ** (self.q_in + self.q_out)

    @property
    def trace(self) -> float:
        return float(sum(np.trace(block).real for block in self.blocks.values()))

    def to_json(self) -> dict:
        def bits(s: int) -> str:
            return format(s, f"0{self.c_out}b") if self.c_out else ""

        return {
            "q_in": self.q_in,
            "q_out": self.q_out,
            "c_out": self.c_out,
            "blocks": {
                bits(s): [[[float(z.real), float(z.imag)] for z in row] for row in block]
                for s, block in sorted(self.blocks.items())
            },
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ChoiBlocks":
        blocks = {
            int(s or "0", 2): np.array([[complex(re, im) for re, im in row] for row in matrix])
            for s, matrix in doc["blocks"].items()
        }
        return cls(int(doc["q_in"]), int(doc["q_out"]), int(doc["c_out"]), blocks)


def hermitian_coordinates(op: np.ndarray) -> np.ndarray:
    """Real vector c with tr[H op] = c . x, where x are the coordinates of H (see from_coordinates)."""
    d = op.shape[0]
    upper = np.triu_indices(d, 1)
    return np.concatenate([op.diagonal().real, 2 * op[upper].real, 2 * op[upper].imag])


def from_coordinates(x: np.ndarray, d: int) -> np.ndarray:
    """Hermitian matrix with diagonal x[:d] and upper triangle x_re + i x_im."""
    upper = np.triu_indices(d, 1)
    m = len(upper[0])
    out = np.zeros((d, d), dtype=complex)
    out[upper] = x[d : d + m] + 1j * x[d + m :]
    out = out + out.conj().T
    out[np.diag_indices(d)] = x[:d]
    return out


@functools.lru_cache(maxsize=None)
def _design(q_in: int, q_out: int) -> tuple[np.ndarray, tuple]:
    """
    Least-squares design matrix over all (variant, output eigenvalues) rows and its factorization.

    Rows follow `variant_keys` order with the output-eigenvalue index varying fastest.
    """
    rows = []
    scale = 2**q_in
    for preps in itertools.product(PREP_LABELS, repeat=q_in):
        rho_t = np.ones((1, 1))
        for label in preps:
            rho_t = np.kron(rho_t, _PREP_PROJECTORS[label].T)
        for bases in itertools.product("ZXY", repeat=q_out):
            for signs in itertools.product((0, 1), repeat=q_out):
                proj = np.ones((1, 1))
                for basis, sign in zip(bases, signs):
                    proj = np.kron(proj, _MEAS_PROJECTORS[basis][sign])
                rows.append(hermitian_coordinates(scale * np.kron(rho_t, proj)))
    design = np.array(rows)
    gram = design.T @ design
    try:
        factor = ("cholesky", scipy.linalg.cho_factor(gram))
    except np.linalg.LinAlgError:
        factor = ("pinv", np.linalg.pinv(design, rcond=1e-10))
    return design, factor


def fit_ansatz(fragment: Fragment, data: Mapping[VariantKey, VariantData]) -> ChoiBlocks:
    """Least-squares Hermitian block for every classical bitstring observed in any variant."""
    q_in, q_out, c_out = fragment.q_in, fragment.q_out, fragment.classical_output_count
    targets = []
    for key in variant_keys(fragment):
        if key not in data:
            raise IncompleteDataError(f"missing data for variant {key.label()}")
        targets.append(frequencies(data[key]))
    target = np.concatenate(targets, axis=0)  # rows x bitstrings
    observed = np.flatnonzero(np.any(target != 0, axis=0))

    design, (kind, factor) = _design(q_in, q_out)
    if target.shape[0] != design.shape[0]:
        raise FitError("variant data does not match the fragment's design")
    rhs = target[:, observed]
    if kind == "cholesky":
        coords = scipy.linalg.cho_solve(factor, design.T @ rhs)
    else:
        coords = factor @ rhs
    if not np.all(np.isfinite(coords)):
        raise FitError("least-squares fit produced non-finite values")

    d = 2 ** (q_in + q_out)
    blocks = {int(s): from_coordinates(coords[:, j], d) for j, s in enumerate(observed)}
    return ChoiBlocks(q_in, q_out, c_out, blocks)


def project_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    """
    Closest unit-sum non-negative vector: repeatedly zero the most negative entry and spread the
    deficit uniformly over the entries that remain.
    """
    values = np.asarray(eigenvalues, dtype=float)
    count = values.size
    if count == 0:
        return values.copy()
    order = np.argsort(values, kind="stable")
    out = np.zeros(count)
    # every surviving entry equals its input value plus a common offset
    offset = (1.0 - values.sum()) / count
    removed = 0
    while removed < count - 1 and values[order[removed]] + offset < 0:
        offset += (values[order[removed]] + offset) / (count - removed - 1)
        removed += 1
    survivors = order[removed:]
    out[survivors] = values[survivors] + offset
    return out


def project_maximum_likelihood(ansatz: ChoiBlocks) -> ChoiBlocks:
    """Closest positive semidefinite, unit-trace block-diagonal state (Frobenius norm)."""
    keys = sorted(ansatz.blocks)
    if not keys:
        return ChoiBlocks(ansatz.q_in, ansatz.q_out, ansatz.c_out, {})
    spectra = [np.linalg.eigh(ansatz.blocks[s]) for s in keys]
    pooled = np.concatenate([vals for vals, _ in spectra])
    projected = project_spectrum(pooled)
    blocks = {}
    start = 0
    for s, (vals, vecs) in zip(keys, spectra):
        new = projected[start : start + len(vals)]
        start += len(vals)
        blocks[s] = (vecs * new) @ vecs.conj().T
    return ChoiBlocks(ansatz.q_in, ansatz.q_out, ansatz.c_out, blocks)


def tensor_from_choi(blocks: ChoiBlocks, fragment: Fragment) -> FragmentTensor:
    """F[M_in, M_out; s] = 2^Q_i tr[block_s (M_in^T (x) M_out)] for Paulis M = I, X, Y, Z."""
    if (blocks.q_in, blocks.q_out) != (fragment.q_in, fragment.q_out):
        raise FitError("Choi blocks do not match the fragment's cuts")
    n = blocks.q_in + blocks.q_out
    values = np.zeros((4,) * n + (2**blocks.c_out,))
    if not blocks.blocks:
        return FragmentTensor.for_fragment(fragment, values)
    keys = sorted(blocks.blocks)
    stack = np.array([blocks.blocks[s] for s in keys]).reshape((len(keys),) + (2,) * (2 * n))
    # tr[block P] = sum_ab block[a, b] P[b, a]; index k is row a_k, n + k is column b_k
    batch, paulis_out = 3 * n, list(range(2 * n, 3 * n))
    args: list = [stack, [batch] + list(range(2 * n))]
    for k in range(n):
        paulis = PAULIS.transpose(0, 2, 1) if k < blocks.q_in else PAULIS
        args += [paulis, [2 * n + k, n + k, k]]
    traced = np.einsum(*args, paulis_out + [batch], optimize=True)
    values[..., keys] = (2**blocks.q_in) * traced.real
    return FragmentTensor.for_fragment(fragment, values)
