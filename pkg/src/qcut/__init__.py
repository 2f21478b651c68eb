"""Circuit cutting with fragment tomography: direct and maximum-likelihood reconstruction."""
from qcut.circuit import (
    Circuit,
    CutPoint,
    Fragment,
    FragmentGraph,
    Gate,
    build_clustered_ruc,
    cut_circuit,
)
from qcut.direct import direct_tensor
from qcut.fragsim import exact_full_distribution, sample_full, sample_variant
from qcut.metrics import fidelity
from qcut.mlft import fit_ansatz, project_maximum_likelihood, tensor_from_choi
from qcut.recombine import clip_and_normalize, contract

__all__ = [
    "Circuit",
    "CutPoint",
    "Fragment",
    "FragmentGraph",
    "Gate",
    "build_clustered_ruc",
    "clip_and_normalize",
    "contract",
    "cut_circuit",
    "direct_tensor",
    "exact_full_distribution",
    "fidelity",
    "fit_ansatz",
    "project_maximum_likelihood",
    "sample_full",
    "sample_variant",
    "tensor_from_choi",
]
