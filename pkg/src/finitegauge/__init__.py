"""Hamiltonian lattice gauge theory with finite gauge groups.

Electric terms from Cayley graphs, gauge-invariant spin-network bases,
sparse Hamiltonian assembly and exact diagonalization.
"""

__version__ = "0.1.0"

from .electric import (
    ElectricSpectrum,
    GammaError,
    GammaSet,
    cayley_laplacian,
    electric_levels,
    gamma_preset,
    ground_degeneracy,
    transfer_matrix_gamma,
    valid_gamma_unions,
    validate_gamma,
)
from .group import GroupTable, GroupTableError, build_cyclic, build_dihedral, build_symmetric, load_group_table
from .hamiltonian import SparseHamiltonian, assemble, build_hamiltonian, class_function, magnetic_matrix
from .lattice import LatticeGraph, hypercubic, load_graph
from .representation import IrrepSet, builtin_irreps, load_irreps, verify_irreps
from .spectra import SolverOptions, lowest_states, sweep, transition_points
from .spin_network import SpinNetworkBasis, enumerate_basis, physical_dimension

__all__ = [
    "__version__",
    "GroupTable",
    "GroupTableError",
    "build_cyclic",
    "build_dihedral",
    "build_symmetric",
    "load_group_table",
    "IrrepSet",
    "builtin_irreps",
    "load_irreps",
    "verify_irreps",
    "GammaSet",
    "GammaError",
    "ElectricSpectrum",
    "validate_gamma",
    "gamma_preset",
    "transfer_matrix_gamma",
    "cayley_laplacian",
    "electric_levels",
    "ground_degeneracy",
    "valid_gamma_unions",
    "LatticeGraph",
    "hypercubic",
    "load_graph",
    "SpinNetworkBasis",
    "enumerate_basis",
    "physical_dimension",
    "SparseHamiltonian",
    "assemble",
    "build_hamiltonian",
    "class_function",
    "magnetic_matrix",
    "SolverOptions",
    "lowest_states",
    "sweep",
    "transition_points",
]
