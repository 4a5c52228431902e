"""Jaynes-Cummings lattices: polariton analytics, exact sector numerics,
dissipative dynamics, and phase-diagram sweeps."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConvergenceError,
    IntegrationQualityError,
    JCLatticeError,
    NoCrossingError,
    StiffnessError,
)
from .lattice import LatticeParams, lattice_hamiltonian, sector_hamiltonian
from .lindblad import DissipationRates, averaged_p2, evolve, initial_polariton_product
from .polariton import (
    JCParams,
    crossing_detuning,
    effective_coupling,
    effective_repulsion,
    polariton_energy,
)
from .groundstate import excitation_variance, sector_ground_state
from .sweep import GridSpec, PhaseGrid, extract_boundary, run_grid

__all__ = [
    "CapacityError",
    "ConvergenceError",
    "DissipationRates",
    "GridSpec",
    "IntegrationQualityError",
    "JCLatticeError",
    "JCParams",
    "LatticeParams",
    "NoCrossingError",
    "PhaseGrid",
    "StiffnessError",
    "averaged_p2",
    "crossing_detuning",
    "effective_coupling",
    "effective_repulsion",
    "evolve",
    "excitation_variance",
    "extract_boundary",
    "initial_polariton_product",
    "lattice_hamiltonian",
    "polariton_energy",
    "run_grid",
    "sector_ground_state",
    "sector_hamiltonian",
    "__version__",
]
