"""Multi-boson continuous-time quantum walks on coupled resonator networks."""

__version__ = "0.1.0"

from .errors import BosonWalkError, DomainError, NumericalError, SizingError
from .fock import OccupationBasis, basis_dimension, enumerate_basis, index_of, occupation_of
from .network import CouplingGraph, load_graph, mode_propagator, perturb, random_graph, save_graph, validate
from .hamiltonian import SparseOperator, apply_sparse, build_collapse_ops, build_hamiltonian
from .dynamics import (DensityMatrix, StateVector, diagonal_distribution, evolve_closed,
                       evolve_lindblad, occupations)
from .metrics import (DecayModelParams, bhattacharyya, distribution_distance, model_delta,
                      model_trace, operator_distance, trace_distance)
from .coherent import coherent_delta, coherent_overlap, evolve_amplitudes, poisson_distribution
from .experiments import (ExperimentConfig, arkhipov_check, decoherence_scan, derive_member_seed,
                          overlap_vs_n, perturbation_ensemble, richness_time)

__all__ = [name for name in dir() if not name.startswith("_")]
