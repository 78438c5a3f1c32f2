"""blocklab: block-model graph generation, message passing, spectra, and
phase-transition experiments on sparse random graphs."""

from .graphs import (Graph, DegreeStats, build_graph, degree_stats,
                     count_triangles, sample_er, sample_regular,
                     adjacency_matrix, read_edge_list, write_edge_list,
                     read_labels, write_labels)
from .sbm import (SbmParams, DerivedParams, derive_params, ks_check,
                  it_bound_check, sample_sbm, expected_triangles_sbm)
from .bp import (MessageSet, MarginalTable, BpResult, init_messages, bp_sweep,
                 run_bp, bethe_free_energy, overlap, hamiltonian_energy,
                 hard_labels, exact_posterior_marginals)
from .nonbacktracking import (NbOperator, Spectrum, NbClusterResult, build_nb,
                              leading_spectrum, full_spectrum, nb_cluster,
                              bulk_fraction)
from .trees import (ABSTAIN, LabeledTree, ReconstructionPoint, broadcast,
                    majority_estimate, bp_root_estimate, faithful_fraction,
                    reconstruction_curve)
from .moments import (RateMaximum, second_moment_exact, rate_function,
                      sinkhorn_project, maximize_rate, contiguity_verdict)
from .bisection import Bisection, cut_size, min_bisection_local_search
from .sweep import SweepConfig, parse_config, load_config, run_sweep
from .plotting import emit_plot

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN", "Bisection", "BpResult", "DegreeStats", "DerivedParams",
    "Graph", "LabeledTree", "MarginalTable", "MessageSet", "NbClusterResult",
    "NbOperator", "RateMaximum", "ReconstructionPoint", "SbmParams",
    "Spectrum", "SweepConfig", "adjacency_matrix", "bethe_free_energy",
    "bp_root_estimate", "bp_sweep", "broadcast", "build_graph", "build_nb",
    "bulk_fraction", "contiguity_verdict", "count_triangles", "cut_size",
    "degree_stats", "derive_params", "emit_plot", "exact_posterior_marginals",
    "expected_triangles_sbm", "faithful_fraction", "full_spectrum",
    "hamiltonian_energy", "hard_labels", "init_messages", "it_bound_check",
    "ks_check", "leading_spectrum", "load_config", "majority_estimate",
    "maximize_rate", "min_bisection_local_search", "nb_cluster", "overlap",
    "parse_config", "rate_function", "read_edge_list", "read_labels",
    "reconstruction_curve", "run_bp", "run_sweep", "sample_er",
    "sample_regular", "sample_sbm", "second_moment_exact", "sinkhorn_project",
    "write_edge_list", "write_labels",
]
