"""Dynamic personalized PageRank solvers and node representations."""

from ._pprdyn import (
    CertificateReport,
    DanglingNodeError,
    DegreeZeroError,
    DynamicGraph,
    PprConfig,
    PprState,
    PprVector,
    PushState,
    aggregate,
    certificate_check,
    default_pe_dim,
    forward_push,
    hash_reduce,
    ista_adjust_edge,
    ista_solve,
    make_ista_state,
    make_push_state,
    power_iteration_dense,
    push_adjust_edge,
    push_mass,
    residual_check,
    sparse_random_project,
    to_ppr,
)

__all__ = [
    "CertificateReport",
    "DanglingNodeError",
    "DegreeZeroError",
    "DynamicGraph",
    "PprConfig",
    "PprState",
    "PprVector",
    "PushState",
    "aggregate",
    "certificate_check",
    "default_pe_dim",
    "forward_push",
    "hash_reduce",
    "ista_adjust_edge",
    "ista_solve",
    "make_ista_state",
    "make_push_state",
    "power_iteration_dense",
    "push_adjust_edge",
    "push_mass",
    "residual_check",
    "sparse_random_project",
    "to_ppr",
]
