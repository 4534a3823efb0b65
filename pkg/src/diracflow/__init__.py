"""Isospectral Lax deformation of graph Dirac operators."""

from .complex import (
    Graph,
    SimplicialComplex,
    build_clique_complex,
    clique_polynomial,
    euler_characteristic,
    generate_erdos_renyi,
    load_graph,
)
from .operators import (
    DiracDecomposition,
    GradedMatrix,
    b_operator,
    dirac,
    exterior_derivative,
    extract_blocks,
    laplacian,
    parity,
    supertrace,
)
from .flow import (
    FlowConfig,
    FlowState,
    FlowTrajectory,
    asymptotics,
    inflation_profile,
    rhs,
    run_bidirectional,
    run_flow,
)

__all__ = [
    "Graph",
    "SimplicialComplex",
    "build_clique_complex",
    "clique_polynomial",
    "euler_characteristic",
    "generate_erdos_renyi",
    "load_graph",
    "DiracDecomposition",
    "GradedMatrix",
    "b_operator",
    "dirac",
    "exterior_derivative",
    "extract_blocks",
    "laplacian",
    "parity",
    "supertrace",
    "FlowConfig",
    "FlowState",
    "FlowTrajectory",
    "asymptotics",
    "inflation_profile",
    "rhs",
    "run_bidirectional",
    "run_flow",
]
