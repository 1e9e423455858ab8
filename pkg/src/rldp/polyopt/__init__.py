"""Vertex-assembled protocols over the admissible-column polytope."""

from rldp.polyopt.build import (
    Objective,
    bounding_vertices,
    mu1,
    mu2,
    polyopt_build,
    solve_assignment_lp,
)
from rldp.polyopt.gamma import gamma_inequalities, gamma_polytope
from rldp.polyopt.lp import LPResult, solve_lp
from rldp.polyopt.vertices import (
    DIM_CAP,
    HPolytope,
    VertexSet,
    box_simplex,
    dump_polytope,
    enumerate_vertices,
)

__all__ = [
    "DIM_CAP", "HPolytope", "LPResult", "Objective", "VertexSet", "bounding_vertices",
    "box_simplex", "dump_polytope", "enumerate_vertices", "gamma_inequalities",
    "gamma_polytope", "mu1", "mu2", "polyopt_build", "solve_assignment_lp", "solve_lp",
]
