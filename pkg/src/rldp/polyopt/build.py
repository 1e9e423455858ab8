"""Assemble PolyOpt protocols from the vertices of the admissible-column polytope.

Any protocol whose output columns are nonnegative combinations of admissible
vertices is RLDP. Writing Q_{v|x} = theta_v v_x, the column-sum constraint
becomes sum_v theta_v v = 1_X and the utility becomes linear in theta, so the
best such protocol is the solution of a small LP.
"""

from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from rldp.core import Channel
from rldp.errors import InvariantViolation, Unbounded
from rldp.infotheory import mu, mu_batch
from rldp.polyopt.gamma import gamma_inequalities
from rldp.polyopt.lp import solve_lp
from rldp.polyopt.vertices import DIM_CAP, VertexSet, box_simplex, enumerate_vertices
from rldp.protocols.builders import set_certificate
from rldp.protocols.spec import Method, ProtocolSpec
from rldp.uncertainty import ConfidenceSet, coordinate_bounds

#: Weights at or below this are treated as unused outputs.
WEIGHT_FLOOR = 1e-12


class Objective(enum.Enum):
    CENTER = "center"  # utility at the empirical distribution
    ROBUST = "robust"  # worst-case utility over a polyhedral cover of F

    @classmethod
    def parse(cls, text) -> "Objective":
        if isinstance(text, cls):
            return text
        return cls(str(text).lower())


def mu1(v, center) -> float:
    return mu(v, center)


def bounding_vertices(F: ConfidenceSet) -> np.ndarray:
    """Vertices of {P in simplex : lo_x <= P_x <= hi_x} with the per-cell extrema of F."""
    if F.B == 0:
        return F.center.mass[None, :].copy()
    lo, hi = coordinate_bounds(F)
    return enumerate_vertices(box_simplex(np.asarray(lo), np.asarray(hi)), cap=F.alphabet.a).vertices


def mu2(v, F: ConfidenceSet, cover: Optional[np.ndarray] = None) -> float:
    """Lower bound on min over P in F of mu(v, P).

    mu(v, .) is concave in P, so its minimum over the polyhedral cover is
    attained at a vertex of the cover.
    """
    cover = bounding_vertices(F) if cover is None else cover
    return float(mu_batch(np.asarray(v, dtype=float)[None, :], cover).min())


def solve_assignment_lp(vertices: VertexSet | np.ndarray, objective) -> np.ndarray:
    """Weights theta >= 0 maximizing sum_v theta_v objective_v with sum_v theta_v v = 1."""
    V = vertices.vertices if isinstance(vertices, VertexSet) else np.asarray(vertices, dtype=float)
    res = solve_lp(np.asarray(objective, dtype=float), V.T, np.ones(V.shape[1]))
    if not np.all(np.isfinite(res.x)):
        raise Unbounded("assignment LP returned a non-finite solution")
    return res.x


def polyopt_build(F: ConfidenceSet, eps: float, objective=Objective.CENTER,
                  include_diagonal: bool = False, cap: int = DIM_CAP):
    """Optimal vertex-assembled protocol for the center or robust objective.

    Returns:
        (spec, L) where L is the robust lower bound on inf_{P in F} I_P(X;Y)
        for ROBUST and None for CENTER.
    """
    objective = Objective.parse(objective)
    poly = gamma_inequalities(F, eps, include_diagonal)
    V = enumerate_vertices(poly, cap=cap).vertices
    center = F.center.mass
    if objective is Objective.CENTER:
        scores = mu_batch(V, center)
    else:
        scores = mu_batch(V, bounding_vertices(F)).min(axis=0)
    theta = solve_assignment_lp(V, scores)
    used = np.flatnonzero(theta > WEIGHT_FLOOR)
    rows = theta[used, None] * V[used]
    worst = poly.violation(V[used]).max()
    if worst > 1e-9:
        raise InvariantViolation(f"assembled column violates the admissible cone by {worst:.3e}")
    channel = Channel(rows, tuple(f"v{i}" for i in used))
    lower = float(np.dot(theta[used], scores[used])) if objective is Objective.ROBUST else None
    params = {"objective": objective.value, "vertices": int(V.shape[0]),
              "support": int(used.size), "include_diagonal": bool(include_diagonal)}
    if lower is not None:
        params["lower_bound"] = lower
    cert = set_certificate(F, "polyopt-cone", eps)
    return ProtocolSpec(Method.POLYOPT, eps, F.alphabet, params, channel, cert), lower
