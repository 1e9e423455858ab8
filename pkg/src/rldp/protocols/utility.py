"""Exact utility I(X;Y) of built protocols.

IR, GRR-CR and UE-CR each have a closed decomposition into an S-part and a
U-part. The IR decomposition is exact for every P. The two conditional-
reporting decompositions rely on the decoys being drawn from the evaluation
distribution itself, so they are exact only at the center the protocol was
built from; for any other P the explicit channel is used.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from rldp.core import JointDistribution
from rldp.errors import DimensionMismatch, PreconditionError
from rldp.infotheory import (
    conditional_mutual_information,
    entropy,
    grr_mutual_information,
    mutual_information,
)
from rldp.protocols.builders import materialize
from rldp.protocols.mechanisms import grr_matrix, ue_matrix
from rldp.protocols.spec import Method, ProtocolSpec


def _mass(spec: ProtocolSpec, P) -> np.ndarray:
    if P is None:
        if spec.center is None:
            raise PreconditionError(f"{spec.method.value} protocol has no center; pass a distribution")
        return np.asarray(spec.center, dtype=float)
    p = P.mass if isinstance(P, JointDistribution) else np.asarray(P, dtype=float)
    if p.size != spec.alphabet.a:
        raise DimensionMismatch(f"distribution has {p.size} cells, protocol expects {spec.alphabet.a}")
    return p


def _conditional_term(grid: np.ndarray, deltas) -> float:
    """sum_s P_s I(R^s(U); U | S = s)."""
    ps = grid.sum(axis=1)
    terms = [ps[s] * grr_mutual_information(grid[s] / ps[s], dl)
             for s, dl in enumerate(deltas) if ps[s] > 0]
    return math.fsum(terms)


def ir_decomposition(a1: int, a2: int, p: np.ndarray, eps1: float, delta2: float) -> float:
    """I(R1(S); S) + I(R2(U); U | R1(S)) from the 3-way table of (R2(U), U, R1(S))."""
    grid = p.reshape(a1, a2)
    first = grr_mutual_information(grid.sum(axis=1), eps1)
    R1 = grr_matrix(a1, eps1)
    R2 = grr_matrix(a2, delta2)
    M = R1 @ grid  # [y1, u]
    joint = np.einsum("zu,yu->zuy", R2, M)  # [y2, u, y1]
    return first + conditional_mutual_information(joint)


def utility_ir(spec: ProtocolSpec, P=None) -> float:
    p = _mass(spec, P)
    return ir_decomposition(spec.alphabet.a1, spec.alphabet.a2, p,
                            spec.params["eps1"], spec.params["delta2"])


def grr_cr_decomposition(a1: int, a2: int, p: np.ndarray, eps1: float, deltas) -> float:
    """I(GRR(S); S) + e^eps1/(e^eps1 + a1 - 1) * sum_s P_s I(R^s(U); U)."""
    grid = p.reshape(a1, a2)
    first = grr_mutual_information(grid.sum(axis=1), eps1)
    keep = 1.0 if eps1 > 700 else math.exp(eps1) / (math.exp(eps1) + a1 - 1.0)
    return first + keep * _conditional_term(grid, deltas)


def ue_mutual_information(ps: np.ndarray, kappa: float, lam: float) -> float:
    return mutual_information(ps, ue_matrix(ps.size, kappa, lam))


def ue_cr_decomposition(a1: int, a2: int, p: np.ndarray, kappa: float, lam: float, deltas) -> float:
    """I(UE(S); S) + kappa * sum_s P_s I(R^s(U); U)."""
    grid = p.reshape(a1, a2)
    return ue_mutual_information(grid.sum(axis=1), kappa, lam) + kappa * _conditional_term(grid, deltas)


def _at_center(spec: ProtocolSpec, P) -> bool:
    return P is None or (spec.center is not None and np.array_equal(_mass(spec, P), spec.center))


def utility_grr_cr(spec: ProtocolSpec, P=None) -> float:
    if not _at_center(spec, P):
        return mutual_information(_mass(spec, P), spec.channel)
    a = spec.alphabet
    return grr_cr_decomposition(a.a1, a.a2, spec.center, spec.params["eps1"], spec.params["deltas"])


def utility_ue_cr(spec: ProtocolSpec, P=None) -> float:
    if not _at_center(spec, P):
        return mutual_information(_mass(spec, P), materialize(spec))
    a, pr = spec.alphabet, spec.params
    return ue_cr_decomposition(a.a1, a.a2, spec.center, pr["kappa"], pr["lambda"], pr["deltas"])


def brute_force_utility(spec: ProtocolSpec, P=None) -> float:
    """I(X;Y) straight from the explicit channel."""
    return mutual_information(_mass(spec, P), materialize(spec))


def utility(spec: ProtocolSpec, P=None) -> float:
    """I_P(X;Y) in nats; ``P`` defaults to the center the protocol was built from."""
    if spec.method is Method.IR:
        return utility_ir(spec, P)
    if spec.method is Method.GRR_CR:
        return utility_grr_cr(spec, P)
    if spec.method is Method.UE_CR:
        return utility_ue_cr(spec, P)
    return mutual_information(_mass(spec, P), spec.channel)


def normalized_utility(spec: ProtocolSpec, P=None) -> float:
    """I_P(X;Y) / H_P(X), or 0 when H_P(X) = 0."""
    h = entropy(_mass(spec, P))
    return utility(spec, P) / h if h > 0 else 0.0
