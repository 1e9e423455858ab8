"""Entropy and mutual-information functionals (natural logarithms throughout)."""

from __future__ import annotations

import math

import numpy as np

from rldp.core import Channel, JointDistribution
from rldp.errors import DimensionMismatch


# Beyond this exponent GRR is the identity to double precision.
_EXP_CAP = 700.0


def _vec(p) -> np.ndarray:
    if isinstance(p, JointDistribution):
        return p.mass
    return np.asarray(p, dtype=float)


def _xlogy_terms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise a*log(a/b) with 0*log(0/.) = 0."""
    out = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    mask = a > 0
    out[mask] = a[mask] * np.log(a[mask] / b[mask])
    return out


def entropy(p) -> float:
    """Shannon entropy in nats with 0 log 0 = 0."""
    p = _vec(p).ravel()
    nz = p[p > 0]
    return max(0.0, -math.fsum(nz * np.log(nz)))


def mutual_information(P, Q: Channel | np.ndarray) -> float:
    """Mutual information I(X;Y) for X ~ P and Y = Q(X).

    Args:
        P: Input distribution (JointDistribution or plain vector over X).
        Q: Channel or raw ``[y, x]`` column-stochastic matrix.
    """
    p = _vec(P)
    q = Q.matrix if isinstance(Q, Channel) else np.asarray(Q, dtype=float)
    if q.shape[1] != p.size:
        raise DimensionMismatch(f"channel expects {q.shape[1]} inputs, distribution has {p.size}")
    joint = q * p[None, :]
    out = joint.sum(axis=1, keepdims=True)
    ratio_base = out * p[None, :]
    val = math.fsum(_xlogy_terms(joint, ratio_base).ravel())
    return max(0.0, val)


def mutual_information_joint(joint: np.ndarray) -> float:
    """I(A;B) from a 2-way joint mass table."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    return max(0.0, math.fsum(_xlogy_terms(joint, pa * pb).ravel()))


def conditional_mutual_information(joint: np.ndarray) -> float:
    """I(A;B | C) for a 3-way mass table indexed ``[a, b, c]``."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 3:
        raise DimensionMismatch("conditional MI needs a 3-way table")
    pc = joint.sum(axis=(0, 1))
    pac = joint.sum(axis=1)  # [a, c]
    pbc = joint.sum(axis=0)  # [b, c]
    den = pac[:, None, :] * pbc[None, :, :] / np.where(pc > 0, pc, 1.0)[None, None, :]
    val = math.fsum(_xlogy_terms(joint, den).ravel())
    return max(0.0, val)


def mu(v, P) -> float:
    """Per-output utility contribution sum_x v_x P_x log(v_x / sum_x' v_x' P_x').

    Summing ``mu(Q[y], P)`` over the rows of a channel gives I(X;Y).
    """
    v = np.asarray(v, dtype=float)
    p = _vec(P)
    w = v * p
    tot = w.sum()
    if tot <= 0:
        return 0.0
    mask = w > 0
    return math.fsum(w[mask] * np.log(v[mask] / tot))


def mu_batch(V: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Vectorized ``mu`` over rows of ``V`` (shape [m, a]) and rows of ``P``.

    ``P`` may be a single distribution (shape [a]) or one per call (shape
    [k, a]); the result then has shape [m] or [k, m].
    """
    V = np.asarray(V, dtype=float)
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    P2 = P[None, :] if single else P
    W = P2[:, None, :] * V[None, :, :]
    tot = W.sum(axis=2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(np.where(V[None] > 0, V[None], 1.0) / np.where(tot > 0, tot, 1.0))
    terms = np.where(W > 0, W * logs, 0.0)
    out = terms.sum(axis=2)
    return out[0] if single else out


def grr_output(p: np.ndarray, delta: float) -> np.ndarray:
    """Output law of GRR with parameter ``delta`` applied to ``p``."""
    p = np.asarray(p, dtype=float)
    k = p.size
    if delta > _EXP_CAP:
        return p.copy()
    e = math.exp(delta)
    return (p * (e - 1.0) + 1.0) / (e + k - 1.0)


def grr_column_entropy(k: int, delta: float) -> float:
    if delta > _EXP_CAP or k == 1:
        return 0.0
    e = math.exp(delta)
    z = e + k - 1.0
    hi = e / z
    lo = 1.0 / z
    return -math.fsum([hi * math.log(hi), (k - 1) * lo * math.log(lo)])


def grr_mutual_information(p, delta: float) -> float:
    """I(GRR^delta(X); X) for X ~ p, computed as H(output) - H(column)."""
    p = np.asarray(p, dtype=float)
    if p.size == 1:
        return 0.0
    return max(0.0, entropy(grr_output(p, delta)) - grr_column_entropy(p.size, delta))
