"""The cone of admissible protocol columns for chi-square uncertainty sets.

A column T over X (one output y of a protocol) is admissible when, for every
pair s1 != s2 and every u1, u2,

    W_{s1}(u1) . T <= e^eps W_{s2}(u2) . T,

where W_s(u) is supported on row s of X and puts mass pmin_{u'|s} on each
cell (s, u') plus an extra 1 - sum_u' pmin_{u'|s} on (s, u). Here pmin is the
infimum of each conditional P_{u|s} over the confidence set. If every output
column is admissible, the protocol is (eps, F)-RLDP.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from rldp.polyopt.vertices import HPolytope
from rldp.uncertainty import ConfidenceSet, conditional_minima


def mixing_vectors(pmin: np.ndarray) -> np.ndarray:
    """W[s, u] as flat vectors over X, shape (a1, a2, a)."""
    a1, a2 = pmin.shape
    slack = 1.0 - pmin.sum(axis=1)
    W = np.zeros((a1, a2, a1 * a2))
    for s in range(a1):
        for u in range(a2):
            W[s, u, s * a2:(s + 1) * a2] = pmin[s]
            W[s, u, s * a2 + u] += slack[s]
    return W


def cone_inequalities(pmin: np.ndarray, eps: float, include_diagonal: bool = False) -> np.ndarray:
    """Rows n with n . T <= 0 for every (s1, s2, u1, u2)."""
    a1, a2 = pmin.shape
    W = mixing_vectors(pmin)
    e = math.exp(eps)
    rows = []
    for s1 in range(a1):
        for s2 in range(a1):
            if s1 == s2 and not include_diagonal:
                continue
            for u1 in range(a2):
                for u2 in range(a2):
                    rows.append(W[s1, u1] - e * W[s2, u2])
    return np.array(rows).reshape(-1, a1 * a2)


def gamma_inequalities(F: ConfidenceSet, eps: float, include_diagonal: bool = False) -> HPolytope:
    """The normalized cross-section {T in cone : T >= 0, sum T = 1}.

    Each cone row is scaled to unit length; this leaves the polytope unchanged.
    """
    pmin = conditional_minima(F)
    return gamma_polytope(pmin, eps, include_diagonal)


#: Exact parameters are rounded down to multiples of 2**-GRID_BITS.
GRID_BITS = 40


def _round_down(x: float) -> Fraction:
    return Fraction(math.floor(x * 2 ** GRID_BITS), 2 ** GRID_BITS)


def gamma_polytope(pmin: np.ndarray, eps: float, include_diagonal: bool = False) -> HPolytope:
    """Admissible columns for the given conditional minima.

    Enumeration runs on an exact rational copy in which pmin and e^eps are
    rounded down to a 2**-40 grid. Both roundings shrink the cone, so every
    exact vertex is admissible for the unrounded parameters as well.
    """
    a1, a2 = pmin.shape
    a = a1 * a2
    pq = [[_round_down(float(v)) for v in row] for row in pmin]
    eq = _round_down(math.exp(eps)) if eps < 700 else Fraction(2) ** 1000
    W = {}
    for s in range(a1):
        slack = 1 - sum(pq[s])
        for u in range(a2):
            vec = [Fraction(0)] * a
            for v in range(a2):
                vec[s * a2 + v] = pq[s][v] + (slack if v == u else 0)
            W[s, u] = vec
    rows = []
    for s1 in range(a1):
        for s2 in range(a1):
            if s1 == s2 and not include_diagonal:
                continue
            for u1 in range(a2):
                for u2 in range(a2):
                    rows.append([x - eq * y for x, y in zip(W[s1, u1], W[s2, u2])])
    rows += [[Fraction(-int(i == j)) for j in range(a)] for i in range(a)]
    exact = (rows, [Fraction(0)] * len(rows), [[Fraction(1)] * a], [Fraction(-1)])
    A = np.array([[float(v) for v in r] for r in rows])
    norms = np.linalg.norm(A, axis=1)
    A = A / np.where(norms > 0, norms, 1.0)[:, None]
    return HPolytope(a, A, np.zeros(A.shape[0]), np.ones((1, a)), np.array([-1.0]), exact=exact)
