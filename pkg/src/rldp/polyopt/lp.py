"""Dense two-phase revised simplex for small equality-form LPs.

Solves ``max c.x  s.t.  A x = b, x >= 0`` with Bland's rule throughout, so it
terminates on degenerate problems (which vertex-assignment LPs always are).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rldp.errors import Infeasible, Unbounded

PIVOT_TOL = 1e-10


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int


def _simplex(A, b, c, basis, max_iter):
    """Primal revised simplex from a feasible basis; returns (basis, iterations)."""
    m, n = A.shape
    basis = list(basis)
    for it in range(max_iter):
        Bm = A[:, basis]
        xb = np.linalg.solve(Bm, b)
        y = np.linalg.solve(Bm.T, c[basis])
        red = c - A.T @ y
        red[basis] = 0.0
        enter = np.flatnonzero(red > PIVOT_TOL)
        if enter.size == 0:
            return basis, it
        j = int(enter[0])
        d = np.linalg.solve(Bm, A[:, j])
        pos = d > PIVOT_TOL * max(1.0, float(np.abs(d).max()))
        if not np.any(pos):
            raise Unbounded(f"objective unbounded along column {j}")
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xb[pos], 0.0) / d[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
        leave = min(ties, key=lambda r: basis[r])  # Bland: smallest variable index leaves
        basis[leave] = j
    raise RuntimeError(f"simplex did not converge in {max_iter} iterations")


def _independent_rows(A: np.ndarray) -> list:
    """Indices of a maximal linearly independent subset of rows, greedy in order."""
    keep = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial], tol=1e-10 * max(1.0, np.abs(A).max())) == len(trial):
            keep.append(i)
    return keep


def solve_lp(c, A, b, max_iter: int = 100000) -> LPResult:
    """Maximize ``c.x`` subject to ``A x = b`` and ``x >= 0``.

    Raises:
        Infeasible: with a Farkas-style certificate ``y`` (phase-one duals).
        Unbounded: if the objective has no finite maximum.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.array(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    keep = _independent_rows(A)
    A2, b2 = A[keep], b[keep]
    k = len(keep)
    # phase one: artificials n..n+k-1 with cost -1
    A1 = np.hstack([A2, np.eye(k)])
    c1 = np.concatenate([np.zeros(n), -np.ones(k)])
    basis, it1 = _simplex(A1, b2, c1, range(n, n + k), max_iter)
    Bm = A1[:, basis]
    xb = np.linalg.solve(Bm, b2)
    infeas = sum(xb[i] for i, j in enumerate(basis) if j >= n)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if infeas > 1e-9 * scale:
        y = np.zeros(m)
        y[keep] = np.linalg.solve(Bm.T, c1[basis])
        y[flip] *= -1.0
        raise Infeasible(f"no feasible point (phase-one residual {infeas:.3e})", certificate=y)
    # drive degenerate artificials out; full row rank guarantees a candidate
    for r in range(k):
        if basis[r] < n:
            continue
        alpha = np.linalg.solve(A1[:, basis].T, np.eye(k)[r]) @ A2
        cand = [j for j in range(n) if j not in basis and abs(alpha[j]) > PIVOT_TOL]
        basis[r] = max(cand, key=lambda j: abs(alpha[j]))
    basis, it2 = _simplex(A2, b2, c, basis, max_iter)
    Bm = A2[:, basis]
    xb = np.linalg.solve(Bm, b2)
    x = np.zeros(n)
    x[basis] = np.maximum(xb, 0.0)
    if np.abs(A @ x - b).max(initial=0.0) > 1e-9 * scale:
        raise Infeasible("equality rows dropped as dependent are inconsistent")
    y2 = np.linalg.solve(Bm.T, c[basis])
    duals = np.zeros(m)
    duals[keep] = y2
    duals[flip] *= -1.0
    red = c - A2.T @ y2
    red[basis] = 0.0
    return LPResult(x, float(c @ x), np.array(basis), duals, red, it1 + it2)
