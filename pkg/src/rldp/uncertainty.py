"""Geometry of the chi-square confidence set around an empirical distribution.

The set is F = {P : sum_x (Phat_x - P_x)^2 / P_x <= B}. This module provides
membership, the exact projection of F onto each conditional P_{U|s}, per-
coordinate extrema, l1-diameter bounds, and random members for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rldp.core import JointDistribution
from rldp.errors import DomainError, ZeroMarginal
from rldp.randstats import SeededRng, compute_B

_ZERO_HINT = "enable smoothing (--smoothing) or merge sparse categories"


@dataclass(frozen=True)
class ConfidenceSet:
    """Chi-square ball of radius ``B`` around ``center``."""

    center: JointDistribution
    B: float
    n: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if not (self.B >= 0 and math.isfinite(self.B)):
            raise DomainError(f"radius B must be finite and nonnegative, got {self.B}")

    @classmethod
    def from_sample(cls, center: JointDistribution, n: int, alpha: float = 0.05) -> "ConfidenceSet":
        return cls(center, compute_B(center.alphabet, n, alpha), n, alpha)

    @property
    def alphabet(self):
        return self.center.alphabet

    def contains(self, P, tol: float = 1e-12) -> bool:
        return divergence(self, P) <= self.B + tol


def _mass(P) -> np.ndarray:
    return P.mass if isinstance(P, JointDistribution) else np.asarray(P, dtype=float)


def chi2_divergence(center: np.ndarray, P: np.ndarray) -> np.ndarray:
    """sum_x (c_x - P_x)^2 / P_x over the last axis, with 0/0 = 0 and pos/0 = inf."""
    center = np.asarray(center, dtype=float)
    P = np.asarray(P, dtype=float)
    num = (center - P) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, num / np.where(P > 0, P, 1.0), np.where(num > 0, np.inf, 0.0))
    return terms.sum(axis=-1)


def divergence(F: ConfidenceSet, P) -> float:
    """Chi-square divergence of ``P`` from the center; ``inf`` if P misses support."""
    return float(chi2_divergence(F.center.mass, _mass(P)))


def _check_marginal(F: ConfidenceSet, s: int) -> float:
    ps = float(F.center.marginal_s[s])
    if ps <= 0:
        raise ZeroMarginal(s, _ZERO_HINT)
    return ps


def projected_radius(B: float, ps: float) -> float:
    # (sqrt(B+1) + ps - 1)^2 / ps^2 - 1 without cancellation: t = sqrt(B+1) - 1
    t = B / (math.sqrt(B + 1.0) + 1.0)
    return max(B, t * (t + 2.0 * ps) / (ps * ps))


def conditional_radius(F: ConfidenceSet, s: int) -> float:
    """Radius B_s of the projection of F onto the conditional P_{U|s}."""
    ps = _check_marginal(F, s)
    return projected_radius(F.B, ps)


def extrema(B: float, p):
    """Min and max of a coordinate over a chi-square ball of radius B centered at p."""
    p = np.asarray(p, dtype=float)
    root = np.sqrt(np.maximum(B * B + 4.0 * B * p - 4.0 * B * p * p, 0.0))
    lo = (B + 2.0 * p - root) / (2.0 * B + 2.0)
    hi = (B + 2.0 * p + root) / (2.0 * B + 2.0)
    lo = np.clip(np.minimum(lo, p), 0.0, 1.0)
    hi = np.clip(np.maximum(hi, p), 0.0, 1.0)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def coordinate_extrema(F: ConfidenceSet, x: int) -> tuple[float, float]:
    return extrema(F.B, F.center.mass[x])


def coordinate_bounds(F: ConfidenceSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate (min, max) arrays over all of X."""
    return extrema(F.B, F.center.mass)


def conditional_center(F: ConfidenceSet, s: int) -> np.ndarray:
    ps = _check_marginal(F, s)
    return F.center.grid[s] / ps


def conditional_extrema(F: ConfidenceSet, s: int, u: int) -> tuple[float, float]:
    """Min and max of P_{u|s} over P in F."""
    return extrema(conditional_radius(F, s), conditional_center(F, s)[u])


def conditional_minima(F: ConfidenceSet) -> np.ndarray:
    """Grid of inf_{P in F} P_{u|s}, shape (a1, a2)."""
    a1 = F.alphabet.a1
    return np.vstack([extrema(conditional_radius(F, s), conditional_center(F, s))[0]
                      for s in range(a1)]).reshape(a1, F.alphabet.a2)


def l1_bound(B: float, pmin: float) -> float:
    """Upper bound on max ||P - Phat||_1 over a chi-square ball of radius B.

    Exact for ``B >= 1``, where ``pmin`` is the smallest center coordinate;
    ``sqrt(B)`` otherwise. At ``B == 1`` the exact branch is used: sqrt(B) is
    still valid there but exceeds the attained maximum whenever pmin > 0.
    """
    if B < 1.0:
        return min(2.0, math.sqrt(B))
    root = math.sqrt(max(B * B + 4.0 * B * pmin - 4.0 * B * pmin * pmin, 0.0))
    return min(2.0, max(0.0, (B * (1.0 - 2.0 * pmin) + root) / (B + 1.0)))


def _argmin_low(v: np.ndarray) -> int:
    return int(np.argmin(v))  # numpy returns the first occurrence


def l1_diameter_conditional(F: ConfidenceSet, s: int) -> float:
    """d_s: bound on ||P_{U|s} - Phat_{U|s}||_1 over P in F."""
    Bs = conditional_radius(F, s)
    cond = conditional_center(F, s)
    return l1_bound(Bs, float(cond[_argmin_low(cond)]))


def ir_diameter(F: ConfidenceSet) -> float:
    """d = min(2, max_s 2 d_s + max_{s,s'} ||Phat_{U|s} - Phat_{U|s'}||_1)."""
    a1 = F.alphabet.a1
    conds = np.vstack([conditional_center(F, s) for s in range(a1)])
    ds = [l1_diameter_conditional(F, s) for s in range(a1)]
    spread = np.abs(conds[:, None, :] - conds[None, :, :]).sum(axis=2).max()
    return min(2.0, 2.0 * max(ds) + float(spread))


def l1_extremal_member(F: ConfidenceSet) -> JointDistribution:
    """Member of F maximizing ||P - Phat||_1 when B >= 1.

    The smallest center cell is raised to its maximum over F and every other
    cell is scaled down proportionally.
    """
    p = F.center.mass
    xm = _argmin_low(p)
    top = extrema(F.B, p[xm])[1]
    scale = (1.0 - top) / (1.0 - p[xm])
    P = p * scale
    P[xm] = top
    return F.center.with_mass(P / P.sum())


def lift_conditional(F: ConfidenceSet, s: int, R) -> np.ndarray:
    """Joint distribution in F whose conditional at ``s`` equals ``R``.

    Valid whenever ``R`` lies in the projected ball of radius B_s. Row ``s``
    gets total mass c = 1 - (1 - Phat_s)/sqrt(B+1); the others are shrunk by
    1/sqrt(B+1).
    """
    ps = _check_marginal(F, s)
    root = math.sqrt(F.B + 1.0)
    c = 1.0 - (1.0 - ps) / root
    grid = F.center.grid / root
    grid[s] = c * np.asarray(R, dtype=float)
    return grid.ravel()


# -- random members ---------------------------------------------------------


def _ray_divergence(center: np.ndarray, D: np.ndarray, t: np.ndarray) -> np.ndarray:
    return chi2_divergence(center[None, :], center[None, :] + t[:, None] * D)


def sample_members(F: ConfidenceSet, rng: SeededRng, count: int,
                   on_boundary=True) -> np.ndarray:
    """Draw ``count`` members of F as rows of an array.

    Each draw picks a direction w - Phat with w from the Jeffreys prior (sign
    flipped at random when Phat has full support), then bisects the
    divergence along that ray to reach the boundary of F. Interior draws scale
    the boundary step by a uniform factor.

    Args:
        on_boundary: bool, or a boolean array of length ``count``.
    """
    center = F.center.mass
    a = center.size
    if count <= 0:
        return np.zeros((0, a))
    if F.B == 0:
        return np.tile(center, (count, 1))
    W = rng.dirichlet_half(a, count)
    D = W - center[None, :]
    if np.all(center > 0):
        signs = np.where(rng.uniform(count) < 0.5, -1.0, 1.0)
        D *= signs[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        steps = np.where(D < 0, center[None, :] / np.where(D < 0, -D, 1.0), np.inf)
    t_hi = steps.min(axis=1)
    t_hi = np.where(np.isfinite(t_hi), t_hi, 0.0)
    lo = np.zeros(count)
    hi = t_hi.copy()
    # Rays that stay inside F all the way to the simplex boundary stop there.
    at_edge = _ray_divergence(center, D, hi) <= F.B
    lo[at_edge] = hi[at_edge]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        inside = _ray_divergence(center, D, mid) <= F.B
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    t = lo
    boundary = np.broadcast_to(np.asarray(on_boundary, dtype=bool), (count,))
    if not np.all(boundary):
        t = np.where(boundary, t, t * rng.uniform(count))
    P = center[None, :] + t[:, None] * D
    P = np.maximum(P, 0.0)
    return P / P.sum(axis=1, keepdims=True)


def sample_member(F: ConfidenceSet, rng: SeededRng, on_boundary: bool = True) -> JointDistribution:
    return F.center.with_mass(sample_members(F, rng, 1, on_boundary)[0])
