"""H-polytopes and vertex enumeration by the double description method."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from rldp.errors import DimensionCapExceeded, Infeasible, InvariantViolation

DIM_CAP = 12
DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class HPolytope:
    """{T : normals @ T + offsets <= 0, eq_normals @ T + eq_offsets = 0}."""

    dim: int
    normals: np.ndarray
    offsets: np.ndarray
    eq_normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    eq_offsets: np.ndarray = field(default_factory=lambda: np.zeros(0))
    #: Optional exact rational data (A, c, E, f) that the float arrays round.
    exact: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.normals, dtype=float).reshape(-1, self.dim)
        E = np.asarray(self.eq_normals, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=float).reshape(A.shape[0]))
        object.__setattr__(self, "eq_normals", E)
        object.__setattr__(self, "eq_offsets", np.asarray(self.eq_offsets, dtype=float).reshape(E.shape[0]))

    @property
    def n_inequalities(self) -> int:
        return self.normals.shape[0]

    def violation(self, T: np.ndarray) -> np.ndarray:
        """Largest constraint violation for each row of ``T`` (<= 0 means feasible)."""
        T = np.atleast_2d(T)
        ineq = T @ self.normals.T + self.offsets
        worst = ineq.max(axis=1) if ineq.shape[1] else np.full(T.shape[0], -np.inf)
        if self.eq_normals.shape[0]:
            eq = np.abs(T @ self.eq_normals.T + self.eq_offsets).max(axis=1)
            worst = np.maximum(worst, eq)
        return worst


@dataclass(frozen=True)
class VertexSet:
    vertices: np.ndarray
    tolerance: float = DEDUP_TOL

    def __len__(self) -> int:
        return self.vertices.shape[0]


def box_simplex(lo: np.ndarray, hi: np.ndarray) -> HPolytope:
    """{P : lo <= P <= hi, sum P = 1}."""
    k = lo.size
    eye = np.eye(k)
    return HPolytope(k, np.vstack([-eye, eye]), np.concatenate([lo, -hi]),
                     np.ones((1, k)), np.array([-1.0]))


# -- exact arithmetic helpers ------------------------------------------------


def _as_fraction(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(float(v))


def _int_row(row) -> list:
    """Scale a rational vector to coprime integers with the same direction."""
    den = 1
    for q in row:
        den = den * q.denominator // math.gcd(den, q.denominator)
    ints = [int(q * den) for q in row]
    g = math.gcd(*ints) if any(ints) else 1
    return [v // g for v in ints]


def _solve_equalities(E: list, f: list, dim: int):
    """Parametrize {x : E x + f = 0} as x = x0 + N z exactly.

    Returns (x0, N) with N a list of ``dim`` rows over the free variables, or
    raises Infeasible when the system has no solution.
    """
    rows = [list(r) + [-b] for r, b in zip(E, f)]
    pivots = []
    r = 0
    for col in range(dim):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                fac = rows[i][col]
                rows[i] = [a - fac * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(rows)):
        if rows[i][dim] != 0:
            raise Infeasible("equality constraints are inconsistent")
    free = [c for c in range(dim) if c not in pivots]
    x0 = [Fraction(0)] * dim
    N = [[Fraction(0)] * len(free) for _ in range(dim)]
    for i, col in enumerate(pivots):
        x0[col] = rows[i][dim]
        for j, fc in enumerate(free):
            N[col][j] = -rows[i][fc]
    for j, fc in enumerate(free):
        N[fc][j] = Fraction(1)
    return x0, N


def _independent_rows(H: list, k: int) -> list:
    """Greedy index-ordered choice of k linearly independent rows (exact)."""
    basis = []  # reduced rows with their pivot columns
    chosen = []
    for idx, row in enumerate(H):
        v = [Fraction(x) for x in row]
        for piv, b in basis:
            if v[piv] != 0:
                fac = v[piv] / b[piv]
                v = [x - fac * y for x, y in zip(v, b)]
        nz = next((c for c in range(k) if v[c] != 0), None)
        if nz is not None:
            basis.append((nz, v))
            chosen.append(idx)
            if len(chosen) == k:
                break
    return chosen


def _inverse(M: list) -> list:
    k = len(M)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(k)]
           for i, row in enumerate(M)]
    for col in range(k):
        piv = next(i for i in range(col, k) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for i in range(k):
            if i != col and aug[i][col] != 0:
                fac = aug[i][col]
                aug[i] = [a - fac * b for a, b in zip(aug[i], aug[col])]
    return [row[k:] for row in aug]


def _adjacent_pairs(inc: np.ndarray, plus: np.ndarray, minus: np.ndarray, need: int):
    """Adjacent (plus, minus) ray pairs by the combinatorial test.

    Two rays are adjacent when they share at least ``need`` tight constraints
    and no third ray is tight on all of those.
    """
    if plus.size == 0 or minus.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    f = inc.astype(np.float32)
    out_p, out_n = [], []
    chunk = max(1, 2_000_000 // max(1, minus.size * max(1, inc.shape[0] // 64)))
    for start in range(0, plus.size, chunk):
        pc = plus[start:start + chunk]
        common = f[pc] @ f[minus].T
        cand = np.argwhere(common >= need)
        if cand.size == 0:
            continue
        ip, im = pc[cand[:, 0]], minus[cand[:, 1]]
        shared = inc[ip] & inc[im]  # (c, m)
        # number of rays tight on every shared constraint
        miss = (~inc).astype(np.float32)  # (r, m)
        contain = (shared.astype(np.float32) @ miss.T) == 0  # (c, r)
        ok = contain.sum(axis=1) == 2
        out_p.append(ip[ok])
        out_n.append(im[ok])
    if not out_p:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(out_p), np.concatenate(out_n)


def _normalize_rays(R: np.ndarray) -> np.ndarray:
    for i in range(R.shape[0]):
        g = math.gcd(*R[i])
        if g > 1:
            R[i] = R[i] // g
    return R


def _extreme_rays(H: list) -> np.ndarray:
    """Extreme rays of the pointed cone {w : H w >= 0}, in exact integers.

    Double description: start from the simplicial cone of k independent
    rows and insert the remaining rows one at a time, combining adjacent
    pairs of rays that straddle each new hyperplane.
    """
    k = len(H[0])
    init = _independent_rows(H, k)
    if len(init) < k:
        raise InvariantViolation("cone is not pointed; the polytope is unbounded or lower-dimensional")
    inv = _inverse([H[i] for i in init])
    rays = [_int_row([inv[r][c] for r in range(k)]) for c in range(k)]
    R = np.array(rays, dtype=object).reshape(k, k)
    Hm = np.array(H, dtype=object)
    done = list(init)
    inc = (R.dot(Hm[done].T) == 0).astype(bool)
    rest = [i for i in range(len(H)) if i not in set(init)]
    for i in rest:
        vals = R.dot(Hm[i])
        zero = np.array([v == 0 for v in vals], dtype=bool)
        pos = np.array([v > 0 for v in vals], dtype=bool)
        plus = np.flatnonzero(pos)
        minus = np.flatnonzero(~pos & ~zero)
        if minus.size == 0:
            inc = np.hstack([inc, zero[:, None]])
            done.append(i)
            continue
        pp, nn = _adjacent_pairs(inc, plus, minus, k - 2)
        keep = np.concatenate([plus, np.flatnonzero(zero)])
        old_inc = np.hstack([inc[keep], zero[keep, None]])
        if pp.size:
            vp = vals[pp].reshape(-1, 1)
            vn = vals[nn].reshape(-1, 1)
            new = _normalize_rays(vp * R[nn] - vn * R[pp])
            new_inc = np.hstack([inc[pp] & inc[nn], np.ones((pp.size, 1), dtype=bool)])
            R = np.vstack([R[keep], new])
            inc = np.vstack([old_inc, new_inc])
        else:
            R = R[keep]
            inc = old_inc
        done.append(i)
    return R


def exact_form(poly: HPolytope):
    """Rational data (A, c, E, f) of ``poly``; floats are converted exactly."""
    if poly.exact is not None:
        return poly.exact
    conv = lambda M: [[_as_fraction(v) for v in row] for row in M]  # noqa: E731
    return (conv(poly.normals), [_as_fraction(v) for v in poly.offsets],
            conv(poly.eq_normals), [_as_fraction(v) for v in poly.eq_offsets])


def enumerate_vertices(poly: HPolytope, cap: int = DIM_CAP, tol: float = DEDUP_TOL) -> VertexSet:
    """All vertices of a bounded polytope.

    The enumeration runs in exact rational arithmetic on the polytope's exact
    form, so incidence decisions are never subject to rounding; vertices are
    converted to floats at the end and deduplicated at ``tol``.

    Raises:
        DimensionCapExceeded: if ``poly.dim`` is above ``cap``.
        Infeasible: if the polytope is empty.
    """
    if poly.dim > cap:
        raise DimensionCapExceeded(poly.dim, cap)
    A, c, E, f = exact_form(poly)
    x0, N = _solve_equalities(E, f, poly.dim)
    nfree = len(N[0]) if N else 0
    if nfree == 0:
        pts = np.array([[float(v) for v in x0]])
        if poly.violation(pts)[0] > 1e-9:
            raise Infeasible("equality system has a single solution outside the inequalities")
        return VertexSet(pts, tol)
    # a.(x0 + N z) + c <= 0  <=>  -(a N) z - (a.x0 + c) t >= 0, together with t >= 0
    H = [[0] * nfree + [1]]
    for a_row, c_val in zip(A, c):
        aN = [sum(a_row[d] * N[d][j] for d in range(poly.dim) if a_row[d] and N[d][j])
              for j in range(nfree)]
        off = sum(a_row[d] * x0[d] for d in range(poly.dim) if a_row[d] and x0[d]) + c_val
        row = _int_row([-Fraction(v) for v in aN] + [-Fraction(off)])
        if any(row):
            H.append(row)
        elif off > 0:
            raise Infeasible("a constraint reduces to a positive constant")
    R = _extreme_rays(H)
    pts = []
    for r in R:
        t = r[-1]
        if t > 0:
            z = [Fraction(v, t) for v in r[:-1]]
            pts.append([float(x0[d] + sum(N[d][j] * z[j] for j in range(nfree) if N[d][j]))
                        for d in range(poly.dim)])
    if not pts:
        raise Infeasible("polytope is empty")
    V = _dedup(np.array(pts), tol)
    bad = poly.violation(V)
    if np.any(bad > 1e-9):
        raise InvariantViolation(f"enumerated vertex violates a constraint by {bad.max():.3e}")
    return VertexSet(V, tol)


def _dedup(V: np.ndarray, tol: float) -> np.ndarray:
    """Keep the first of every group of points within ``tol`` (max norm)."""
    V = V[np.lexsort(V.T[::-1])]
    keep = np.ones(V.shape[0], dtype=bool)
    for i in range(V.shape[0]):
        if keep[i]:
            close = np.max(np.abs(V[i + 1:] - V[i]), axis=1) <= tol
            keep[i + 1:][close] = False
    return V[keep]


def dump_polytope(poly: HPolytope, vertices: VertexSet | None = None) -> str:
    """H-representation (and optionally V-representation) as JSON text."""
    obj = {
        "dim": poly.dim,
        "inequalities": [{"normal": list(map(float, a)), "offset": float(o)}
                         for a, o in zip(poly.normals, poly.offsets)],
        "equalities": [{"normal": list(map(float, a)), "offset": float(o)}
                       for a, o in zip(poly.eq_normals, poly.eq_offsets)],
    }
    if vertices is not None:
        obj["vertices"] = [list(map(float, v)) for v in vertices.vertices]
    return json.dumps(obj, indent=2) + "\n"
