"""Parameter search for IR, GRR-CR and UE-CR at a fixed total budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rldp.errors import DomainError
from rldp.infotheory import entropy, grr_mutual_information
from rldp.protocols.builders import (
    build_grr_cr,
    build_ir,
    build_ue_cr,
    _conditionals,
)
from rldp.protocols.mechanisms import boosted_delta
from rldp.protocols.spec import Method, ProtocolSpec
from rldp.protocols.utility import grr_cr_decomposition, ir_decomposition
from rldp.uncertainty import ConfidenceSet, ir_diameter, l1_diameter_conditional

TIE_TOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchGrid:
    """Resolution of the parameter search."""

    split_points: int = 65
    tol: float = 1e-6
    ue_points: int = 17
    refine_points: int = 9


def _golden_max(f, lo: float, hi: float, tol: float):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _pick(cands):
    """Argmax over (value, key...) with near-ties resolved by the smallest key."""
    best = max(v for v, *_ in cands)
    close = [c for c in cands if c[0] >= best - TIE_TOL]
    return min(close, key=lambda c: tuple(c[1:]))


def maximize_split(f, eps: float, grid: SearchGrid = SearchGrid()):
    """Maximize ``f(eps2)`` on [0, eps]: grid search, then golden-section refinement.

    Returns (eps2, value).
    """
    if eps == 0:
        return 0.0, f(0.0)
    xs = np.linspace(0.0, eps, grid.split_points)
    vals = [f(float(x)) for x in xs]
    cands = [(v, float(x)) for v, x in zip(vals, xs)]
    i = int(np.argmax(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    if hi > lo:
        x, v = _golden_max(f, float(lo), float(hi), grid.tol)
        cands.append((v, float(x)))
    v, x = _pick(cands)
    return x, v


def ir_objective(F: ConfidenceSet, eps: float):
    al = F.alphabet
    d = ir_diameter(F)
    p = F.center.mass

    def f(eps2):
        return ir_decomposition(al.a1, al.a2, p, eps - eps2, boosted_delta(eps2, d))

    return f


def grr_cr_objective(F: ConfidenceSet, eps: float):
    al = F.alphabet
    ds = [l1_diameter_conditional(F, s) for s in range(al.a1)]
    p = F.center.mass

    def f(eps2):
        return grr_cr_decomposition(al.a1, al.a2, p, eps - eps2, [boosted_delta(eps2, d) for d in ds])

    return f


# -- UE-CR: vectorized three-parameter search ----------------------------------


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log(p), 0.0) + np.where(p < 1, (1 - p) * np.log1p(-p), 0.0))
    return np.where((p > 0) & (p < 1), h, 0.0)


def ue_mi_batch(ps: np.ndarray, kappa: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """I(UE(S); S) for many (kappa, lambda) pairs at once."""
    k = ps.size
    kappa = np.asarray(kappa, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    T = np.arange(1 << k)
    bits = ((T[:, None] >> np.arange(k)[None, :]) & 1).astype(float)  # [T, s]
    size = bits.sum(axis=1)
    # Q[m, T, s] = kappa^b (1-kappa)^(1-b) lam^(|T|-b) (1-lam)^(k-1-|T|+b)
    b = bits[None]
    on = (size[:, None] - bits)[None]
    off = (k - 1.0) - on
    K, L = kappa[:, None, None], lam[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = (np.where(b > 0, K, 1.0 - K)
             * np.where(on > 0, L ** on, 1.0) * np.where(off > 0, (1.0 - L) ** off, 1.0))
    out = Q @ ps  # [m, T]
    with np.errstate(divide="ignore", invalid="ignore"):
        hy = -np.where(out > 0, out * np.log(out), 0.0).sum(axis=1)
    hcol = _binary_entropy(kappa) + (k - 1) * _binary_entropy(lam)
    return np.maximum(hy - hcol, 0.0)


def ue_cr_objective_batch(F: ConfidenceSet, eps: float):
    al = F.alphabet
    grid = F.center.grid
    ps = grid.sum(axis=1)
    conds = _conditionals(F)
    ds = [l1_diameter_conditional(F, s) for s in range(al.a1)]

    def u_term(eps2: float) -> float:
        return math.fsum(ps[s] * grr_mutual_information(conds[s], boosted_delta(eps2, ds[s]))
                         for s in range(al.a1))

    def f(eps2, tau, lam):
        eps2 = np.asarray(eps2, dtype=float)
        t = np.asarray(tau, dtype=float) * (eps - eps2)
        lam = np.asarray(lam, dtype=float)
        e = np.exp(t)
        kappa = e * lam / (1.0 + lam * (e - 1.0))
        kappa = np.minimum(np.maximum(kappa, lam), 1.0)
        cache = {}
        ut = np.array([cache.setdefault(float(x), u_term(float(x))) for x in eps2.ravel()])
        return ue_mi_batch(ps, kappa, lam) + kappa.ravel() * ut, kappa.ravel()

    return f


def _ue_axes(eps: float, n: int):
    e2 = np.linspace(0.0, eps / 2.0, n)
    tau = np.linspace(0.0, 1.0, n)
    lam = np.linspace(0.0, 1.0, n + 1)[1:]
    return e2, tau, lam


def search_ue_cr(F: ConfidenceSet, eps: float, grid: SearchGrid = SearchGrid()):
    """Grid plus one local refinement over (eps2, tau, lambda).

    ``tau`` is the fraction of the S budget eps1 spent on the unary-encoding
    ratio, so kappa = e^t lambda / (1 + lambda (e^t - 1)) with t = tau * eps1
    always meets the precondition. Returns (eps2, kappa, lambda, value).
    """
    f = ue_cr_objective_batch(F, eps)
    n = grid.ue_points
    e2, tau, lam = _ue_axes(eps, n)
    E, Tt, L = np.meshgrid(e2, tau, lam, indexing="ij")
    vals, kap = f(E.ravel(), Tt.ravel(), L.ravel())
    cands = [(v, e, l, t, k) for v, e, t, l, k in zip(vals, E.ravel(), Tt.ravel(), L.ravel(), kap)]
    best = _pick(cands)
    # local refinement: +-1 grid step around the best point in every dimension
    steps = (e2[1] - e2[0] if n > 1 else 0.0, tau[1] - tau[0] if n > 1 else 0.0, lam[1] - lam[0])
    centers = (best[1], best[3], best[2])
    bounds = ((0.0, eps / 2.0), (0.0, 1.0), (lam[0] * 1e-3, 1.0))
    axes = []
    for c, st, (lo, hi) in zip(centers, steps, bounds):
        axes.append(np.unique(np.clip(np.linspace(c - st, c + st, grid.refine_points), lo, hi)))
    E, Tt, L = np.meshgrid(*axes, indexing="ij")
    vals, kap = f(E.ravel(), Tt.ravel(), L.ravel())
    cands.extend((v, e, l, t, k) for v, e, t, l, k in zip(vals, E.ravel(), Tt.ravel(), L.ravel(), kap))
    v, e, l, t, k = _pick(cands)
    return float(e), float(k), float(l), float(v)


def optimize_protocol(F: ConfidenceSet, method, eps: float,
                      grid: SearchGrid = SearchGrid()) -> ProtocolSpec:
    """Build the utility-maximizing protocol of the given family at budget ``eps``.

    Utility is I(X;Y) at the center of ``F``. Near-ties go to the smaller
    eps2, then the smaller lambda.
    """
    method = Method.parse(method)
    if eps < 0 or not math.isfinite(eps):
        raise DomainError(f"eps must be finite and nonnegative, got {eps}")
    if method is Method.IR:
        eps2, _ = maximize_split(ir_objective(F, eps), eps, grid)
        return build_ir(F, eps, eps2)
    if method is Method.GRR_CR:
        eps2, _ = maximize_split(grr_cr_objective(F, eps), eps, grid)
        return build_grr_cr(F, eps, eps2)
    if method is Method.UE_CR:
        eps2, kappa, lam, _ = search_ue_cr(F, eps, grid)
        return build_ue_cr(F, eps, eps2, kappa, lam)
    raise DomainError(f"no parameters to optimize for {method.value}")


def center_entropy(F: ConfidenceSet) -> float:
    return entropy(F.center.mass)
