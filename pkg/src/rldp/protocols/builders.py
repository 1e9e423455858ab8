"""Constructors for every release protocol, returning ProtocolSpec objects."""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from rldp.core import Alphabet, Channel
from rldp.errors import DomainError, PreconditionError
from rldp.protocols.mechanisms import (
    boosted_delta,
    grr_matrix,
    symmetric_ue,
    srr_matrix,
    subset_label,
    ue_matrix,
    ue_ratio,
)
from rldp.protocols.spec import Method, ProtocolSpec
from rldp.uncertainty import (
    ConfidenceSet,
    conditional_center,
    ir_diameter,
    l1_diameter_conditional,
)

#: Largest rows*cols product for which an explicit UE-CR channel is built.
MATERIAL_CAP = 10 ** 6
#: Slack allowed when checking that a parameter split respects the budget.
BUDGET_TOL = 1e-12


def _check_budget(eps: float, eps2: float, upper: Optional[float] = None):
    if not (eps >= 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be finite and nonnegative, got {eps}")
    hi = eps if upper is None else upper
    if not (-BUDGET_TOL <= eps2 <= hi + BUDGET_TOL):
        raise DomainError(f"eps2 = {eps2} outside [0, {hi}]")


def set_certificate(F: ConfidenceSet, guarantee: str, level: float) -> dict:
    return {"guarantee": guarantee, "level": level, "set": "chi2",
            "B": F.B, "n": F.n, "alpha": F.alpha}


def _ldp_certificate(guarantee: str, level: float) -> dict:
    return {"guarantee": guarantee, "level": level, "set": "all"}


def _xy_labels(a1: int, a2: int) -> tuple:
    return tuple(f"{s}:{u}" for s in range(a1) for u in range(a2))


# -- context-free mechanisms on X -------------------------------------------


def build_grr(alphabet: Alphabet, eps: float) -> ProtocolSpec:
    """GRR on all of X; eps-LDP, hence RLDP for every uncertainty set."""
    ch = Channel(grr_matrix(alphabet.a, eps), _xy_labels(alphabet.a1, alphabet.a2))
    return ProtocolSpec(Method.GRR, eps, alphabet, {}, ch, _ldp_certificate("ldp", eps))


def build_srr(alphabet: Alphabet, eps: float) -> ProtocolSpec:
    """SRR on X; RLDP for the set of all distributions."""
    ch = Channel(srr_matrix(alphabet, eps), _xy_labels(alphabet.a1, alphabet.a2))
    return ProtocolSpec(Method.SRR, eps, alphabet, {}, ch, _ldp_certificate("maximal-set", eps))


def build_ue(alphabet: Alphabet, eps: float) -> ProtocolSpec:
    """Symmetric unary encoding on X; eps-LDP."""
    kappa, lam = symmetric_ue(eps)
    a = alphabet.a
    if (1 << a) * a > MATERIAL_CAP:
        raise PreconditionError(f"unary encoding on {a} symbols has 2^{a} outputs, above the size cap")
    labels = tuple(subset_label(T, a) for T in range(1 << a))
    ch = Channel(ue_matrix(a, kappa, lam), labels)
    return ProtocolSpec(Method.UE, eps, alphabet, {"kappa": kappa, "lambda": lam}, ch,
                        _ldp_certificate("ldp", eps))


# -- independent reporting ------------------------------------------------------


def ir_matrix(a1: int, a2: int, eps1: float, delta2: float) -> np.ndarray:
    return np.kron(grr_matrix(a1, eps1), grr_matrix(a2, delta2))


def build_ir(F: ConfidenceSet, eps: float, eps2: float) -> ProtocolSpec:
    """Independent reporting: GRR on S at eps - eps2, boosted GRR on U.

    The U-channel runs at delta2 with e^delta2 = 1 + 2 (e^eps2 - 1) / d, where
    d bounds the l1 spread of the conditionals P_{U|s} over F.
    """
    _check_budget(eps, eps2)
    eps2 = min(max(eps2, 0.0), eps)
    al = F.alphabet
    d = ir_diameter(F)
    eps1 = eps - eps2
    delta2 = boosted_delta(eps2, d)
    ch = Channel(ir_matrix(al.a1, al.a2, eps1, delta2), _xy_labels(al.a1, al.a2))
    params = {"eps1": eps1, "eps2": eps2, "delta2": delta2, "d": d}
    return ProtocolSpec(Method.IR, eps, al, params, ch,
                        set_certificate(F, "ir-l1-diameter", eps1 + eps2), np.array(F.center.mass))


# -- conditional reporting -------------------------------------------------------


def _conditionals(F: ConfidenceSet) -> np.ndarray:
    return np.vstack([conditional_center(F, s) for s in range(F.alphabet.a1)])


def _cr_deltas(F: ConfidenceSet, eps2: float) -> tuple[list, list]:
    ds = [l1_diameter_conditional(F, s) for s in range(F.alphabet.a1)]
    return ds, [boosted_delta(eps2, d) for d in ds]


def decoy_laws(conds: np.ndarray, deltas) -> np.ndarray:
    """Row s: law of R^s applied to U drawn from the estimated conditional at s."""
    return np.vstack([grr_matrix(conds.shape[1], dl) @ conds[s] for s, dl in enumerate(deltas)])


def grr_cr_matrix(conds: np.ndarray, eps1: float, deltas) -> np.ndarray:
    a1, a2 = conds.shape
    G = grr_matrix(a1, eps1)
    decoys = decoy_laws(conds, deltas)
    Q = np.empty((a1, a2, a1, a2))  # [s~, y, s, u]
    for st in range(a1):
        for s in range(a1):
            if st == s:
                Q[st, :, s, :] = G[st, s] * grr_matrix(a2, deltas[s])
            else:
                Q[st, :, s, :] = G[st, s] * decoys[st][:, None]
    return Q.reshape(a1 * a2, a1 * a2)


def build_grr_cr(F: ConfidenceSet, eps: float, eps2: float) -> ProtocolSpec:
    """Conditional reporting with GRR on S.

    S is released through GRR at eps - eps2. When the released value equals
    the true s, U is released through GRR at delta_s; otherwise a decoy drawn
    from the estimated conditional of the released value is released instead.
    """
    _check_budget(eps, eps2)
    eps2 = min(max(eps2, 0.0), eps)
    al = F.alphabet
    conds = _conditionals(F)
    ds, deltas = _cr_deltas(F, eps2)
    eps1 = eps - eps2
    ch = Channel(grr_cr_matrix(conds, eps1, deltas), _xy_labels(al.a1, al.a2))
    params = {"eps1": eps1, "eps2": eps2, "deltas": deltas, "ds": ds}
    return ProtocolSpec(Method.GRR_CR, eps, al, params, ch,
                        set_certificate(F, "grr-cr-l1-diameter", eps1 + eps2), np.array(F.center.mass))


def ue_cr_outputs(a1: int, a2: int):
    """Enumerate (T bitmask, y tuple over members of T in increasing order)."""
    for T in range(1 << a1):
        members = [s for s in range(a1) if T >> s & 1]
        for ys in itertools.product(range(a2), repeat=len(members)):
            yield T, members, ys


def ue_cr_output_count(a1: int, a2: int) -> int:
    return (1 + a2) ** a1


def ue_cr_labels(alphabet: Alphabet) -> tuple:
    return tuple("{" + ",".join(f"{s}={y}" for s, y in zip(members, ys)) + "}"
                 for _, members, ys in ue_cr_outputs(alphabet.a1, alphabet.a2))


def ue_cr_offsets(a1: int, a2: int) -> np.ndarray:
    """Index of the first output for each subset T."""
    sizes = np.array([a2 ** bin(T).count("1") for T in range(1 << a1)])
    return np.concatenate([[0], np.cumsum(sizes)[:-1]])


def ue_cr_matrix(conds: np.ndarray, kappa: float, lam: float, deltas) -> np.ndarray:
    a1, a2 = conds.shape
    UE = ue_matrix(a1, kappa, lam)
    decoys = decoy_laws(conds, deltas)
    R = [grr_matrix(a2, dl) for dl in deltas]
    rows = []
    for T, members, ys in ue_cr_outputs(a1, a2):
        col = np.empty((a1, a2))
        for s in range(a1):
            f = np.full(a2, UE[T, s])
            for sp, y in zip(members, ys):
                f = f * (R[s][y] if sp == s else decoys[sp][y])
            col[s] = f
        rows.append(col.ravel())
    return np.array(rows)


def check_ue_cr_params(eps: float, eps2: float, kappa: float, lam: float) -> float:
    """Validate a UE-CR parameter choice and return eps1."""
    _check_budget(eps, eps2, upper=eps / 2.0)
    eps2 = min(max(eps2, 0.0), eps / 2.0)
    if not (0.0 < lam <= kappa <= 1.0):
        raise DomainError(f"need 0 < lambda <= kappa <= 1, got kappa={kappa}, lambda={lam}")
    eps1 = eps - eps2
    if ue_ratio(kappa, lam) > eps1 + 1e-9:
        raise DomainError(
            f"unary-encoding ratio {ue_ratio(kappa, lam)} exceeds the S budget eps1 = {eps1}")
    return eps1


def build_ue_cr(F: ConfidenceSet, eps: float, eps2: float, kappa: float, lam: float,
                material_cap: int = MATERIAL_CAP) -> ProtocolSpec:
    """Conditional reporting with unary encoding on S.

    Every reported position s' in the subset T carries a U-report: the true u
    passed through GRR at delta_s when s' = s, otherwise a decoy from the
    estimated conditional at s' passed through GRR at delta_s'. Certified at
    max(eps1 + eps2, 2 eps2), so eps2 is limited to eps / 2.
    """
    eps1 = check_ue_cr_params(eps, eps2, kappa, lam)
    eps2 = min(max(eps2, 0.0), eps / 2.0)
    al = F.alphabet
    conds = _conditionals(F)
    ds, deltas = _cr_deltas(F, eps2)
    rows = ue_cr_output_count(al.a1, al.a2)
    ch = None
    if rows * al.a <= material_cap:
        ch = Channel(ue_cr_matrix(conds, kappa, lam, deltas), ue_cr_labels(al))
    params = {"eps1": eps1, "eps2": eps2, "kappa": kappa, "lambda": lam,
              "deltas": deltas, "ds": ds}
    level = max(eps1 + eps2, 2.0 * eps2)
    return ProtocolSpec(Method.UE_CR, eps, al, params, ch,
                        set_certificate(F, "ue-cr-l1-diameter", level), np.array(F.center.mass))


def materialize(spec: ProtocolSpec) -> Channel:
    """Explicit channel of ``spec``, building the UE-CR matrix if it was skipped."""
    if spec.channel is not None:
        return spec.channel
    if spec.method is not Method.UE_CR:
        raise PreconditionError(f"{spec.method.value} protocol carries no channel")
    conds = spec.center.reshape(spec.alphabet.a1, spec.alphabet.a2)
    conds = conds / conds.sum(axis=1, keepdims=True)
    p = spec.params
    return Channel(ue_cr_matrix(conds, p["kappa"], p["lambda"], p["deltas"]),
                   ue_cr_labels(spec.alphabet))
