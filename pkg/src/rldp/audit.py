"""Privacy audits: exact LDP and maximal-set checks, and stress tests over F.

Ratio convention everywhere: 0/0 counts as 1 (an output that is impossible
under both inputs reveals nothing) and a positive number over 0 is infinite.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rldp.core import Alphabet, Channel, JointDistribution
from rldp.errors import DimensionMismatch
from rldp.randstats import SeededRng
from rldp.uncertainty import (
    ConfidenceSet,
    conditional_center,
    conditional_radius,
    extrema,
    lift_conditional,
    sample_members,
)

#: Relative slack on e^eps when deciding pass/fail.
RATIO_TOL = 1e-9
#: Share of stress samples drawn on the boundary of F.
BOUNDARY_SHARE = 0.8


class AuditMode(enum.Enum):
    EXACT_MAXIMAL = "exact-maximal"
    EXACT_LDP = "exact-ldp"
    STRESS_CHI2 = "stress-chi2"


@dataclass
class AuditReport:
    passed: bool
    worst_ratio: float
    witness: dict
    samples_used: int
    mode: AuditMode
    eps: float
    seed: Optional[int] = None
    message: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "mode": self.mode.value,
            "eps": self.eps,
            "worst_ratio": _json_float(self.worst_ratio),
            "bound": _json_float(_bound(self.eps)),
            "witness": {k: (_json_float(v) if isinstance(v, float) else v)
                        for k, v in self.witness.items()},
            "samples_used": self.samples_used,
            "seed": self.seed,
            "message": self.message,
        }
        out.update(self.extra)
        return out


def _json_float(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def serialize_report(report: AuditReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def _bound(eps: float) -> float:
    return math.exp(eps) * (1.0 + RATIO_TOL) if eps < 700 else math.inf


def ratio(num, den):
    """Elementwise num/den with 0/0 = 1 and pos/0 = inf."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 1.0))
    return r


def _matrix(Q) -> np.ndarray:
    return Q.matrix if isinstance(Q, Channel) else np.asarray(Q, dtype=float)


def _verdict(worst: float, eps: float) -> bool:
    return bool(worst <= _bound(eps))


def check_ldp(Q, eps: float) -> AuditReport:
    """Exact max over (y, x, x') of Q[y|x] / Q[y|x']."""
    M = _matrix(Q)
    hi, lo = M.max(axis=1), M.min(axis=1)
    r = ratio(hi, lo)
    y = int(np.argmax(r))
    worst = float(r[y])
    witness = {"y": y, "x": int(np.argmax(M[y])), "x_prime": int(np.argmin(M[y]))}
    passed = _verdict(worst, eps)
    return AuditReport(passed, worst, witness, 0, AuditMode.EXACT_LDP, eps,
                       message="exact check over all input pairs")


def check_rldp_maximal(Q, alphabet: Alphabet, eps: float) -> AuditReport:
    """Exact check against every distribution: max over y and pairs with s != s'."""
    M = _matrix(Q)
    if M.shape[1] != alphabet.a:
        raise DimensionMismatch(f"channel has {M.shape[1]} inputs, alphabet has {alphabet.a}")
    blocks = M.reshape(M.shape[0], alphabet.a1, alphabet.a2)
    hi, lo = blocks.max(axis=2), blocks.min(axis=2)  # [y, s]
    r = ratio(hi[:, :, None], lo[:, None, :])  # [y, s, s']
    idx = np.arange(alphabet.a1)
    r[:, idx, idx] = 0.0
    flat = int(np.argmax(r))
    y, s, s2 = np.unravel_index(flat, r.shape)
    worst = float(r[y, s, s2])
    witness = {"y": int(y), "s": int(s), "s_prime": int(s2),
               "u": int(np.argmax(blocks[y, s])), "u_prime": int(np.argmin(blocks[y, s2]))}
    return AuditReport(_verdict(worst, eps), worst, witness, 0, AuditMode.EXACT_MAXIMAL, eps,
                       message="exact check over all cross-s input pairs")


def output_ratios(M: np.ndarray, alphabet: Alphabet, members: np.ndarray):
    """Worst ratio P(y|s)/P(y|s') for each member (row of ``members``).

    Returns (worst, y, s, s') arrays; rows whose marginal on some s is zero
    must be removed beforehand.
    """
    a1, a2 = alphabet.a1, alphabet.a2
    grid = members.reshape(-1, a1, a2)
    cond = grid / grid.sum(axis=2, keepdims=True)
    blocks = M.reshape(M.shape[0], a1, a2)
    out = np.einsum("ysu,msu->mys", blocks, cond)  # P(y | s) per member
    hi, lo = out.max(axis=2), out.min(axis=2)
    r = ratio(hi, lo)  # [m, y]
    y = np.argmax(r, axis=1)
    rows = np.arange(members.shape[0])
    return r[rows, y], y, np.argmax(out[rows, y], axis=1), np.argmin(out[rows, y], axis=1)


def lift_probes(F: ConfidenceSet) -> np.ndarray:
    """Members of F whose conditional at one s pushes one coordinate to its extreme.

    For each s and u the conditional puts its max (or min) over the projected
    ball on u and rescales the other cells; the lift keeps all other
    conditionals at the center.
    """
    a1, a2 = F.alphabet.a1, F.alphabet.a2
    probes = [F.center.mass.copy()]
    if F.B == 0:
        return np.array(probes)
    for s in range(a1):
        cond = conditional_center(F, s)
        lo, hi = extrema(conditional_radius(F, s), cond)
        for u in range(a2):
            if cond[u] >= 1.0:
                continue
            for target in (lo[u], hi[u]):
                R = cond * (1.0 - target) / (1.0 - cond[u])
                R[u] = target
                probes.append(lift_conditional(F, s, R))
    P = np.maximum(np.array(probes), 0.0)
    return P / P.sum(axis=1, keepdims=True)


def stress_rldp(Q, F: ConfidenceSet, eps: float, n_samples: int, rng: SeededRng,
                boundary_share: float = BOUNDARY_SHARE, probes: bool = True) -> AuditReport:
    """Search F for a violation of the eps bound on P(y|s)/P(y|s').

    Sampling cannot prove the guarantee; a pass means no violation was found
    among the members tried. The worst member is reported as the witness, with
    ties resolved by the lowest sample index.
    """
    M = _matrix(Q)
    alphabet = F.alphabet
    if M.shape[1] != alphabet.a:
        raise DimensionMismatch(f"channel has {M.shape[1]} inputs, alphabet has {alphabet.a}")
    parts = [lift_probes(F)] if probes else []
    if n_samples > 0:
        on_boundary = rng.uniform(n_samples) < boundary_share
        parts.append(sample_members(F, rng, n_samples, on_boundary))
    members = np.vstack(parts) if parts else np.zeros((0, alphabet.a))
    marg = members.reshape(-1, alphabet.a1, alphabet.a2).sum(axis=2)
    members = members[np.all(marg > 0, axis=1)]  # conditioning needs every P_s > 0
    worst, ys, ss, s2s = output_ratios(M, alphabet, members)
    i = int(np.argmax(worst))
    w = float(worst[i])
    passed = _verdict(w, eps)
    witness = {"y": int(ys[i]), "s": int(ss[i]), "s_prime": int(s2s[i]),
               "P": [float(v) for v in members[i]]}
    used = int(members.shape[0])
    msg = (f"no violation found in {used} samples" if passed
           else f"violation found: ratio {w:.6g} exceeds e^eps = {math.exp(min(eps, 700)):.6g}")
    return AuditReport(passed, w, witness, used, AuditMode.STRESS_CHI2, eps, rng.seed, msg)


def exact_ratio_at(Q, P: JointDistribution) -> float:
    """Worst P(y|s)/P(y|s') at a single distribution."""
    return float(output_ratios(_matrix(Q), P.alphabet, P.mass[None, :])[0][0])
