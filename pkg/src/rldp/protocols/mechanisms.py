"""Closed-form LDP mechanisms: GRR, unary encoding, and SRR."""

from __future__ import annotations

import math

import numpy as np

from rldp.core import Alphabet, Channel
from rldp.errors import DomainError

# Above this exponent GRR equals the identity to double precision.
EXP_CAP = 700.0


def grr_matrix(k: int, eps: float) -> np.ndarray:
    """GRR over ``k`` symbols; ``eps = inf`` gives the identity.

    ``k = 1`` is accepted and yields the trivial 1x1 channel.
    """
    if k < 1:
        raise DomainError(f"alphabet size must be positive, got {k}")
    if eps < 0 or math.isnan(eps):
        raise DomainError(f"eps must be nonnegative, got {eps}")
    if eps > EXP_CAP:
        return np.eye(k)
    e = math.exp(eps)
    z = e + k - 1.0
    m = np.full((k, k), 1.0 / z)
    np.fill_diagonal(m, e / z)
    return m


def grr(k: int, eps: float) -> Channel:
    """Generalised randomised response on ``k >= 2`` symbols."""
    if k < 2:
        raise DomainError(f"GRR needs at least 2 symbols, got {k}")
    return Channel(grr_matrix(k, eps))


def subset_label(T: int, k: int) -> str:
    return "{" + ",".join(str(i) for i in range(k) if T >> i & 1) + "}"


def ue_matrix(k: int, kappa: float, lam: float) -> np.ndarray:
    """Unary-encoding channel, rows indexed by subset bitmask T in [0, 2^k)."""
    T = np.arange(1 << k)
    bits = (T[:, None] >> np.arange(k)[None, :]) & 1  # [T, s']
    on_l = bits.sum(axis=1, keepdims=True) - bits  # members of T other than s
    off_l = (k - 1) - on_l
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(on_l > 0, lam ** on_l, 1.0) * np.where(off_l > 0, (1.0 - lam) ** off_l, 1.0)
    own = np.where(bits == 1, kappa, 1.0 - kappa)
    return own * other


def unary_encoding(k: int, kappa: float, lam: float) -> Channel:
    """Unary encoding over 2^k subset outputs.

    Position s is reported with probability ``kappa`` when it is the input and
    ``lam`` otherwise, independently across positions.
    """
    if not (0.0 < lam <= kappa < 1.0):
        raise DomainError(f"unary encoding needs 0 < lambda <= kappa < 1, got kappa={kappa}, lambda={lam}")
    labels = tuple(subset_label(T, k) for T in range(1 << k))
    return Channel(ue_matrix(k, kappa, lam), labels)


def ue_ratio(kappa: float, lam: float) -> float:
    """LDP level log(kappa (1 - lam) / (lam (1 - kappa))) of unary encoding."""
    if kappa == lam:
        return 0.0
    if kappa >= 1.0 or lam <= 0.0:
        return math.inf
    return math.log(kappa * (1.0 - lam) / (lam * (1.0 - kappa)))


def kappa_from_ratio(t: float, lam: float) -> float:
    """The kappa whose unary-encoding ratio with ``lam`` equals ``e^t``."""
    e = math.exp(t)
    return e * lam / (1.0 + lam * (e - 1.0))


def symmetric_ue(eps: float) -> tuple[float, float]:
    """(kappa, lambda) pair meeting the ratio bound at ``eps`` with kappa = 1 - lambda."""
    h = math.exp(eps / 2.0)
    return h / (h + 1.0), 1.0 / (h + 1.0)


def srr_matrix(alphabet: Alphabet, eps: float) -> np.ndarray:
    """SRR over X: e^eps on the diagonal, e^-eps inside the same s, 1 elsewhere."""
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    a1, a2 = alphabet.a1, alphabet.a2
    a = alphabet.a
    hi, lo = math.exp(eps), math.exp(-eps)
    z = hi + lo * (a2 - 1) + a - a2
    block = np.kron(np.eye(a1), np.ones((a2, a2)))
    m = np.where(block > 0, lo, 1.0)
    np.fill_diagonal(m, hi)
    return m / z


def srr(alphabet: Alphabet, eps: float) -> Channel:
    return Channel(srr_matrix(alphabet, eps))


def boosted_delta(eps2: float, d: float) -> float:
    """delta with e^delta = 1 + 2 (e^eps2 - 1) / d, or inf when d = 0 and eps2 > 0."""
    if eps2 <= 0:
        return 0.0
    if d <= 0:
        return math.inf
    return math.log1p(2.0 * math.expm1(eps2) / d)
