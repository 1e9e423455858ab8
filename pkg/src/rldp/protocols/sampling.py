"""Release samplers: draw Y for given inputs x = (s, u)."""

from __future__ import annotations

import math

import numpy as np

from rldp.errors import DimensionMismatch
from rldp.protocols.builders import ue_cr_offsets
from rldp.protocols.mechanisms import EXP_CAP
from rldp.protocols.spec import Method, ProtocolSpec
from rldp.randstats import SeededRng


def sample_grr(values: np.ndarray, k: int, delta: float, rng: SeededRng) -> np.ndarray:
    """Apply GRR elementwise: keep with prob e^delta/(e^delta+k-1), else a uniform other symbol."""
    values = np.asarray(values, dtype=np.int64)
    m = values.size
    keep_u = rng.uniform(m)
    other = rng.integers(max(k - 1, 1), m)
    if k == 1 or delta > EXP_CAP:
        return values.copy()
    e = math.exp(delta)
    keep = keep_u < e / (e + k - 1.0)
    other = other + (other >= values)
    return np.where(keep, values, other)


def _decoys(conds: np.ndarray, sp: int, m: int, rng: SeededRng) -> np.ndarray:
    return rng.categorical(conds[sp], m)


def _center_conditionals(spec: ProtocolSpec) -> np.ndarray:
    grid = np.asarray(spec.center, dtype=float).reshape(spec.alphabet.a1, spec.alphabet.a2)
    return grid / grid.sum(axis=1, keepdims=True)


def _sample_ir(spec, s, u, rng):
    a1, a2 = spec.alphabet.a1, spec.alphabet.a2
    y1 = sample_grr(s, a1, spec.params["eps1"], rng)
    y2 = sample_grr(u, a2, spec.params["delta2"], rng)
    return y1 * a2 + y2


def _sample_grr_cr(spec, s, u, rng):
    a1, a2 = spec.alphabet.a1, spec.alphabet.a2
    deltas = spec.params["deltas"]
    conds = _center_conditionals(spec)
    st = sample_grr(s, a1, spec.params["eps1"], rng)
    src = u.copy()
    for sp in range(a1):
        dec = _decoys(conds, sp, s.size, rng)
        src = np.where((st == sp) & (s != sp), dec, src)
    y = np.empty_like(u)
    for sp in range(a1):
        mask = st == sp
        y[mask] = sample_grr(src[mask], a2, deltas[sp], rng)
    return st * a2 + y


def _sample_ue_cr(spec, s, u, rng):
    a1, a2 = spec.alphabet.a1, spec.alphabet.a2
    p = spec.params
    conds = _center_conditionals(spec)
    m = s.size
    T = np.zeros(m, dtype=np.int64)
    pos = np.zeros(m, dtype=np.int64)  # mixed-radix code of the y tuple
    for sp in range(a1):
        bit_u = rng.uniform(m)
        prob = np.where(s == sp, p["kappa"], p["lambda"])
        on = bit_u < prob
        src = np.where(s == sp, u, _decoys(conds, sp, m, rng))
        y = sample_grr(src, a2, p["deltas"][sp], rng)
        T |= on.astype(np.int64) << sp
        # outputs enumerate y tuples with the lowest member most significant
        pos = np.where(on, pos * a2 + y, pos)
    return ue_cr_offsets(a1, a2)[T] + pos


def obfuscate_many(spec: ProtocolSpec, xs, rng: SeededRng) -> np.ndarray:
    """Output indices for a batch of flat inputs ``xs``.

    IR, GRR-CR and UE-CR run their generative procedures; every other method
    samples the channel column directly.
    """
    xs = np.asarray(xs, dtype=np.int64).ravel()
    if xs.size and (xs.min() < 0 or xs.max() >= spec.alphabet.a):
        raise DimensionMismatch(f"inputs must lie in [0, {spec.alphabet.a})")
    s, u = np.divmod(xs, spec.alphabet.a2)
    if spec.method is Method.IR:
        return _sample_ir(spec, s, u, rng)
    if spec.method is Method.GRR_CR:
        return _sample_grr_cr(spec, s, u, rng)
    if spec.method is Method.UE_CR:
        return _sample_ue_cr(spec, s, u, rng)
    Q = spec.channel.matrix
    cdf = np.cumsum(Q, axis=0)
    cdf /= cdf[-1]
    draws = rng.uniform(xs.size)
    out = np.empty(xs.size, dtype=np.int64)
    for x in np.unique(xs):
        mask = xs == x
        out[mask] = np.searchsorted(cdf[:, x], draws[mask], side="right")
    return np.minimum(out, Q.shape[0] - 1)


def obfuscate(spec: ProtocolSpec, x: int, rng: SeededRng) -> int:
    """One release for the flat input ``x``; returns the output index."""
    return int(obfuscate_many(spec, [x], rng)[0])
