"""Seeded randomness, chi-square quantiles, and empirical estimation.

The generator is Philox-4x64 (counter-based, so streams are identical on every
platform for a given 64-bit seed). All derived variates are built here from its
raw 64-bit output rather than numpy's distribution methods, which keeps the
streams pinned to this module's code rather than to a numpy version.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rldp.core import Alphabet, JointDistribution
from rldp.errors import DomainError, EmptyData, ParseError

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0
_MASK64 = (1 << 64) - 1


class SeededRng:
    """Reproducible random stream over Philox-4x64 keyed by a 64-bit seed."""

    algorithm = "philox4x64"

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0 or seed > _MASK64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._bitgen = np.random.Philox(key=seed)

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(size)

    def uniform(self, size: Optional[int] = None):
        """Doubles in [0, 1) with 53 random bits each."""
        n = 1 if size is None else int(size)
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return float(u[0]) if size is None else u

    def normal(self, size: int) -> np.ndarray:
        """Standard normals by the Box-Muller transform."""
        size = int(size)
        half = (size + 1) // 2
        u1 = 1.0 - self.uniform(half)  # (0, 1], keeps the log finite
        u2 = self.uniform(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * half)
        z[0::2] = r * np.cos(_TWO_PI * u2)
        z[1::2] = r * np.sin(_TWO_PI * u2)
        return z[:size]

    def gamma_half(self, size: int) -> np.ndarray:
        """Gamma(shape 1/2, scale 1) variates as z^2 / 2."""
        z = self.normal(size)
        return 0.5 * z * z

    def dirichlet_half(self, k: int, size: Optional[int] = None) -> np.ndarray:
        """Dirichlet(1/2, ..., 1/2) draws (Jeffreys prior on the simplex)."""
        m = 1 if size is None else int(size)
        g = self.gamma_half(m * k).reshape(m, k)
        tot = g.sum(axis=1, keepdims=True)
        tot[tot == 0] = 1.0
        out = g / tot
        return out[0] if size is None else out

    def categorical(self, p: np.ndarray, size: int) -> np.ndarray:
        """Indices drawn from ``p`` by inverting its cumulative sum."""
        cdf = np.cumsum(np.asarray(p, dtype=float))
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, self.uniform(size), side="right")
        return np.minimum(idx, cdf.size - 1)

    def choice(self, p: np.ndarray) -> int:
        return int(self.categorical(p, 1)[0])

    def integers(self, high: int, size: int) -> np.ndarray:
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)

    def spawn(self, index: int) -> "SeededRng":
        """Independent stream for a sub-task, seeded as ``seed XOR index``."""
        return SeededRng(self.seed ^ (int(index) & _MASK64))


def trial_rng(seed: int, trial: int) -> SeededRng:
    return SeededRng((int(seed) ^ int(trial)) & _MASK64)


# -- incomplete gamma and chi-square -------------------------------------


def _gamma_series(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_cf(s: float, x: float) -> float:
    """Upper regularized gamma Q(s, x) by modified Lentz continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def gammainc_lower(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x)."""
    if s <= 0:
        raise DomainError("shape must be positive")
    if x <= 0:
        return 0.0
    if x < s + 1.0:
        return min(1.0, _gamma_series(s, x))
    return max(0.0, 1.0 - _gamma_cf(s, x))


def chi2_cdf(t: float, d: int) -> float:
    return gammainc_lower(0.5 * d, 0.5 * t)


def chi2_quantile(d: int, p: float) -> float:
    """Inverse chi-square CDF with ``d`` degrees of freedom, by bisection."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if d < 1:
        raise DomainError(f"degrees of freedom must be at least 1, got {d}")
    lo, hi = 0.0, d + 40.0 * math.sqrt(d)
    while chi2_cdf(hi, d) < p:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chi2_cdf(mid, d) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compute_B(alphabet: Alphabet, n: int, alpha: float) -> float:
    """Radius of the chi-square confidence set for ``n`` samples at level ``alpha``."""
    if n < 1:
        raise DomainError(f"sample count must be at least 1, got {n}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return chi2_quantile(alphabet.a - 1, 1.0 - alpha) / n


# -- sampling and estimation ---------------------------------------------


def sample_jeffreys(alphabet: Alphabet, rng: SeededRng) -> JointDistribution:
    return JointDistribution(alphabet, rng.dirichlet_half(alphabet.a))


def sample_dataset(P: JointDistribution, n: int, rng: SeededRng) -> np.ndarray:
    """Multinomial count table (flat over X) for ``n`` iid draws from ``P``."""
    a = P.alphabet.a
    if n <= 0:
        return np.zeros(a, dtype=np.int64)
    idx = rng.categorical(P.mass, n)
    return np.bincount(idx, minlength=a).astype(np.int64)


def empirical_distribution(counts, alphabet: Optional[Alphabet] = None,
                           smoothing: float = 0.0, **meta) -> JointDistribution:
    """Frequency estimate (count_x + c) / (n + a c) from a count table.

    Args:
        counts: Flat counts over X, or an a1 x a2 grid.
        alphabet: Required when ``counts`` is flat.
        smoothing: Pseudocount ``c`` added to every cell.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 2:
        alphabet = alphabet or Alphabet(*counts.shape)
        counts = counts.ravel()
    if alphabet is None:
        raise DomainError("alphabet is required for flat counts")
    if np.any(counts < 0):
        raise DomainError("counts must be nonnegative")
    if smoothing < 0:
        raise DomainError("smoothing pseudocount must be nonnegative")
    n = counts.sum()
    if n < 1 and smoothing == 0:
        raise EmptyData("count table is empty")
    mass = (counts + smoothing) / (n + alphabet.a * smoothing)
    meta.setdefault("n", int(round(n)))
    return JointDistribution(alphabet, mass, **meta)


@dataclass
class CategoricalData:
    """Two categorical columns read from a CSV, encoded as integer codes."""

    s_codes: np.ndarray
    u_codes: np.ndarray
    s_labels: tuple
    u_labels: tuple

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.s_labels), max(1, len(self.u_labels)))

    def counts(self) -> np.ndarray:
        a = self.alphabet
        flat = self.s_codes * a.a2 + self.u_codes
        return np.bincount(flat, minlength=a.a).astype(np.int64)


def _column(header: list, name: str) -> int:
    if name in header:
        return header.index(name)
    stripped = [h.strip() for h in header]
    if name.strip() in stripped:
        return stripped.index(name.strip())
    raise ParseError(f"column {name!r} not found; available: {', '.join(stripped)}")


def load_categorical_csv(path, s_col: str, u_col: str,
                         s_labels: Optional[tuple] = None,
                         u_labels: Optional[tuple] = None) -> CategoricalData:
    """Read two categorical columns, labelling values in first-appearance order.

    When label tuples are given (for instance from a fitted distribution), the
    codes follow them and an unseen value is a ParseError.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyData(f"{path} is empty") from None
        si, ui = _column(header, s_col), _column(header, u_col)
        maps = []
        for fixed in (s_labels, u_labels):
            maps.append({v: i for i, v in enumerate(fixed)} if fixed is not None else {})
        s_codes, u_codes = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if max(si, ui) >= len(row):
                raise ParseError(f"{path}:{lineno}: row has {len(row)} fields")
            for col, mapping, fixed, out in ((si, maps[0], s_labels, s_codes),
                                             (ui, maps[1], u_labels, u_codes)):
                val = row[col].strip()
                if val not in mapping:
                    if fixed is not None:
                        raise ParseError(f"{path}:{lineno}: value {val!r} not in the fitted labels")
                    mapping[val] = len(mapping)
                out.append(mapping[val])
    if not s_codes:
        raise EmptyData(f"{path} has no data rows")
    s_lab = tuple(s_labels) if s_labels is not None else tuple(maps[0])
    u_lab = tuple(u_labels) if u_labels is not None else tuple(maps[1])
    return CategoricalData(np.array(s_codes, dtype=np.int64), np.array(u_codes, dtype=np.int64),
                           s_lab, u_lab)
