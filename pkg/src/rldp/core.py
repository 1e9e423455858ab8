"""Probability and channel types over the product alphabet X = S x U.

Every distribution over X is stored as a flat vector in row-major order: the
cell x = (s, u) lives at index ``s * a2 + u``. Channels are left-stochastic
matrices indexed ``[y, x]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rldp.errors import DimensionMismatch, InvariantViolation, ParseError, ZeroMarginal

#: Accept/reject boundary for stochasticity checks on ingest.
STOCHASTIC_TOL = 1e-9
#: Columns closer than this to summing to one are stored as given.
RESCALE_TOL = 1e-14
#: Entries in [-NEG_CLIP, 0) are treated as floating-point zeros.
NEG_CLIP = 1e-12


@dataclass(frozen=True)
class Alphabet:
    a1: int
    a2: int

    def __post_init__(self):
        if int(self.a1) != self.a1 or int(self.a2) != self.a2:
            raise InvariantViolation("alphabet sizes must be integers")
        if self.a1 < 2:
            raise InvariantViolation(f"|S| must be at least 2, got {self.a1}")
        if self.a2 < 1:
            raise InvariantViolation(f"|U| must be at least 1, got {self.a2}")

    @property
    def a(self) -> int:
        return self.a1 * self.a2

    def index(self, s: int, u: int) -> int:
        return s * self.a2 + u

    def split(self, x: int) -> tuple[int, int]:
        return divmod(x, self.a2)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _check_distribution(p: np.ndarray, what: str) -> np.ndarray:
    if p.ndim != 1 or p.size == 0:
        raise InvariantViolation(f"{what} must be a non-empty vector")
    if not np.all(np.isfinite(p)):
        raise InvariantViolation(f"{what} has non-finite entries", int(np.argmin(np.isfinite(p))))
    bad = np.flatnonzero(p < -NEG_CLIP)
    if bad.size:
        raise InvariantViolation(f"{what} has a negative entry {p[bad[0]]!r}", int(bad[0]))
    p = np.where(p < 0, 0.0, p)
    total = p.sum()
    if abs(total - 1.0) > STOCHASTIC_TOL:
        raise InvariantViolation(f"{what} sums to {total!r}, not 1")
    return p / total


@dataclass(frozen=True)
class JointDistribution:
    """Probability mass over S x U, flattened row-major (s outer, u inner).

    ``n`` and the label tuples are optional metadata carried through the
    distribution file format; they do not take part in any computation.
    """

    alphabet: Alphabet
    mass: np.ndarray
    n: Optional[int] = None
    s_labels: Optional[tuple] = None
    u_labels: Optional[tuple] = None

    def __post_init__(self):
        p = np.asarray(self.mass, dtype=float)
        if p.shape != (self.alphabet.a,):
            raise DimensionMismatch(
                f"mass has shape {p.shape}, alphabet needs ({self.alphabet.a},)"
            )
        object.__setattr__(self, "mass", _readonly(_check_distribution(p, "distribution")))
        for name, size in (("s_labels", self.alphabet.a1), ("u_labels", self.alphabet.a2)):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(v) for v in labels)
                if len(labels) != size:
                    raise DimensionMismatch(f"{name} has {len(labels)} entries, expected {size}")
                object.__setattr__(self, name, labels)

    @classmethod
    def from_grid(cls, grid, **meta) -> "JointDistribution":
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2:
            raise DimensionMismatch("grid must be two-dimensional (rows indexed by s)")
        return cls(Alphabet(*grid.shape), grid.ravel(), **meta)

    @property
    def grid(self) -> np.ndarray:
        return self.mass.reshape(self.alphabet.a1, self.alphabet.a2)

    @property
    def marginal_s(self) -> np.ndarray:
        return self.grid.sum(axis=1)

    @property
    def marginal_u(self) -> np.ndarray:
        return self.grid.sum(axis=0)

    def with_mass(self, mass) -> "JointDistribution":
        return JointDistribution(self.alphabet, mass, self.n, self.s_labels, self.u_labels)


@dataclass(frozen=True)
class Channel:
    """Left-stochastic release protocol, ``matrix[y, x] = Q(y | x)``."""

    matrix: np.ndarray
    output_labels: tuple = field(default=None)

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        if q.ndim != 2 or q.size == 0:
            raise InvariantViolation("channel matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(q)):
            raise InvariantViolation("channel has non-finite entries")
        neg = np.argwhere(q < -NEG_CLIP)
        if neg.size:
            y, x = neg[0]
            raise InvariantViolation(f"channel entry Q[{y}|{x}] = {q[y, x]!r} is negative", (int(y), int(x)))
        q = np.where(q < 0, 0.0, q)
        sums = q.sum(axis=0)
        dev = np.abs(sums - 1.0)
        if np.any(dev > STOCHASTIC_TOL):
            x = int(np.argmax(dev))
            raise InvariantViolation(f"column for input x={x} sums to {sums[x]!r}", x)
        # only rescale columns off by more than rounding, so stored channels round-trip exactly
        q = np.where(dev > RESCALE_TOL, q / sums, q)
        object.__setattr__(self, "matrix", _readonly(q))
        labels = self.output_labels
        if labels is None:
            labels = tuple(str(i) for i in range(q.shape[0]))
        else:
            labels = tuple(str(v) for v in labels)
            if len(labels) != q.shape[0]:
                raise DimensionMismatch(f"{len(labels)} labels for {q.shape[0]} outputs")
        object.__setattr__(self, "output_labels", labels)

    @property
    def input_size(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, k: int) -> "Channel":
        return cls(np.eye(k))


def _mass(P) -> np.ndarray:
    return P.mass if isinstance(P, JointDistribution) else np.asarray(P, dtype=float)


def conditional_given_s(P: JointDistribution, s: int) -> np.ndarray:
    """Return the conditional law of U given S = s."""
    row = P.grid[s]
    ps = row.sum()
    if ps <= 0:
        raise ZeroMarginal(s)
    return row / ps


def push_forward(P, Q: Channel) -> np.ndarray:
    """Output distribution of Y = Q(X) for X ~ P."""
    p = _mass(P)
    if Q.input_size != p.size:
        raise DimensionMismatch(f"channel expects {Q.input_size} inputs, distribution has {p.size}")
    return Q.matrix @ p


def channel_given_s(P: JointDistribution, Q: Channel, s: int) -> np.ndarray:
    """Law of Y given S = s, i.e. sum_u Q(y | s, u) P(u | s)."""
    if Q.input_size != P.alphabet.a:
        raise DimensionMismatch(f"channel expects {Q.input_size} inputs, alphabet has {P.alphabet.a}")
    a2 = P.alphabet.a2
    cond = conditional_given_s(P, s)
    return Q.matrix[:, s * a2:(s + 1) * a2] @ cond


# -- serialization ---------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _loads(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object at top level")
    return obj


def _require(obj: dict, key: str, kind):
    if key not in obj:
        raise ParseError(f"missing field {key!r}")
    value = obj[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"field {key!r} must be an integer")
    elif kind is list and not isinstance(value, list):
        raise ParseError(f"field {key!r} must be a list")
    return value


def distribution_to_dict(P: JointDistribution) -> dict:
    out = {"a1": P.alphabet.a1, "a2": P.alphabet.a2, "p": [float(v) for v in P.mass]}
    if P.n is not None:
        out["n"] = int(P.n)
    if P.s_labels is not None:
        out["s_labels"] = list(P.s_labels)
    if P.u_labels is not None:
        out["u_labels"] = list(P.u_labels)
    return out


def distribution_from_dict(obj: dict) -> JointDistribution:
    a1 = _require(obj, "a1", int)
    a2 = _require(obj, "a2", int)
    p = _require(obj, "p", list)
    try:
        mass = np.array(p, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field 'p' must hold numbers: {exc}") from exc
    if mass.shape != (a1 * a2,):
        raise ParseError(f"field 'p' has {mass.size} entries, expected a1*a2 = {a1 * a2}")
    n = obj.get("n")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
        raise ParseError("field 'n' must be an integer")
    return JointDistribution(
        Alphabet(a1, a2), mass, n=n,
        s_labels=obj.get("s_labels"), u_labels=obj.get("u_labels"),
    )


def serialize_distribution(P: JointDistribution) -> str:
    return _dumps(distribution_to_dict(P))


def deserialize_distribution(text: str) -> JointDistribution:
    return distribution_from_dict(_loads(text))


def channel_to_dict(Q: Channel) -> dict:
    return {
        "input_size": Q.input_size,
        "output_size": Q.output_size,
        "labels": list(Q.output_labels),
        "q": [[float(v) for v in col] for col in Q.matrix.T],
    }


def channel_from_dict(obj: dict) -> Channel:
    n_in = _require(obj, "input_size", int)
    n_out = _require(obj, "output_size", int)
    labels = _require(obj, "labels", list)
    cols = _require(obj, "q", list)
    if len(cols) != n_in:
        raise ParseError(f"'q' has {len(cols)} columns, expected input_size = {n_in}")
    for x, col in enumerate(cols):
        if not isinstance(col, list) or len(col) != n_out:
            raise ParseError(f"column {x} of 'q' must be a list of {n_out} numbers")
    try:
        matrix = np.array(cols, dtype=float).T
    except (TypeError, ValueError) as exc:
        raise ParseError(f"'q' must hold numbers: {exc}") from exc
    return Channel(matrix, tuple(labels))


def serialize_channel(Q: Channel) -> str:
    return _dumps(channel_to_dict(Q))


def deserialize_channel(text: str) -> Channel:
    return channel_from_dict(_loads(text))


def as_distribution(p: Sequence[float] | np.ndarray, alphabet: Alphabet) -> JointDistribution:
    return JointDistribution(alphabet, np.asarray(p, dtype=float))
