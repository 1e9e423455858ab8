"""ProtocolSpec: a built protocol together with its privacy certificate."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rldp.core import Alphabet, Channel, channel_from_dict, channel_to_dict
from rldp.errors import ParseError


class Method(str, enum.Enum):
    GRR = "grr"
    UE = "ue"
    SRR = "srr"
    IR = "ir"
    GRR_CR = "grr-cr"
    UE_CR = "ue-cr"
    POLYOPT = "polyopt"

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ParseError(f"unknown method {name!r}; choose from {', '.join(m.value for m in cls)}")


@dataclass(frozen=True)
class ProtocolSpec:
    """A release protocol over X plus the guarantee it was built under.

    Attributes:
        method: Construction used.
        eps: Privacy budget the protocol is certified for.
        alphabet: Input alphabet S x U.
        params: Method-specific parameters (eps1, eps2, delta2, deltas, kappa, lambda, ...).
        channel: Explicit channel, or None when it is too large to materialize.
        certificate: Which guarantee applies and the uncertainty set it covers.
        center: Estimated distribution the protocol was built from, if any.
    """

    method: Method
    eps: float
    alphabet: Alphabet
    params: dict
    channel: Optional[Channel]
    certificate: dict
    center: Optional[np.ndarray] = field(default=None)

    @property
    def output_labels(self) -> tuple:
        if self.channel is not None:
            return self.channel.output_labels
        from rldp.protocols.builders import ue_cr_labels

        return ue_cr_labels(self.alphabet)


def _num(v):
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if f == float("inf"):
            return "inf"
        return f
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    return v


def _unnum(v):
    if v == "inf":
        return float("inf")
    if isinstance(v, list):
        return [_unnum(x) for x in v]
    if isinstance(v, dict):
        return {k: _unnum(x) for k, x in v.items()}
    return v


def spec_to_dict(spec: ProtocolSpec) -> dict:
    return {
        "method": spec.method.value,
        "eps": _num(spec.eps),
        "a1": spec.alphabet.a1,
        "a2": spec.alphabet.a2,
        "params": _num(spec.params),
        "certificate": _num(spec.certificate),
        "center": None if spec.center is None else _num(spec.center),
        "channel": None if spec.channel is None else channel_to_dict(spec.channel),
    }


def spec_from_dict(obj: dict) -> ProtocolSpec:
    try:
        method = Method.parse(obj["method"])
        eps = float(_unnum(obj["eps"]))
        alphabet = Alphabet(int(obj["a1"]), int(obj["a2"]))
        params = _unnum(obj.get("params") or {})
        cert = _unnum(obj.get("certificate") or {})
    except KeyError as exc:
        raise ParseError(f"protocol file is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed protocol file: {exc}") from None
    center = obj.get("center")
    center = None if center is None else np.array(center, dtype=float)
    ch = obj.get("channel")
    channel = None if ch is None else channel_from_dict(ch)
    if channel is None and method is not Method.UE_CR:
        raise ParseError(f"protocol file for {method.value} must contain an explicit channel")
    if channel is None and center is None:
        raise ParseError("a generative ue-cr protocol needs the 'center' distribution")
    return ProtocolSpec(method, eps, alphabet, params, channel, cert, center)


def serialize_spec(spec: ProtocolSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def deserialize_spec(text: str) -> ProtocolSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object at top level")
    return spec_from_dict(obj)
