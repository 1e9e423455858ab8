"""Release protocols: mechanisms, builders, utilities, optimizers, samplers."""

from rldp.protocols.builders import (
    MATERIAL_CAP,
    build_grr,
    build_grr_cr,
    build_ir,
    build_srr,
    build_ue,
    build_ue_cr,
    materialize,
)
from rldp.protocols.mechanisms import grr, srr, symmetric_ue, unary_encoding
from rldp.protocols.optimize import SearchGrid, optimize_protocol
from rldp.protocols.sampling import obfuscate, obfuscate_many
from rldp.protocols.spec import (
    Method,
    ProtocolSpec,
    deserialize_spec,
    serialize_spec,
)
from rldp.protocols.utility import (
    brute_force_utility,
    normalized_utility,
    utility,
    utility_grr_cr,
    utility_ir,
    utility_ue_cr,
)

__all__ = [
    "MATERIAL_CAP", "Method", "ProtocolSpec", "SearchGrid",
    "brute_force_utility", "build_grr", "build_grr_cr", "build_ir", "build_srr",
    "build_ue", "build_ue_cr", "deserialize_spec", "grr", "materialize",
    "normalized_utility", "obfuscate", "obfuscate_many", "optimize_protocol",
    "serialize_spec", "srr", "symmetric_ue", "unary_encoding", "utility",
    "utility_grr_cr", "utility_ir", "utility_ue_cr",
]
