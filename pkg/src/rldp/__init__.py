"""Robust local differential privacy: protocols that stay private under an
uncertain data distribution, with utility measured as mutual information."""

from rldp.core import Alphabet, Channel, JointDistribution
from rldp.errors import RLDPError
from rldp.randstats import SeededRng, chi2_quantile, compute_B, empirical_distribution
from rldp.uncertainty import ConfidenceSet

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Channel", "ConfidenceSet", "JointDistribution", "RLDPError", "SeededRng",
    "chi2_quantile", "compute_B", "empirical_distribution",
]
