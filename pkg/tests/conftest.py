import numpy as np
import pytest

from rldp.core import Alphabet, JointDistribution
from rldp.randstats import SeededRng, empirical_distribution, sample_dataset, sample_jeffreys
from rldp.uncertainty import ConfidenceSet


def random_confidence_set(a1, a2, n, rng, alpha=0.05):
    """Jeffreys truth -> dataset -> estimate; redraw until every S value is observed."""
    al = Alphabet(a1, a2)
    while True:
        counts = sample_dataset(sample_jeffreys(al, rng), n, rng)
        if np.all(counts.reshape(a1, a2).sum(axis=1) > 0):
            return ConfidenceSet.from_sample(empirical_distribution(counts, al), n, alpha)


@pytest.fixture
def rng():
    return SeededRng(20240601)


@pytest.fixture
def small_joint():
    return JointDistribution.from_grid([[0.1, 0.3], [0.2, 0.4]])


@pytest.fixture
def conf3(rng):
    return random_confidence_set(3, 3, 1000, rng)
