import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from fisher_quant_bench.models import DiscreteDistribution, GaussianLocation, ProductBernoulli


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def discrete2():
    """Three categories; theta = (1/8, 1/8) gives Tr I_X = 56/3"""
    return DiscreteDistribution(2)


@pytest.fixture
def gaussian1():
    return GaussianLocation(1, 1.0)


@pytest.fixture
def bernoulli_dense():
    return ProductBernoulli(2, 'dense', 0.25)
