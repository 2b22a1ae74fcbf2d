import math

import numpy as np
import pytest

from fisher_quant_bench.bounds import (
    Cos2Prior,
    bayes_risk_bound,
    corollary_bound,
    model_constants,
    nonpar_bandwidth,
    nonpar_lower_bound,
    nonpar_rate,
    prior_sample,
    van_trees_bound,
)
from fisher_quant_bench.errors import ConfigurationError
from fisher_quant_bench.models import (
    DiscreteDistribution,
    GaussianCovariance,
    GaussianLocation,
    HolderDensity,
    ProductBernoulli,
)


def test_van_trees_variance_regime():
    bound = van_trees_bound(1, 100, 1, 1.0, 'thm1', 1.0)
    assert bound.value == pytest.approx(1.0 / (200.0 + math.pi ** 2), rel=1e-12)
    assert bound.value == pytest.approx(4.7649e-3, rel=1e-4)


def test_van_trees_orlicz_regime():
    bound = van_trees_bound(4, 20000, 1, 1.0, 'thm2', 8.0 / 3.0, p=2.0)
    assert bound.value == pytest.approx(16.0 / (32.0 / 3.0 * 2e4 + 4.0 * math.pi ** 2), rel=1e-12)
    assert bound.value == pytest.approx(7.4986e-5, rel=1e-3)


def test_van_trees_prior_only():
    assert van_trees_bound(3, 0, 1, 0.5, 'thm1', 1.0).value == pytest.approx(3 * 0.25 / math.pi ** 2)


def test_van_trees_rejects_bad_inputs():
    with pytest.raises(ConfigurationError):
        van_trees_bound(1, 10, 1, 1.0, 'thm3', 1.0)
    with pytest.raises(ConfigurationError):
        van_trees_bound(1, 10, 1, 1.0, 'thm2', 1.0)
    with pytest.raises(ConfigurationError):
        van_trees_bound(1, 10, 1, -1.0, 'thm1', 1.0)


def test_bayes_risk_bound():
    assert bayes_risk_bound(2, 10, 3.0, 1.0) == pytest.approx(4.0 / (30.0 + 2 * math.pi ** 2))


def test_cos2_prior():
    prior = Cos2Prior(0.5)
    assert prior.fisher_information() == pytest.approx(math.pi ** 2 / 0.25, rel=1e-6)
    assert float(prior.cdf(-0.5)) == pytest.approx(0.0)
    assert float(prior.cdf(0.5)) == pytest.approx(1.0)
    draws = prior_sample(prior, np.random.default_rng(0), 20000)
    assert np.all(np.abs(draws) <= 0.5)
    assert abs(draws.mean()) < 0.01


@pytest.mark.parametrize("B, expected", [(1.0, math.pi ** 2), (2.0, math.pi ** 2 / 4.0)])
def test_cos2_prior_information_scales_with_width(B, expected):
    assert Cos2Prior(B).fisher_information() == pytest.approx(expected, rel=1e-6)


def test_discrete_corollary_bound():
    bound = corollary_bound(DiscreteDistribution(7), 512, 1)
    assert bound.value == pytest.approx(1.89e-4, rel=5e-3)
    assert bound.regime == 'thm1'
    assert bound.warnings == []


def test_discrete_rate_tag():
    bound = corollary_bound(DiscreteDistribution(8), 10_000, 1)
    assert bound.rate_expression == "d/(n 2^k)"
    assert bound.to_dict()['rate'] == "d/(n 2^k)"


def test_gaussian_location_rate_tags():
    model = GaussianLocation(4, 1.0)
    assert corollary_bound(model, 10_000, 8).rate_expression == "d/n"
    assert corollary_bound(model, 10_000, 1).rate_expression == "d^2/(nk)"


def test_gaussian_location_uses_smallest_trace_bound():
    bound = corollary_bound(GaussianLocation(8, 1.0), 16384, 8)
    assert bound.inputs['trace_bound'] == pytest.approx(8.0)
    assert bound.inputs['trace_bound_source'] == 'tr_IX'
    assert bound.value == pytest.approx(64.0 / (16384 * 8.0 + 8 * math.pi ** 2))


def test_failed_precondition_warns():
    bound = corollary_bound(DiscreteDistribution(7), 10, 1)
    assert len(bound.warnings) == 1
    assert "precondition" in bound.warnings[0]


def test_covariance_and_bernoulli_constants():
    cov = model_constants(GaussianCovariance(2, 1.0, 2.0))
    assert cov.p == 1.0
    assert cov.B == pytest.approx(1.5)
    dense = model_constants(ProductBernoulli(3, 'dense', 0.25))
    assert dense.variance_I0 == pytest.approx(16.0 / 3.0)
    sparse = corollary_bound(ProductBernoulli(4, 'sparse', 0.25), 10_000, 1)
    assert sparse.rate_expression == "d/(n 2^k)"


def test_holder_has_no_parametric_constants():
    with pytest.raises(ConfigurationError):
        model_constants(HolderDensity(1.0, 1.0, 4))


def test_nonpar_bandwidth():
    bandwidth = nonpar_bandwidth(1.0, 1024, 1)
    assert bandwidth.h == pytest.approx(0.14865, abs=1e-4)
    assert bandwidth.d == 7
    assert bandwidth.converged
    single = nonpar_bandwidth(1.0, 1, 1)
    assert single.h == pytest.approx(1.0)
    assert single.d == 1


def test_nonpar_rate_branches():
    value, tag = nonpar_rate(1.0, 1e6, 1)
    assert value == pytest.approx(7.0711e-4, rel=1e-4)
    assert tag == "(n 2^k)^(-s/(s+1))"
    value, tag = nonpar_rate(0.5, 1e4, 1)
    assert value == pytest.approx(0.03684, rel=1e-3)
    assert tag == "(n 2^k)^(-s/(s+1))"
    _, tag = nonpar_rate(1.0, 1e4, 20)
    assert tag == "n^(-2s/(2s+1))"


def test_nonpar_lower_bound_is_positive_and_below_rate():
    bound = nonpar_lower_bound(1.0, 1.0, 4096, 1)
    assert 0.0 < bound.value < bound.rate_value
    assert bound.inputs['d'] >= 2
    with pytest.raises(ConfigurationError):
        nonpar_lower_bound(1.5, 1.0, 4096, 1)
