import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from fisher_quant_bench.errors import (
    ConfigurationError,
    InvalidSampleError,
    ParameterOutOfDomainError,
    ParseError,
    SingularParameterError,
)
from fisher_quant_bench.models import (
    DiscreteDistribution,
    GaussianCovariance,
    GaussianLocation,
    HolderDensity,
    ProductBernoulli,
    expectation,
    finite_view,
    holder_constant_c0,
    holder_corner,
    holder_seminorm,
    integrate_interval,
    marginal,
    model_from_json,
)


def test_discrete_fisher_trace(discrete2):
    info = discrete2.fisher_X([0.125, 0.125])
    assert np.trace(info) == pytest.approx(56.0 / 3.0, rel=1e-12)
    assert info[0, 1] == pytest.approx(4.0 / 3.0)


def test_discrete_score_has_zero_mean(discrete2):
    theta = [0.2, 0.3]
    mean = sum(discrete2.density(theta, x) * discrete2.score(theta, x) for x in discrete2.support())
    assert np.allclose(mean, 0.0, atol=1e-12)


def test_discrete_rejects_bad_inputs(discrete2):
    with pytest.raises(ParameterOutOfDomainError):
        discrete2.check_theta([0.7, 0.7])
    with pytest.raises(SingularParameterError):
        discrete2.score([0.5, 0.5], 1)
    with pytest.raises(InvalidSampleError):
        discrete2.density([0.2, 0.2], 5)


def test_discrete_samples_are_categories(discrete2, rng):
    draws = discrete2.sample_batch([0.2, 0.3], rng, 1000)
    assert set(np.unique(draws)) <= {1, 2, 3}


def test_gaussian_location_fisher():
    model = GaussianLocation(3, 2.0)
    assert np.allclose(model.fisher_X(np.zeros(3)), np.eye(3) / 4.0)


def test_gaussian_covariance_marginal_score():
    model = GaussianCovariance(2, 0.5, 2.0)
    theta = np.array([1.0, 2.0])
    x = np.array([2.0, 0.0])
    # (x^2 - theta) / (2 theta^2)
    assert model.score(theta, x)[0] == pytest.approx(1.5)
    assert marginal(model, 1).d == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 0.7), st.floats(0.3, 0.7))
def test_bernoulli_score_has_zero_mean(a, b):
    model = ProductBernoulli(2, 'dense', 0.25)
    theta = np.array([a, b])
    view = finite_view(model, theta)
    assert np.allclose(view.score_moments.sum(axis=0), 0.0, atol=1e-10)
    assert view.masses.sum() == pytest.approx(1.0)


def test_bernoulli_sparse_domain():
    model = ProductBernoulli(4, 'sparse', 0.25)
    lo, hi = model.coordinate_interval
    assert lo == pytest.approx(0.0625)
    assert hi == pytest.approx(0.1875)


def test_holder_density_is_normalized_with_zero_mean_score():
    model = HolderDensity(1.0, 1.0, 4)
    theta = holder_corner(model)
    mass = integrate_interval(model, theta, lambda x: 1.0, 0.0, 1.0)
    assert float(mass) == pytest.approx(1.0, abs=1e-8)
    mean = expectation(model, theta, lambda x: model.score(theta, x), model.natural_breakpoints(theta))
    assert np.allclose(mean, 0.0, atol=1e-8)


def test_holder_density_stays_positive():
    model = HolderDensity(0.5, 2.0, 6)
    theta = holder_corner(model)
    values = model.density_values(theta, np.linspace(0.0, 1.0, 2001))
    assert values.min() >= 0.5 - 1e-12


def test_holder_samples_lie_in_unit_interval(rng):
    model = HolderDensity(1.0, 1.0, 4)
    draws = model.sample_batch(holder_corner(model), rng, 500)
    assert draws.min() >= 0.0 and draws.max() <= 1.0


def test_holder_seminorm_of_a_line():
    step = 0.01
    grid = np.arange(0.0, 1.0 + step / 2, step)
    assert holder_seminorm(2.0 * grid, step, 1.0) == pytest.approx(2.0)


def test_holder_constant_scales_with_L():
    assert holder_constant_c0(1.0, 2.0) == pytest.approx(2.0 * holder_constant_c0(1.0, 1.0))


def test_model_from_json_builds_every_kind():
    assert isinstance(model_from_json('{"kind": "discrete", "d": 3, "box": "corollary"}'), DiscreteDistribution)
    assert model_from_json({"kind": "gaussian_location", "d": 2, "sigma": 1.0}).dim == 2
    assert model_from_json({"kind": "bernoulli", "d": 2, "regime": "dense", "eps": 0.25}).dim == 2
    assert model_from_json({"kind": "holder", "s": 1.0, "L": 1.0, "d": 4}).dim == 3


def test_model_from_json_errors():
    with pytest.raises(ParseError) as e:
        model_from_json('{"kind": ')
    assert e.value.kind == "parse"
    with pytest.raises(ConfigurationError) as e:
        model_from_json({"kind": "gaussian_location", "d": 2, "sigma": -1.0})
    assert e.value.field.startswith("model")
    assert e.value.field.endswith("sigma")


def test_corollary_box_bounds():
    model = DiscreteDistribution.corollary_box(4)
    assert model.domain.lower == (1.0 / 16,) * 4
    assert model.domain.upper == (1.0 / 8,) * 4
    assert math.isclose(sum(model.domain.center), 4 * 3.0 / 32)


HOLDER = HolderDensity(1.0, 1.0, 4)


def _discrete_draw(rng):
    return rng.uniform(0.1, 0.4, size=2), int(rng.integers(1, 4))


def _bernoulli_draw(rng):
    return rng.uniform(0.3, 0.7, size=2), rng.integers(0, 2, size=2)


def _holder_draw(rng):
    theta = HOLDER.h + HOLDER.radius * rng.uniform(-0.3, 0.3, size=HOLDER.dim)
    return theta, float(rng.uniform(0.0, 1.0))


SCORE_CASES = {
    'gaussian_location': (GaussianLocation(2, 1.5),
                          lambda rng: (rng.uniform(-0.5, 0.5, size=2), rng.normal(0.0, 2.0, size=2))),
    'gaussian_covariance': (GaussianCovariance(2, 0.5, 2.0),
                            lambda rng: (rng.uniform(0.5, 3.0, size=2), rng.normal(0.0, 1.5, size=2))),
    'discrete': (DiscreteDistribution(2), _discrete_draw),
    'bernoulli': (ProductBernoulli(2, 'dense', 0.25), _bernoulli_draw),
    'holder': (HOLDER, _holder_draw),
}


def _log_density_gradient(model, theta, x, delta=1e-6):
    grad = np.empty(theta.size)
    for i in range(theta.size):
        step = np.zeros(theta.size)
        step[i] = delta
        grad[i] = (model.log_density(theta + step, x) - model.log_density(theta - step, x)) / (2.0 * delta)
    return grad


@pytest.mark.parametrize("name", list(SCORE_CASES))
def test_score_matches_log_density_differences(name):
    model, draw = SCORE_CASES[name]
    rng = np.random.default_rng(2024)
    for _ in range(20):
        theta, x = draw(rng)
        np.testing.assert_allclose(model.score(theta, x), _log_density_gradient(model, theta, x),
                                   rtol=1e-4, atol=1e-7)


@pytest.mark.parametrize("s, L, d", [(1.0, 1.0, 4), (0.5, 2.0, 6)])
def test_holder_corner_density_is_holder(s, L, d):
    model = HolderDensity(s, L, d)
    theta = holder_corner(model)
    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, 1.0, 4000)
    y = np.clip(x + rng.normal(0.0, 0.05, 4000), 0.0, 1.0)
    gap = np.abs(model.density_values(theta, x) - model.density_values(theta, y))
    assert np.all(gap <= L * np.abs(x - y) ** s + 1e-12)


def test_flat_holder_samples_are_uniform():
    model = HolderDensity(1.0, 1.0, 4)
    theta = np.full(model.dim, model.h)
    draws = model.sample_batch(theta, np.random.default_rng(11), 10000)
    result = stats.kstest(draws, 'uniform')
    assert result.statistic < 1.628 / math.sqrt(10000)
