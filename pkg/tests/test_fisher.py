import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fisher_quant_bench.errors import EmptyBinError, InfeasibleEnumerationError
from fisher_quant_bench.fisher import (
    ScalarDistribution,
    blackboard_bounds,
    bound_thm1,
    bound_thm2,
    brute_force_max_trace,
    centroid,
    message_score_fd,
    orlicz_norm,
    orlicz_projection_sup,
    set_partitions,
    tail_envelope,
    trace_IM,
    trace_IM_blackboard,
    trace_IM_fd,
    trace_IM_monte_carlo,
    transcript_total,
    tree_identity,
    variance_I0,
)
from fisher_quant_bench.models import DiscreteDistribution, GaussianLocation, ProductBernoulli
from fisher_quant_bench.quantizers import (
    CellPartition,
    CoordinateSign,
    DiscreteTable,
    TableBit,
    identity_quantizer,
    induced_tree,
    message_moments,
    one_cell_quantizer,
    random_valid_tree,
    sign_quantizer,
    uniform_quantizer,
)

THETA = [0.125, 0.125]


def test_identity_quantizer_keeps_all_information(discrete2):
    report = trace_IM(discrete2, THETA, identity_quantizer(discrete2), with_matrix=True)
    assert report.trace == pytest.approx(56.0 / 3.0, rel=1e-12)
    assert np.trace(report.matrix) == pytest.approx(report.trace)
    assert len(report.centroids) == 3


def test_one_cell_quantizer_has_no_information(discrete2):
    assert trace_IM(discrete2, THETA, one_cell_quantizer(1)).trace == 0.0


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_sign_quantizer_on_gaussian(sigma):
    model = GaussianLocation(1, sigma)
    assert trace_IM(model, [0.0], sign_quantizer(0.0)).trace == pytest.approx(2.0 / (math.pi * sigma ** 2), abs=1e-8)


def test_sign_centroid(gaussian1):
    c = centroid(gaussian1, [0.0], sign_quantizer(0.0), 2)
    assert c[0] == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-8)


def test_empty_bin_centroid_raises(discrete2):
    # the identity table on three categories never sends message 4
    with pytest.raises(EmptyBinError):
        centroid(discrete2, THETA, identity_quantizer(discrete2), 4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_quantized_trace_never_exceeds_sample_trace(seed):
    rng = np.random.default_rng(seed)
    model = ProductBernoulli(2, 'dense', 0.25)
    theta = rng.uniform(0.3, 0.7, size=2)
    table = DiscreteTable(1, tuple(model.support()), rng.dirichlet(np.ones(2), size=4))
    trace = trace_IM(model, theta, table).trace
    assert 0.0 <= trace <= np.trace(model.fisher_X(theta)) + 1e-12


def test_centroid_trace_matches_finite_differences(discrete2, rng):
    table = DiscreteTable(2, (1, 2, 3), rng.dirichlet(np.ones(4), size=3))
    theta = [0.3, 0.25]
    exact = trace_IM(discrete2, theta, table)
    assert trace_IM_fd(discrete2, theta, table) == pytest.approx(exact.trace, rel=1e-6)
    first = exact.centroids[0]
    assert np.allclose(message_score_fd(discrete2, theta, table, first['m']), first['vector'], rtol=1e-6)


def test_monte_carlo_trace_is_close_to_exact():
    model = GaussianLocation(2, 1.0)
    q = CoordinateSign(2, (0, 1), (0.0, 0.0))
    exact = trace_IM(model, [0.0, 0.0], q).trace
    assert exact == pytest.approx(4.0 / math.pi, abs=1e-8)
    estimate = trace_IM_monte_carlo(model, [0.0, 0.0], q, np.random.default_rng(3), samples=200_000)
    assert estimate.stderr is not None
    assert estimate.trace == pytest.approx(exact, abs=0.05)


def test_independent_blackboard_trace_is_additive(discrete2):
    q = identity_quantizer(discrete2)
    assert trace_IM_blackboard(induced_tree([q, q]), discrete2, THETA) == pytest.approx(2 * 56.0 / 3.0, rel=1e-10)


@pytest.mark.parametrize("n,k", [(2, 1), (2, 2), (3, 1)])
def test_tree_identity_on_random_trees(n, k):
    rng = np.random.default_rng(n * 10 + k)
    model = DiscreteDistribution(3)
    tree = random_valid_tree(n, k, rng, lambda r: TableBit(tuple(r.random(4))))
    theta = [0.2, 0.3, 0.1]
    for j in range(1, n + 1):
        assert tree_identity(tree, model, theta, j) == pytest.approx(2 ** k, abs=1e-9)
    assert transcript_total(tree, model, theta) == pytest.approx(1.0, abs=1e-9)


def test_blackboard_bounds_hold(bernoulli_dense):
    rng = np.random.default_rng(5)
    tree = random_valid_tree(2, 1, rng, lambda r: TableBit(tuple(r.random(4))))
    I0 = variance_I0(bernoulli_dense)
    report = blackboard_bounds(tree, bernoulli_dense, [0.4, 0.6], I0)
    assert report['trace'] <= report['variance_bound']
    assert report['orlicz_bound'] == pytest.approx(4.0 * I0 * 2)


def test_variance_I0_values(bernoulli_dense):
    assert variance_I0(GaussianLocation(2, 2.0)) == pytest.approx(0.25)
    assert variance_I0(bernoulli_dense) == pytest.approx(16.0 / 3.0)
    # lambda_max of I_X over [1/8, 1/4]^2 sits at (1/8, 1/8)
    assert variance_I0(DiscreteDistribution.corollary_box(2)) == pytest.approx(32.0 / 3.0, rel=1e-10)


def test_orlicz_norm_of_standard_normal():
    assert orlicz_norm(ScalarDistribution.normal(1.0), 2.0) == pytest.approx(math.sqrt(8.0 / 3.0), abs=1e-4)


def test_orlicz_norm_of_atoms():
    assert orlicz_norm(ScalarDistribution.point_mass(0.0), 2.0) == 0.0
    assert orlicz_norm(ScalarDistribution.point_mass(2.0), 2.0) == pytest.approx(2.0 / math.sqrt(math.log(2.0)),
                                                                              rel=1e-5)


def test_projection_sup_for_isotropic_scores():
    result = orlicz_projection_sup(GaussianLocation(2, 1.0), [0.0, 0.0], 2.0, np.random.default_rng(0), directions=5)
    assert result["norm"] == pytest.approx(math.sqrt(8.0 / 3.0), abs=1e-4)
    assert result["heuristic"]
    assert len(result["direction"]) == 2


def test_uniform_quantizer_carries_no_information(discrete2):
    assert trace_IM(discrete2, THETA, uniform_quantizer(discrete2.support(), 2)).trace == pytest.approx(0.0, abs=1e-12)


def test_tail_envelope():
    assert tail_envelope(0.25, 2.0) == pytest.approx(0.25 * math.log(8.0))
    xs = np.linspace(0.0, 1.0, 101)
    env = tail_envelope(xs, 2.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        raw = np.where(xs > 0, xs * np.log(2.0 / np.maximum(xs, 1e-300)), 0.0)
    assert np.all(env >= raw - 1e-12)
    assert np.all(np.diff(env, 2) <= 1e-6)


def test_trace_bounds():
    first = bound_thm1(2.0, 1, 10.0)
    assert first.bound_value == pytest.approx(4.0)
    assert first.components['communication'] == pytest.approx(4.0)
    second = bound_thm2(1.0, 2, 2.0, 100.0)
    assert second.bound_value == pytest.approx(8.0)
    assert second.components['refined'] == pytest.approx(3.0 * math.log(2.0))


def test_set_partition_counts():
    assert len(list(set_partitions(3, 2))) == 4
    assert len(list(set_partitions(4, 4))) == 15


def test_brute_force_on_three_categories(discrete2):
    assert brute_force_max_trace(discrete2, THETA, 2).trace == pytest.approx(56.0 / 3.0)
    best = brute_force_max_trace(discrete2, THETA, 1)
    # categories 1 and 2 merged against category 3
    assert best.trace == pytest.approx(32.0 / 3.0)
    assert trace_IM(discrete2, THETA, best.quantizer).trace == pytest.approx(best.trace)


def test_brute_force_needs_finite_support(gaussian1):
    with pytest.raises(InfeasibleEnumerationError):
        brute_force_max_trace(gaussian1, [0.0], 1)


def test_coordinate_sign_moments_factorize():
    model = GaussianLocation(2, 1.0)
    probs, moments = message_moments(CoordinateSign(2, (0, 1), (0.0, 0.0)), model, [0.0, 0.0])
    assert np.allclose(np.abs(moments), 0.5 / math.sqrt(2.0 * math.pi), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(-20, 20), min_size=2, max_size=7), st.data())
def test_refining_cells_never_loses_information(points, data):
    fine = sorted(points)
    coarse = sorted(data.draw(st.lists(st.sampled_from(fine), min_size=1, unique=True)))
    model = GaussianLocation(1, 1.0)
    fine_trace = trace_IM(model, [0.3], CellPartition(3, tuple(c / 10 for c in fine))).trace
    coarse_trace = trace_IM(model, [0.3], CellPartition(3, tuple(c / 10 for c in coarse))).trace
    assert fine_trace >= coarse_trace - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_merging_table_messages_never_adds_information(seed):
    rng = np.random.default_rng(seed)
    model = DiscreteDistribution(3)
    theta = rng.dirichlet(np.ones(4))[:3] * 0.8 + 0.05
    fine = rng.dirichlet(np.ones(4), size=4)
    merge = np.zeros((4, 2))
    merge[[0, 1, 2, 3], [0, 1, *rng.integers(0, 2, size=2)]] = 1.0
    points = tuple(range(1, 5))
    fine_trace = trace_IM(model, theta, DiscreteTable(2, points, fine)).trace
    coarse_trace = trace_IM(model, theta, DiscreteTable(1, points, fine @ merge)).trace
    assert fine_trace >= coarse_trace - 1e-9
