import math

import pytest

from fisher_quant_bench.validators import SUITES, run_suite
from fisher_quant_bench.validators.report import build_result, check
from fisher_quant_bench.validators.thm2_gaussian_validator import cell_trace


def assert_passed(result):
    assert result['passed'], result['feedback']
    assert result['score'] == result['max_score']


def test_registry_names():
    assert set(SUITES) == {'lemma2', 'tree-identity', 'thm1-dominance', 'thm2-gaussian', 'orlicz',
                           'blackboard-bound'}


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite('no-such-suite')


def test_build_result_reports_failures():
    result = build_result('demo', [check('a', True, 'ok'), check('b', False, 'bad', value=2.0)])
    assert not result['passed']
    assert result['score'] == 1
    assert result['max_score'] == 2
    assert result['feedback'].startswith("❌")
    assert result['checks'][1]['value'] == 2.0


def test_cell_trace_of_sign_quantizer():
    assert cell_trace([0.0], 2.0) == pytest.approx(2.0 / (math.pi * 4.0))


def test_centroid_identity_suite():
    result = run_suite('lemma2', seed=1, trials=8)
    assert_passed(result)
    assert result['max_discrepancy'] < 1e-5


def test_tree_identity_suite():
    assert_passed(run_suite('tree-identity', seed=2, trees=10))


def test_dominance_suite():
    assert_passed(run_suite('thm1-dominance', dims=(2,), ks=(1,), grid_points=3))


def test_gaussian_partition_suite():
    assert_passed(run_suite('thm2-gaussian', sigmas=(1.0,), ks=(1, 2)))


def test_orlicz_suite():
    assert_passed(run_suite('orlicz'))


def test_blackboard_bound_suite():
    assert_passed(run_suite('blackboard-bound', seed=3, trees=10))
