"""
Blackboard Bound Validator

Transcript Fisher information of random valid trees over a dense product
Bernoulli model, against n I0 2^k and 4 I0 n k^{2/p}.
"""

from typing import Any, Dict

import numpy as np

from ..bounds import model_constants
from ..fisher import blackboard_bounds, variance_I0
from ..models import ProductBernoulli
from ..quantizers import BitFunction, ConstBit, CoordBit, TableBit, random_valid_tree
from .report import build_result, check


def bernoulli_bit_factory(d: int):
    def factory(rng: np.random.Generator) -> BitFunction:
        u = rng.random()
        if u < 0.2:
            return ConstBit(float(rng.random()))
        if u < 0.4:
            return CoordBit(int(rng.integers(1, d + 1)))
        return TableBit(tuple(float(v) for v in rng.random(2 ** d)))
    return factory


class BlackboardBoundValidator:
    def __init__(self, seed: int = 0, trees: int = 100, d: int = 2, eps: float = 0.25,
                 tolerance: float = 1e-9, **kwargs):
        self.seed = seed
        self.trees = trees
        self.model = ProductBernoulli(d, 'dense', eps)
        self.tolerance = tolerance
        self.max_score = trees

    def validate(self) -> Dict[str, Any]:
        rng = np.random.default_rng(self.seed)
        constants = model_constants(self.model)
        I0 = variance_I0(self.model)
        lo, hi = self.model.coordinate_interval
        checks = []
        for t in range(self.trees):
            n = int(rng.integers(2, 4))
            k = int(rng.integers(1, 3))
            tree = random_valid_tree(n, k, rng, bernoulli_bit_factory(self.model.d))
            theta = rng.uniform(lo, hi, size=self.model.d)
            report = blackboard_bounds(tree, self.model, theta, I0, constants.orlicz_I0, constants.p)
            passed = (report['trace'] <= report['variance_bound'] + self.tolerance
                      and report['trace'] <= report['orlicz_bound'] + self.tolerance)
            checks.append(check(
                f"Tree {t + 1}",
                passed,
                f"n={n} k={k}: trace {report['trace']:.9g}, n I0 2^k {report['variance_bound']:.9g}, "
                f"4 I0 n k {report['orlicz_bound']:.9g}",
                value=report['trace'],
            ))
        return build_result('blackboard-bound', checks)
