"""
Tree Identity Validator

For a valid blackboard tree, sum over transcripts y of prod_{i != j} E[p_{i,y}(X_i)]
is 2^k for every node j, and the transcript probabilities sum to one.
"""

from typing import Any, Dict

import numpy as np

from ..fisher import transcript_total, tree_identity
from ..models import DiscreteDistribution
from ..quantizers import BitFunction, ConstBit, TableBit, random_valid_tree
from .report import build_result, check


def discrete_bit_factory(categories: int):
    """Random table bits over the categories, with an occasional constant bit"""
    def factory(rng: np.random.Generator) -> BitFunction:
        if rng.random() < 0.2:
            return ConstBit(float(rng.random()))
        return TableBit(tuple(float(v) for v in rng.random(categories)))
    return factory


class TreeIdentityValidator:
    def __init__(self, seed: int = 0, trees: int = 100, tolerance: float = 1e-9, **kwargs):
        self.seed = seed
        self.trees = trees
        self.tolerance = tolerance
        self.max_score = trees

    def validate(self) -> Dict[str, Any]:
        rng = np.random.default_rng(self.seed)
        checks = []
        for t in range(self.trees):
            n = int(rng.integers(2, 4))
            k = int(rng.integers(1, 3))
            d = int(rng.integers(2, 4))
            model = DiscreteDistribution(d)
            theta = (0.5 * rng.dirichlet(np.ones(d + 1)) + 0.5 / (d + 1))[:d]
            tree = random_valid_tree(n, k, rng, discrete_bit_factory(d + 1))

            values = [tree_identity(tree, model, theta, j) for j in range(1, n + 1)]
            total = transcript_total(tree, model, theta)
            worst = max(abs(v - 2 ** k) for v in values)
            passed = tree.validity()['passed'] and worst <= self.tolerance and abs(total - 1.0) <= self.tolerance
            checks.append(check(
                f"Tree {t + 1}",
                passed,
                f"n={n} k={k} d={d}: identity values {', '.join(f'{v:.6f}' for v in values)} "
                f"(expected {2 ** k}), transcript total {total:.12f}",
                value=worst,
            ))
        return build_result('tree-identity', checks)
