"""
Centroid Identity Validator (suite `lemma2`)

Compares the centroid formula for Tr I_M(theta) with the trace obtained from
finite-difference message scores on random (model, quantizer, theta) triples.
"""

from typing import Any, Dict, Tuple

import numpy as np

from ..fisher import trace_IM, trace_IM_fd
from ..models import DiscreteDistribution, Model, ProductBernoulli
from ..quantizers import DiscreteTable
from .report import build_result, check


class Lemma2Validator:
    """Centroid trace vs finite-difference trace on discrete catalog models"""

    def __init__(self, seed: int = 0, trials: int = 50, tolerance: float = 1e-5, **kwargs):
        """
        Args:
            seed: Master seed
            trials: Number of random triples
            tolerance: Allowed discrepancy, relative to max(1, trace)
        """
        self.seed = seed
        self.trials = trials
        self.tolerance = tolerance
        self.max_score = trials

    def _draw(self, rng: np.random.Generator) -> Tuple[Model, np.ndarray, DiscreteTable]:
        if rng.random() < 0.5:
            d = int(rng.integers(2, 5))
            model: Model = DiscreteDistribution(d)
            weights = 0.5 * rng.dirichlet(np.ones(d + 1)) + 0.5 / (d + 1)
            theta = weights[:d]
        else:
            d = int(rng.integers(1, 4))
            model = ProductBernoulli(d, 'dense', 0.4)
            theta = rng.uniform(0.2, 0.8, size=d)
        k = int(rng.integers(1, 3))
        points = model.support()
        table = DiscreteTable(k, tuple(points), rng.dirichlet(np.ones(2 ** k), size=len(points)))
        return model, theta, table

    def validate(self) -> Dict[str, Any]:
        rng = np.random.default_rng(self.seed)
        checks = []
        worst = 0.0
        for t in range(self.trials):
            model, theta, table = self._draw(rng)
            exact = trace_IM(model, theta, table).trace
            fd = trace_IM_fd(model, theta, table)
            gap = abs(exact - fd) / max(1.0, abs(exact))
            worst = max(worst, gap)
            checks.append(check(
                f"Triple {t + 1}",
                gap <= self.tolerance,
                f"{model.kind} d={model.dim} k={table.k}: centroid {exact:.9g}, finite difference {fd:.9g}",
                value=gap,
            ))
        result = build_result('lemma2', checks)
        result['max_discrepancy'] = worst
        return result
