"""
Brute-Force Dominance Validator (suite `thm1-dominance`)

The best deterministic k-bit quantizer, found by exhaustive search, never beats
min{Tr I_X, 2^k I0} nor 6 min{d^2, d 2^k} on the box [1/(4d), 1/(2d)]^d.
"""

from typing import Any, Dict

import numpy as np

from ..fisher import bound_thm1, brute_force_max_trace, variance_I0
from ..models import DiscreteDistribution
from .report import build_result, check


class Thm1DominanceValidator:
    def __init__(self, seed: int = 0, dims=(2, 3), ks=(1, 2), grid_points: int = 5,
                 tolerance: float = 1e-9, **kwargs):
        self.seed = seed
        self.dims = tuple(dims)
        self.ks = tuple(ks)
        self.grid_points = grid_points
        self.tolerance = tolerance
        self.max_score = len(self.dims) * len(self.ks) * grid_points

    def validate(self) -> Dict[str, Any]:
        checks = []
        for d in self.dims:
            model = DiscreteDistribution.corollary_box(d)
            I0 = variance_I0(model)
            for t in np.linspace(1.0 / (4 * d), 1.0 / (2 * d), self.grid_points):
                theta = np.full(d, t)
                tr_IX = float(np.trace(model.fisher_X(theta)))
                for k in self.ks:
                    best = brute_force_max_trace(model, theta, k).trace
                    bound = bound_thm1(I0, k, tr_IX).bound_value
                    closed_form = 6.0 * min(d ** 2, d * 2 ** k)
                    passed = best <= bound + self.tolerance and best <= closed_form + self.tolerance
                    checks.append(check(
                        f"d={d} k={k} theta={t:.4f}",
                        passed,
                        f"brute force {best:.9g} vs min(Tr I_X, 2^k I0) {bound:.9g} and 6 min(d^2, d 2^k) {closed_form:g}",
                        value=best,
                    ))
        return build_result('thm1-dominance', checks)
