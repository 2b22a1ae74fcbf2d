"""
Orlicz Validator

Psi_2 of the standard normal is sqrt(8/3); the Psi_1 norm of a covariance
score coordinate at theta_i = 1 is at most 2.
"""

import math
from typing import Any, Dict

from ..fisher import ScalarDistribution, orlicz_norm, projected_score_distribution
from ..models import GaussianCovariance
from .report import build_result, check


class OrliczValidator:
    def __init__(self, seed: int = 0, tolerance: float = 1e-4, **kwargs):
        self.seed = seed
        self.tolerance = tolerance
        self.max_score = 2

    def validate(self) -> Dict[str, Any]:
        checks = []
        normal = orlicz_norm(ScalarDistribution.normal(1.0), 2.0)
        target = math.sqrt(8.0 / 3.0)
        checks.append(check(
            "Psi_2 of N(0, 1)",
            abs(normal - target) <= self.tolerance,
            f"{normal:.9g} vs sqrt(8/3) {target:.9g}",
            value=normal,
        ))

        model = GaussianCovariance(1, 0.5, 2.0)
        score = orlicz_norm(projected_score_distribution(model, [1.0], [1.0]), 1.0)
        checks.append(check(
            "Psi_1 of the covariance score",
            score <= 2.0,
            f"{score:.9g} vs bound 2",
            value=score,
        ))
        return build_result('orlicz', checks)
