"""
Gaussian Partition Validator (suite `thm2-gaussian`)

Searches k-bit interval partitions of N(0, sigma^2) on a grid of breakpoints
(step 0.05 sigma over [-4 sigma, 4 sigma]) and checks the best trace against
(32/3) k / sigma^2. The sign quantizer must reach 2 / (pi sigma^2).
"""

import math
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy import stats

from ..fisher import trace_IM
from ..models import GaussianLocation
from ..quantizers import CellPartition, sign_quantizer
from .report import build_result, check

GRID = np.linspace(-4.0, 4.0, 161)


def cell_trace(cuts: Sequence[float], sigma: float) -> float:
    """sum over cells (a, b) of (phi(a) - phi(b))^2 / (sigma^2 P(a < Z < b)), cuts in units of sigma"""
    edges = np.concatenate([[-np.inf], np.sort(np.asarray(cuts, dtype=float)), [np.inf]])
    mass = np.diff(stats.norm.cdf(edges))
    moment = -np.diff(stats.norm.pdf(edges))
    positive = mass > 0
    return float(np.sum(moment[positive] ** 2 / mass[positive])) / sigma ** 2


def coordinate_ascent(k: int, sigma: float, max_sweeps: int = 50) -> Tuple[float, np.ndarray]:
    """Best 2^k - 1 grid breakpoints found by moving one breakpoint at a time"""
    count = 2 ** k - 1
    start = stats.norm.ppf(np.arange(1, count + 1) / (count + 1))
    index = np.array([int(np.argmin(np.abs(GRID - z))) for z in start])
    best = cell_trace(GRID[index], sigma)
    for _ in range(max_sweeps):
        improved = False
        for i in range(count):
            for g in range(len(GRID)):
                trial = index.copy()
                trial[i] = g
                value = cell_trace(GRID[trial], sigma)
                if value > best + 1e-15:
                    best, index, improved = value, trial, True
        if not improved:
            break
    return best, np.unique(GRID[index])


class Thm2GaussianValidator:
    def __init__(self, seed: int = 0, sigmas=(0.5, 1.0, 2.0), ks=(1, 2, 3), tolerance: float = 1e-6, **kwargs):
        self.seed = seed
        self.sigmas = tuple(sigmas)
        self.ks = tuple(ks)
        self.tolerance = tolerance
        self.max_score = 2 * len(self.sigmas) * len(self.ks) + len(self.sigmas)

    def _best(self, k: int, sigma: float) -> Tuple[float, np.ndarray]:
        if k == 1:
            values = [cell_trace([z], sigma) for z in GRID]
            i = int(np.argmax(values))
            return values[i], GRID[i:i + 1]
        return coordinate_ascent(k, sigma)

    def validate(self) -> Dict[str, Any]:
        checks = []
        for sigma in self.sigmas:
            model = GaussianLocation(1, sigma)
            sign = trace_IM(model, [0.0], sign_quantizer(0.0)).trace
            target = 2.0 / (math.pi * sigma ** 2)
            checks.append(check(
                f"Sign quantizer sigma={sigma}",
                abs(sign - target) <= self.tolerance,
                f"quadrature {sign:.9g} vs 2/(pi sigma^2) {target:.9g}",
                value=sign,
            ))
            for k in self.ks:
                best, cuts = self._best(k, sigma)
                bound = 32.0 / 3.0 * k / sigma ** 2
                checks.append(check(
                    f"Grid maximum sigma={sigma} k={k}",
                    best <= bound,
                    f"best grid partition {best:.9g} vs (32/3) k/sigma^2 {bound:.9g}",
                    value=best,
                ))
                quadrature = trace_IM(model, [0.0], CellPartition(k, tuple(sigma * cuts))).trace
                checks.append(check(
                    f"Quadrature agreement sigma={sigma} k={k}",
                    abs(quadrature - best) <= self.tolerance,
                    f"closed form {best:.9g} vs quadrature {quadrature:.9g}",
                    value=abs(quadrature - best),
                ))
        return build_result('thm2-gaussian', checks)
