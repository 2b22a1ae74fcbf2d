"""
Parameter Generator - Generate the true parameters an experiment runs at

Rules:
- fixed: one given theta
- uniform: the uniform distribution for discrete models, the box centre otherwise
- prior: a fresh cos^2-prior draw around the box centre for every trial
- grid: the centre plus seven corners of the box; risk is reported at the worst point
- corners: one named corner (Hölder densities use this for the alternating bump pattern)
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .bounds import Cos2Prior
from .errors import ConfigurationError
from .models import DiscreteDistribution, HolderDensity, Model, holder_corner

logger = logging.getLogger(__name__)

CORNER_PATTERNS = ('all_up', 'all_down', 'alternating', 'alternating_neg', 'half_up', 'half_down', 'random')


def theta_box(model: Model) -> Tuple[np.ndarray, np.ndarray]:
    """
    (centre, half-widths) of a box of nonsingular parameters

    The full simplex is replaced by [1/(2(d+1)), 1/(d+1)]^d, whose corners
    keep every category probability positive.
    """
    if isinstance(model, DiscreteDistribution) and model.box is None:
        lo, hi = 1.0 / (2 * (model.d + 1)), 1.0 / (model.d + 1)
        return np.full(model.d, (lo + hi) / 2), np.full(model.d, (hi - lo) / 2)
    if isinstance(model, HolderDensity):
        return np.full(model.dim, model.h), np.full(model.dim, model.radius)
    return model.domain.center, model.domain.half_widths


def corner_signs(dim: int, pattern: str, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    alternating = np.array([(-1.0) ** i for i in range(dim)])
    half = np.where(np.arange(dim) < (dim + 1) // 2, 1.0, -1.0)
    if pattern == 'all_up':
        return np.ones(dim)
    if pattern == 'all_down':
        return -np.ones(dim)
    if pattern == 'alternating':
        return alternating
    if pattern == 'alternating_neg':
        return -alternating
    if pattern == 'half_up':
        return half
    if pattern == 'half_down':
        return -half
    if pattern == 'random':
        if rng is None:
            raise ConfigurationError("A random corner needs a random stream")
        return rng.choice([-1.0, 1.0], size=dim)
    raise ConfigurationError(f"Unsupported corner pattern: {pattern}", field="theta.pattern")


class ThetaGenerator:
    """Turn a theta rule from an experiment config into concrete parameters"""

    def __init__(self, model: Model):
        self.model = model

    def is_random(self, rule: Dict[str, Any]) -> bool:
        return rule.get('method', 'fixed') == 'prior'

    def points(self, rule: Dict[str, Any], rng: Optional[np.random.Generator] = None) -> List[np.ndarray]:
        """
        Deterministic parameter points of a rule

        Args:
            rule: {'method': 'fixed' | 'uniform' | 'grid' | 'corners', ...}
            rng: Stream for the random grid corner

        Returns:
            One point, or every grid point that lies inside the domain
        """
        method = rule.get('method', 'fixed')
        if method == 'fixed':
            value = rule.get('value')
            if value is None:
                raise ConfigurationError("fixed theta needs a value", field="theta.value")
            return [self.model.check_theta(value)]
        elif method == 'uniform':
            if isinstance(self.model, DiscreteDistribution):
                return [self.model.check_theta(np.full(self.model.d, 1.0 / (self.model.d + 1)))]
            return [self.model.check_theta(theta_box(self.model)[0])]
        elif method == 'grid':
            return self._grid(rng)
        elif method == 'corners':
            pattern = rule.get('pattern', 'alternating')
            if isinstance(self.model, HolderDensity):
                return [holder_corner(self.model, corner_signs(self.model.dim, pattern, rng))]
            center, half = theta_box(self.model)
            return [self.model.check_theta(center + half * corner_signs(self.model.dim, pattern, rng))]
        elif method == 'prior':
            raise ConfigurationError("prior theta is drawn per trial", field="theta.method")
        else:
            raise ConfigurationError(f"Unsupported theta rule: {method}", field="theta.method")

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """Independent cos^2 prior per coordinate around the box centre"""
        center, half = theta_box(self.model)
        offsets = np.array([Cos2Prior(w).sample(rng) if w > 0 else 0.0 for w in half])
        return self.model.check_theta(center + offsets)

    def _grid(self, rng: Optional[np.random.Generator]) -> List[np.ndarray]:
        center, half = theta_box(self.model)
        points = [center]
        for pattern in CORNER_PATTERNS:
            points.append(center + half * corner_signs(self.model.dim, pattern, rng))
        inside = []
        tol = 1e-12
        for point in points:
            if self.model.domain.contains(point, tol):
                inside.append(self.model.check_theta(point))
            else:
                logger.debug("grid point %s is outside the %s domain; skipped", point.tolist(), self.model.kind)
        return inside
