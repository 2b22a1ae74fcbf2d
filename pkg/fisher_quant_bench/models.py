"""
Statistical Models - Parametric and nonparametric families

Each model exposes its density, closed-form score, sampler and unquantized
Fisher information. Parameters are always the free coordinates:

- GaussianLocation: the mean vector
- GaussianCovariance: the per-coordinate variances
- DiscreteDistribution: theta_1..theta_d, with theta_{d+1} = 1 - sum
- ProductBernoulli: the success probabilities
- HolderDensity: bump weights p_1..p_{d-1}, with p_d = 1 - sum

Sample points are 1-based integers for discrete distributions, 0/1 tuples for
product Bernoulli models, floats for 1-d continuous models and arrays for
multivariate Gaussians.
"""

import itertools
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError
from scipy import integrate, stats

from .config import get_settings
from .errors import (
    ConfigurationError,
    ExactComputationInfeasibleError,
    InfeasibleEnumerationError,
    InvalidSampleError,
    NumericalIntegrationError,
    ParameterOutOfDomainError,
    ParseError,
    SingularParameterError,
)

logger = logging.getLogger(__name__)

# Gaussian tails beyond this many standard deviations carry no mass at double precision
GAUSSIAN_TAIL_SDS = 14.0


@dataclass(frozen=True)
class ParamDomain:
    """Box of admissible parameters, optionally with a bound on the coordinate sum"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    sum_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ConfigurationError("Domain bounds have different lengths", field="domain")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigurationError("Domain lower bound exceeds upper bound", field="domain")
        if self.sum_range is not None:
            s_lo, s_hi = self.sum_range
            if s_lo > s_hi or sum(self.lower) > s_hi or sum(self.upper) < s_lo:
                raise ConfigurationError("Domain box does not meet its sum constraint", field="domain")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def half_widths(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / 2.0

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def contains(self, theta: np.ndarray, tol: float = 1e-12) -> bool:
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            return False
        if np.any(theta < np.asarray(self.lower) - tol) or np.any(theta > np.asarray(self.upper) + tol):
            return False
        if self.sum_range is not None:
            total = float(np.sum(theta))
            if total < self.sum_range[0] - tol or total > self.sum_range[1] + tol:
                return False
        return True


@dataclass(frozen=True)
class BumpFunction:
    """g(u) = exp(-1/(u(1-u))) / Z on (0, 1), zero elsewhere, with unit integral"""

    normalizer: float = field(init=False)

    def __post_init__(self):
        value, _ = integrate.quad(_raw_bump, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        object.__setattr__(self, 'normalizer', value)

    def __call__(self, u):
        return _raw_bump(u) / self.normalizer

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > 0.0) & (u < 1.0)
        safe = np.where(inside, u, 0.5)
        slope = (1.0 - 2.0 * safe) / (safe * (1.0 - safe)) ** 2
        return np.where(inside, self(safe) * slope, 0.0)

    @property
    def maximum(self) -> float:
        return float(self(0.5))

    def derivative_bound(self, points: int = 100001) -> float:
        """sup |g'| from the closed-form derivative on a dense grid"""
        grid = np.linspace(0.0, 1.0, points)
        return float(np.max(np.abs(self.derivative(grid))))

    def squared_norm(self) -> float:
        value, _ = integrate.quad(lambda u: self(u) ** 2, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        return value


def _raw_bump(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    safe = np.where(inside, u, 0.5)
    values = np.where(inside, np.exp(-1.0 / (safe * (1.0 - safe))), 0.0)
    return values if values.ndim else float(values)


DEFAULT_BUMP = BumpFunction()


def holder_seminorm(values: np.ndarray, step: float, s: float) -> float:
    """
    Grid Hölder seminorm max |F(u)-F(v)| / |u-v|^s of equally spaced samples

    Args:
        values: Function values on a grid with spacing `step`
        step: Grid spacing
        s: Hölder exponent in (0, 1]

    Returns:
        Largest difference quotient over all grid pairs
    """
    values = np.asarray(values, dtype=float)
    best = 0.0
    for lag in range(1, len(values)):
        diffs = np.abs(values[lag:] - values[:-lag])
        best = max(best, float(diffs.max()) / (lag * step) ** s)
    return best


@lru_cache(maxsize=32)
def holder_constant_c0(s: float, L: float, step: Optional[float] = None,
                       margin: Optional[float] = None) -> float:
    """
    Largest c0 such that every f_P with max|p_i - h| <= c0 h^{s+1} is (s, L)-Hölder

    f_P - 1 is a sum of bumps with amplitudes |a_i| <= c0 h^s, so its seminorm is
    c0 times the seminorm of the alternating two-bump profile g(u) - g(u-1),
    independently of h. That profile is measured on a grid and the admissible
    c0 follows by one division, shrunk by a safety margin for grid error.
    """
    numerics = get_settings().numerics
    step = step or numerics.holder_grid_step
    margin = numerics.holder_margin if margin is None else margin
    grid = np.arange(-0.25, 2.25 + step / 2, step)
    profile = DEFAULT_BUMP(grid) - DEFAULT_BUMP(grid - 1.0)
    seminorm = holder_seminorm(profile, step, s)
    return L / (seminorm * (1.0 + margin))


class Model(ABC):
    """A parametric family with density, score, sampler and Fisher information"""

    kind = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Number of free parameters"""

    @property
    @abstractmethod
    def domain(self) -> ParamDomain:
        ...

    @property
    def sample_dim(self) -> int:
        """Dimension of one observation (0 for categorical observations)"""
        return 1

    @property
    def is_product(self) -> bool:
        return False

    def support(self) -> Optional[List[Any]]:
        """Finite support in a fixed order, or None for continuous models"""
        return None

    def check_theta(self, theta, interior: bool = True) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if not self.domain.contains(theta, tol=get_settings().numerics.boundary_tol):
            raise ParameterOutOfDomainError(
                f"theta={theta.tolist()} is outside the {self.kind} parameter domain", field="theta")
        if interior:
            self._check_interior(theta)
        return theta

    def _check_interior(self, theta: np.ndarray) -> None:
        pass

    @abstractmethod
    def density(self, theta, x) -> float:
        ...

    def log_density(self, theta, x) -> float:
        return float(np.log(self.density(theta, x)))

    @abstractmethod
    def score(self, theta, x) -> np.ndarray:
        ...

    def score_batch(self, theta, xs) -> np.ndarray:
        return np.array([self.score(theta, x) for x in xs])

    @abstractmethod
    def sample_batch(self, theta, rng: np.random.Generator, size: int) -> np.ndarray:
        ...

    def sample(self, theta, rng: np.random.Generator):
        draw = self.sample_batch(theta, rng, 1)[0]
        return _as_point(self, draw)

    @abstractmethod
    def fisher_X(self, theta) -> np.ndarray:
        ...

    def integration_range(self, theta) -> Tuple[float, float]:
        raise ExactComputationInfeasibleError(f"{self.kind} with d={self.dim} has no 1-d integration range")

    def natural_breakpoints(self, theta) -> Tuple[float, ...]:
        return ()

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({json.dumps(self.describe())})"


def _as_point(model: Model, draw):
    if isinstance(model, DiscreteDistribution):
        return int(draw)
    if isinstance(model, ProductBernoulli):
        return tuple(int(v) for v in draw)
    if isinstance(model, HolderDensity):
        return float(draw)
    draw = np.asarray(draw, dtype=float)
    return float(draw[0]) if model.sample_dim == 1 else draw


def _vector_sample(model: Model, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.sample_dim,) or not np.all(np.isfinite(x)):
        raise InvalidSampleError(f"Sample {x.tolist()} is not a finite vector of length {model.sample_dim}",
                                 field="x")
    return x


@dataclass(frozen=True, repr=False)
class GaussianLocation(Model):
    d: int
    sigma: float
    B: float = 1.0
    kind = "gaussian_location"

    def __post_init__(self):
        if self.d < 1 or self.sigma <= 0 or self.B <= 0:
            raise ConfigurationError("gaussian_location needs d >= 1, sigma > 0 and B > 0")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def sample_dim(self) -> int:
        return self.d

    @property
    def is_product(self) -> bool:
        return True

    @property
    def domain(self) -> ParamDomain:
        return ParamDomain((-self.B,) * self.d, (self.B,) * self.d)

    def density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        x = _vector_sample(self, x)
        return float(np.prod(stats.norm.pdf(x, loc=theta, scale=self.sigma)))

    def log_density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        x = _vector_sample(self, x)
        return float(np.sum(stats.norm.logpdf(x, loc=theta, scale=self.sigma)))

    def score(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        x = _vector_sample(self, x)
        return (x - theta) / self.sigma ** 2

    def score_batch(self, theta, xs) -> np.ndarray:
        theta = self.check_theta(theta)
        return (np.asarray(xs, dtype=float).reshape(-1, self.d) - theta) / self.sigma ** 2

    def sample_batch(self, theta, rng, size) -> np.ndarray:
        theta = self.check_theta(theta, interior=False)
        return theta + self.sigma * rng.standard_normal((size, self.d))

    def fisher_X(self, theta) -> np.ndarray:
        self.check_theta(theta)
        return np.eye(self.d) / self.sigma ** 2

    def integration_range(self, theta) -> Tuple[float, float]:
        if self.d != 1:
            return super().integration_range(theta)
        center = float(np.atleast_1d(theta)[0])
        return center - GAUSSIAN_TAIL_SDS * self.sigma, center + GAUSSIAN_TAIL_SDS * self.sigma

    def marginal(self, j: int) -> 'GaussianLocation':
        return GaussianLocation(1, self.sigma, self.B)

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'd': self.d, 'sigma': self.sigma, 'B': self.B}


@dataclass(frozen=True, repr=False)
class GaussianCovariance(Model):
    d: int
    sigma_min: float
    sigma_max: float
    kind = "gaussian_cov"

    def __post_init__(self):
        if self.d < 1 or not (self.sigma_max > self.sigma_min > 0):
            raise ConfigurationError("gaussian_cov needs d >= 1 and sigma_max > sigma_min > 0")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def sample_dim(self) -> int:
        return self.d

    @property
    def is_product(self) -> bool:
        return True

    @property
    def domain(self) -> ParamDomain:
        return ParamDomain((self.sigma_min ** 2,) * self.d, (self.sigma_max ** 2,) * self.d)

    def density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        x = _vector_sample(self, x)
        return float(np.prod(stats.norm.pdf(x, scale=np.sqrt(theta))))

    def log_density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        x = _vector_sample(self, x)
        return float(np.sum(stats.norm.logpdf(x, scale=np.sqrt(theta))))

    def score(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        x = _vector_sample(self, x)
        return x ** 2 / (2.0 * theta ** 2) - 1.0 / (2.0 * theta)

    def score_batch(self, theta, xs) -> np.ndarray:
        theta = self.check_theta(theta)
        xs = np.asarray(xs, dtype=float).reshape(-1, self.d)
        return xs ** 2 / (2.0 * theta ** 2) - 1.0 / (2.0 * theta)

    def sample_batch(self, theta, rng, size) -> np.ndarray:
        theta = self.check_theta(theta, interior=False)
        return np.sqrt(theta) * rng.standard_normal((size, self.d))

    def fisher_X(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        return np.diag(1.0 / (2.0 * theta ** 2))

    def integration_range(self, theta) -> Tuple[float, float]:
        if self.d != 1:
            return super().integration_range(theta)
        sd = float(np.sqrt(np.atleast_1d(theta)[0]))
        return -GAUSSIAN_TAIL_SDS * sd, GAUSSIAN_TAIL_SDS * sd

    def natural_breakpoints(self, theta) -> Tuple[float, ...]:
        return (0.0,)

    def marginal(self, j: int) -> 'GaussianCovariance':
        return GaussianCovariance(1, self.sigma_min, self.sigma_max)

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'd': self.d, 'sigma_min': self.sigma_min, 'sigma_max': self.sigma_max}


@dataclass(frozen=True, repr=False)
class DiscreteDistribution(Model):
    """Distribution on categories 1..d+1, parameterized by its first d probabilities"""

    d: int
    box: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    kind = "discrete"

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError("discrete needs d >= 1", field="d")
        self.domain  # validates a custom box

    @classmethod
    def corollary_box(cls, d: int) -> 'DiscreteDistribution':
        """The box [1/(4d), 1/(2d)]^d on which the distribution-estimation bound is stated"""
        return cls(d, ((1.0 / (4 * d),) * d, (1.0 / (2 * d),) * d))

    @property
    def dim(self) -> int:
        return self.d

    @property
    def sample_dim(self) -> int:
        return 0

    @property
    def domain(self) -> ParamDomain:
        if self.box is None:
            return ParamDomain((0.0,) * self.d, (1.0,) * self.d, (0.0, 1.0))
        return ParamDomain(tuple(self.box[0]), tuple(self.box[1]), (0.0, 1.0))

    def support(self) -> List[int]:
        return list(range(1, self.d + 2))

    def probabilities(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.append(theta, 1.0 - theta.sum())

    def _check_interior(self, theta):
        tol = get_settings().numerics.boundary_tol
        if np.any(self.probabilities(theta) < tol):
            raise SingularParameterError(
                f"theta={theta.tolist()} has a zero category probability; the score is undefined",
                field="theta")

    def _category(self, x) -> int:
        try:
            valid = not isinstance(x, (bool, np.bool_)) and float(x).is_integer() and 1 <= int(x) <= self.d + 1
        except (TypeError, ValueError):
            valid = False
        if not valid:
            raise InvalidSampleError(f"Category {x!r} is outside 1..{self.d + 1}", field="x")
        return int(x)

    def density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        return float(self.probabilities(theta)[self._category(x) - 1])

    def score(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        x = self._category(x)
        if x == self.d + 1:
            return np.full(self.d, -1.0 / (1.0 - theta.sum()))
        result = np.zeros(self.d)
        result[x - 1] = 1.0 / theta[x - 1]
        return result

    def sample_batch(self, theta, rng, size) -> np.ndarray:
        theta = self.check_theta(theta)
        return rng.choice(self.d + 1, size=size, p=self.probabilities(theta)) + 1

    def fisher_X(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        return sum(self.density(theta, x) * np.outer(self.score(theta, x), self.score(theta, x))
                   for x in self.support())

    def describe(self) -> Dict[str, Any]:
        record = {'kind': self.kind, 'd': self.d}
        if self.box is not None:
            record['box'] = [list(self.box[0]), list(self.box[1])]
        return record


@dataclass(frozen=True, repr=False)
class ProductBernoulli(Model):
    d: int
    regime: Literal['dense', 'sparse']
    eps: float
    interval: Optional[Tuple[float, float]] = None
    kind = "bernoulli"

    def __post_init__(self):
        if self.d < 1 or not 0 < self.eps < 0.5 or self.regime not in ('dense', 'sparse'):
            raise ConfigurationError("bernoulli needs d >= 1, regime dense|sparse and 0 < eps < 1/2")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def sample_dim(self) -> int:
        return self.d

    @property
    def is_product(self) -> bool:
        return True

    @property
    def coordinate_interval(self) -> Tuple[float, float]:
        if self.interval is not None:
            return self.interval
        if self.regime == 'dense':
            return 0.5 - self.eps, 0.5 + self.eps
        return (0.5 - self.eps) / self.d, (0.5 + self.eps) / self.d

    @property
    def domain(self) -> ParamDomain:
        lo, hi = self.coordinate_interval
        return ParamDomain((lo,) * self.d, (hi,) * self.d)

    def support(self) -> List[Tuple[int, ...]]:
        limit = get_settings().limits.max_enumerated_bernoulli_dim
        if self.d > limit:
            raise InfeasibleEnumerationError(f"Enumerating 2^{self.d} Bernoulli outcomes exceeds d <= {limit}")
        return list(itertools.product((0, 1), repeat=self.d))

    def _bits(self, x) -> np.ndarray:
        bits = np.atleast_1d(np.asarray(x))
        if bits.shape != (self.d,) or not np.all((bits == 0) | (bits == 1)):
            raise InvalidSampleError(f"Sample {x!r} is not a 0/1 vector of length {self.d}", field="x")
        return bits.astype(float)

    def _check_interior(self, theta):
        tol = get_settings().numerics.boundary_tol
        if np.any(theta < tol) or np.any(theta > 1.0 - tol):
            raise SingularParameterError(f"theta={theta.tolist()} touches 0 or 1", field="theta")

    def density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        bits = self._bits(x)
        return float(np.prod(np.where(bits == 1.0, theta, 1.0 - theta)))

    def score(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        bits = self._bits(x)
        return np.where(bits == 1.0, 1.0 / theta, -1.0 / (1.0 - theta))

    def score_batch(self, theta, xs) -> np.ndarray:
        theta = self.check_theta(theta)
        bits = np.asarray(xs, dtype=float).reshape(-1, self.d)
        return np.where(bits == 1.0, 1.0 / theta, -1.0 / (1.0 - theta))

    def sample_batch(self, theta, rng, size) -> np.ndarray:
        theta = self.check_theta(theta)
        return (rng.random((size, self.d)) < theta).astype(int)

    def fisher_X(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        return np.diag(1.0 / (theta * (1.0 - theta)))

    def marginal(self, j: int) -> 'ProductBernoulli':
        return ProductBernoulli(1, self.regime, self.eps, interval=self.coordinate_interval)

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'd': self.d, 'regime': self.regime, 'eps': self.eps}


@dataclass(frozen=True, repr=False)
class HolderDensity(Model):
    """
    Perturbed uniform density on [0, 1]

    f_P(x) = 1 + sum_i ((p_i - h)/h) g((x - x_i)/h), with h = 1/d and x_i = (i-1)h.
    The free parameters are p_1..p_{d-1}; p_d = 1 - sum keeps f_P normalized.
    """

    s: float
    L: float
    d: int
    bump: BumpFunction = DEFAULT_BUMP
    kind = "holder"

    def __post_init__(self):
        if not 0 < self.s <= 1 or self.L <= 0 or self.d < 2:
            raise ConfigurationError("holder needs 0 < s <= 1, L > 0 and d >= 2 bumps")

    @property
    def h(self) -> float:
        return 1.0 / self.d

    @property
    def c0(self) -> float:
        return holder_constant_c0(self.s, self.L)

    @property
    def radius(self) -> float:
        """Admissible max |p_i - h|; also keeps f_P >= 1/2"""
        return min(self.c0 * self.h ** (self.s + 1), self.h / (2.0 * self.bump.maximum))

    @property
    def dim(self) -> int:
        return self.d - 1

    @property
    def domain(self) -> ParamDomain:
        h, r = self.h, self.radius
        free = self.d - 1
        return ParamDomain((h - r,) * free, (h + r,) * free, (1.0 - h - r, 1.0 - h + r))

    def weights(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.append(theta, 1.0 - theta.sum())

    def _point(self, x) -> float:
        if isinstance(x, (list, tuple, np.ndarray)):
            x = np.asarray(x, dtype=float).reshape(-1)
            if x.size != 1:
                raise InvalidSampleError(f"Sample {x.tolist()} is not a scalar", field="x")
            x = x[0]
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise InvalidSampleError(f"Sample {x} is outside [0, 1]", field="x")
        return x

    def _bin(self, x):
        return np.minimum((np.asarray(x) * self.d).astype(int), self.d - 1)

    def density_values(self, theta, xs) -> np.ndarray:
        weights = self.weights(theta)
        xs = np.asarray(xs, dtype=float)
        j = self._bin(xs)
        amplitude = (weights[j] - self.h) / self.h
        return 1.0 + amplitude * self.bump(xs * self.d - j)

    def density(self, theta, x) -> float:
        theta = self.check_theta(theta, interior=False)
        return float(self.density_values(theta, self._point(x)))

    def score(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        x = self._point(x)
        j = int(self._bin(x))
        value = self.bump(x * self.d - j) / (self.h * float(self.density_values(theta, x)))
        result = np.zeros(self.d - 1)
        if j < self.d - 1:
            result[j] = value
        else:
            result -= value
        return result

    def sample_batch(self, theta, rng, size) -> np.ndarray:
        theta = self.check_theta(theta, interior=False)
        weights = self.weights(theta)
        amplitudes = (weights - self.h) / self.h
        ceiling = 1.0 + np.abs(amplitudes) * self.bump.maximum
        bins = rng.choice(self.d, size=size, p=weights)
        offsets = np.empty(size)
        pending = np.arange(size)
        while pending.size:
            u = rng.random(pending.size)
            accept = rng.random(pending.size) * ceiling[bins[pending]] <= 1.0 + amplitudes[bins[pending]] * self.bump(u)
            offsets[pending[accept]] = u[accept]
            pending = pending[~accept]
        return (bins + offsets) * self.h

    def fisher_X(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        numerics = get_settings().numerics
        per_bin = np.empty(self.d)
        for j in range(self.d):
            integrand = lambda x, j=j: (self.bump(x * self.d - j) / self.h) ** 2 / float(self.density_values(theta, x))
            per_bin[j], _ = integrate.quad(integrand, j * self.h, (j + 1) * self.h,
                                           epsabs=numerics.quad_abs_tol, limit=numerics.quad_limit)
        return np.diag(per_bin[:-1]) + per_bin[-1] * np.ones((self.d - 1, self.d - 1))

    def integration_range(self, theta) -> Tuple[float, float]:
        return 0.0, 1.0

    def natural_breakpoints(self, theta) -> Tuple[float, ...]:
        return tuple(j * self.h for j in range(1, self.d))

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 's': self.s, 'L': self.L, 'd': self.d}


def holder_corner(model: HolderDensity, signs: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Free parameters of f_P at a corner of the admissible box

    Args:
        model: Hölder family
        signs: Per-bump signs in {-1, 0, 1} for p_1..p_{d-1}; alternating by default

    Returns:
        theta = (p_1, ..., p_{d-1})
    """
    if signs is None:
        signs = [(-1) ** i for i in range(model.d - 1)]
    theta = model.h + model.radius * np.asarray(signs, dtype=float)
    return model.check_theta(theta)


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def density(model: Model, theta, x) -> float:
    return model.density(theta, x)


def score(model: Model, theta, x) -> np.ndarray:
    return model.score(theta, x)


def sample(model: Model, theta, rng: np.random.Generator):
    return model.sample(theta, rng)


def fisher_X(model: Model, theta) -> np.ndarray:
    return model.fisher_X(theta)


def support(model: Model) -> Optional[List[Any]]:
    return model.support()


def marginal(model: Model, j: int) -> Model:
    """1-d marginal model of coordinate j (0-based) of a product model"""
    if not model.is_product:
        raise ConfigurationError(f"{model.kind} is not a product model")
    if not 0 <= j < model.dim:
        raise ConfigurationError(f"Coordinate {j} is outside 0..{model.dim - 1}")
    return model.marginal(j)


def _quad_vec(fn: Callable, a: float, b: float):
    numerics = get_settings().numerics
    with np.errstate(over='ignore', invalid='ignore'):
        result, _, info = integrate.quad_vec(fn, a, b, epsabs=numerics.quad_abs_tol, epsrel=1e-10,
                                             limit=numerics.quad_limit, full_output=True)
    if info.status != 0 or not np.all(np.isfinite(result)):
        raise NumericalIntegrationError(f"Quadrature on [{a}, {b}] did not converge: {info.message}")
    return result


def integrate_interval(model: Model, theta, fn: Callable, a: float, b: float):
    """Integral of f(x|theta) fn(x) over [a, b] for a 1-d continuous model"""
    lo, hi = model.integration_range(theta)
    a, b = max(a, lo), min(b, hi)
    if a >= b:
        return np.zeros_like(np.asarray(fn(lo if np.isfinite(lo) else 0.0), dtype=float))
    cuts = [a] + [c for c in model.natural_breakpoints(theta) if a < c < b] + [b]
    theta = model.check_theta(theta, interior=False)
    total = 0.0
    for left, right in zip(cuts[:-1], cuts[1:]):
        total = total + _quad_vec(lambda x: model.density(theta, x) * np.asarray(fn(x), dtype=float), left, right)
    return total


def expectation(model: Model, theta, fn: Callable, breakpoints: Sequence[float] = ()):
    """
    E[fn(X)] under f(.|theta)

    Exact summation on finite supports; adaptive quadrature split at the given
    breakpoints for 1-d continuous models.
    """
    points = model.support()
    if points is not None:
        return sum(model.density(theta, x) * np.asarray(fn(x), dtype=float) for x in points)
    lo, hi = model.integration_range(theta)
    cuts = sorted({lo, hi, *[b for b in breakpoints if lo < b < hi]})
    total = 0.0
    for left, right in zip(cuts[:-1], cuts[1:]):
        total = total + integrate_interval(model, theta, fn, left, right)
    return total


@dataclass(frozen=True)
class FiniteView:
    """
    A model seen through finitely many atoms

    For finite supports the atoms are the support points. For 1-d continuous
    models they are the cells between breakpoints, represented by an interior
    point; exact for any function that is constant on each cell.
    """

    points: Tuple[Any, ...]
    masses: np.ndarray
    score_moments: np.ndarray  # row c holds E[S_theta(X) 1(X in atom c)]


def finite_view(model: Model, theta, breakpoints: Sequence[float] = ()) -> FiniteView:
    theta = model.check_theta(theta)
    points = model.support()
    if points is not None:
        masses = np.array([model.density(theta, x) for x in points])
        moments = np.array([masses[i] * model.score(theta, x) for i, x in enumerate(points)])
        return FiniteView(tuple(points), masses, moments.reshape(len(points), model.dim))
    lo, hi = model.integration_range(theta)
    cuts = [lo] + sorted({b for b in breakpoints if lo < b < hi}) + [hi]
    representatives, masses, moments = [], [], []
    for left, right in zip(cuts[:-1], cuts[1:]):
        both = integrate_interval(model, theta, lambda x: np.append(1.0, model.score(theta, x)), left, right)
        representatives.append(0.5 * (left + right))
        masses.append(both[0])
        moments.append(both[1:])
    return FiniteView(tuple(representatives), np.array(masses), np.array(moments).reshape(-1, model.dim))


# ---------------------------------------------------------------------------
# JSON descriptions
# ---------------------------------------------------------------------------

class GaussianLocationSpec(BaseModel):
    kind: Literal['gaussian_location']
    d: int = Field(ge=1)
    sigma: float = Field(gt=0)
    B: float = Field(default=1.0, gt=0)


class GaussianCovarianceSpec(BaseModel):
    kind: Literal['gaussian_cov']
    d: int = Field(ge=1)
    sigma_min: float = Field(gt=0)
    sigma_max: float = Field(gt=0)


class DiscreteSpec(BaseModel):
    kind: Literal['discrete']
    d: int = Field(ge=1)
    box: Optional[Union[Literal['corollary'], Tuple[List[float], List[float]]]] = None


class BernoulliSpec(BaseModel):
    kind: Literal['bernoulli']
    d: int = Field(ge=1)
    regime: Literal['dense', 'sparse']
    eps: float = Field(gt=0, lt=0.5)


class HolderSpec(BaseModel):
    kind: Literal['holder']
    s: float = Field(gt=0, le=1)
    L: float = Field(gt=0)
    d: int = Field(ge=2)


ModelSpec = Annotated[
    Union[GaussianLocationSpec, GaussianCovarianceSpec, DiscreteSpec, BernoulliSpec, HolderSpec],
    Field(discriminator='kind'),
]
_MODEL_ADAPTER = TypeAdapter(ModelSpec)


def _field_path(error: ValidationError, prefix: str = "") -> str:
    loc = error.errors()[0]['loc'] if error.errors() else ()
    parts = [prefix] if prefix else []
    parts.extend(str(p) for p in loc)
    return ".".join(parts)


def model_from_json(description: Union[str, Dict[str, Any]], field_prefix: str = "model") -> Model:
    """
    Build a model from its JSON description

    Args:
        description: JSON text or an already parsed dict, e.g. {"kind": "discrete", "d": 8}
        field_prefix: Field path prefix used in error reports

    Returns:
        The constructed model
    """
    if isinstance(description, str):
        try:
            description = json.loads(description)
        except json.JSONDecodeError as e:
            raise ParseError(f"Model description is not valid JSON: {e}", field=field_prefix)
    try:
        spec = _MODEL_ADAPTER.validate_python(description)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid model description: {e.errors()[0]['msg']}",
                                 field=_field_path(e, field_prefix))

    if isinstance(spec, GaussianLocationSpec):
        return GaussianLocation(spec.d, spec.sigma, spec.B)
    if isinstance(spec, GaussianCovarianceSpec):
        return GaussianCovariance(spec.d, spec.sigma_min, spec.sigma_max)
    if isinstance(spec, DiscreteSpec):
        if spec.box == 'corollary':
            return DiscreteDistribution.corollary_box(spec.d)
        if spec.box is not None:
            return DiscreteDistribution(spec.d, (tuple(spec.box[0]), tuple(spec.box[1])))
        return DiscreteDistribution(spec.d)
    if isinstance(spec, BernoulliSpec):
        return ProductBernoulli(spec.d, spec.regime, spec.eps)
    return HolderDensity(spec.s, spec.L, spec.d)
