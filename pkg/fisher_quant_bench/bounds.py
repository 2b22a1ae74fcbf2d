"""
Lower Bounds - van Trees minimax bounds for quantized distributed estimation

    sup_theta E||theta_hat - theta||^2 >= d^2 / (n T + d pi^2 / B^2)

where T bounds the per-node trace of the quantized Fisher information and
pi^2/B^2 is the Fisher information of the cos^2 prior on [-B, B].
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .config import get_settings
from .errors import ConfigurationError
from .models import (
    DEFAULT_BUMP,
    BumpFunction,
    DiscreteDistribution,
    GaussianCovariance,
    GaussianLocation,
    HolderDensity,
    Model,
    ProductBernoulli,
    holder_constant_c0,
)

logger = logging.getLogger(__name__)

REGIMES = ('thm1', 'thm2')
# Orlicz regime constant in 4 I0 k^{2/p}
ORLICZ_C = 4.0
# log 2 / (log 4 + 2(2 + sqrt 2)), the sub-exponential constant of the variance score
COVARIANCE_ALPHA = math.log(2.0) / (math.log(4.0) + 2.0 * (2.0 + math.sqrt(2.0)))


@dataclass
class LowerBound:
    value: float
    rate_expression: str
    regime: str
    inputs: Dict[str, Any]
    rate_value: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record['rate'] = record.pop('rate_expression')
        return record


def _two_pow(k: int) -> float:
    return 2.0 ** min(k, 1000)


def van_trees_bound(d: int, n: float, k: int, B: float, regime: str, I0: float,
                    p: Optional[float] = None) -> LowerBound:
    """
    Minimax lower bound from the van Trees inequality

    Args:
        d: Parameter dimension
        n: Number of nodes (0 gives the prior-only value d B^2 / pi^2)
        k: Bits per node
        B: Half-width of the box [-B, B]^d inside the parameter set
        regime: 'thm1' (variance bound I0) or 'thm2' (squared Psi_p bound I0)
        I0: Model constant of the chosen regime
        p: Orlicz exponent, required for 'thm2'

    Returns:
        LowerBound evaluated exactly from the closed form
    """
    if regime not in REGIMES:
        raise ConfigurationError(f"Unknown regime {regime!r}; expected one of {REGIMES}", field="regime")
    if d < 1 or n < 0 or k < 1 or B <= 0 or I0 <= 0:
        raise ConfigurationError("van_trees_bound needs d >= 1, n >= 0, k >= 1, B > 0 and I0 > 0")
    if regime == 'thm1':
        trace = I0 * _two_pow(k)
        rate = "d^2/(I0 2^k n)"
    else:
        if p is None or p < 1:
            raise ConfigurationError("The Orlicz regime needs p >= 1", field="p")
        trace = ORLICZ_C * I0 * k ** (2.0 / p)
        rate = "d^2/(I0 k^(2/p) n)"
    value = bayes_risk_bound(d, n, trace, B)
    return LowerBound(value, rate, regime, {'d': d, 'n': n, 'k': k, 'B': B, 'I0': I0, 'p': p})


def bayes_risk_bound(d: int, n: float, trace_bound: float, B: float) -> float:
    """d^2 / (n trace_bound + d pi^2 / B^2)"""
    return d ** 2 / (n * trace_bound + d * math.pi ** 2 / B ** 2)


# ---------------------------------------------------------------------------
# cos^2 prior
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cos2Prior:
    """mu(t) = cos^2(pi t / (2B)) / B on [-B, B]; Fisher information pi^2 / B^2"""

    B: float

    def __post_init__(self):
        if self.B <= 0:
            raise ConfigurationError("Prior half-width must be positive", field="B")

    def density(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= self.B
        return np.where(inside, np.cos(np.pi * t / (2 * self.B)) ** 2 / self.B, 0.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a = np.pi * t / (2 * self.B)
        return np.where(np.abs(t) <= self.B, -np.pi * np.sin(a) * np.cos(a) / self.B ** 2, 0.0)

    def cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), -self.B, self.B)
        return (t / self.B + 1.0) / 2.0 + np.sin(np.pi * t / self.B) / (2.0 * np.pi)

    def fisher_information(self) -> float:
        """Integral of mu'^2 / mu by quadrature"""
        numerics = get_settings().numerics

        def integrand(t):
            mu = float(self.density(t))
            return float(self.derivative(t)) ** 2 / mu if mu > 0 else 0.0

        value, _ = integrate.quad(integrand, -self.B, self.B, epsabs=numerics.quad_abs_tol,
                                  epsrel=1e-12, limit=numerics.quad_limit)
        return value

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF draws by vectorized bisection"""
        u = rng.random(size)
        lo = np.full(np.shape(u), -self.B)
        hi = np.full(np.shape(u), self.B)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        draws = 0.5 * (lo + hi)
        return float(draws) if size is None else draws


def prior_sample(prior: Cos2Prior, rng: np.random.Generator, size=None):
    return prior.sample(rng, size)


# ---------------------------------------------------------------------------
# Per-model constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelConstants:
    """
    Constants feeding the two trace bounds

    variance_I0 bounds Var<u, S> (first regime); orlicz_I0 bounds the squared
    Psi_p norm of <u, S> (second regime); tr_IX_sup bounds Tr I_X over the box
    [center - B, center + B]^d used by the van Trees argument.
    """

    B: float
    tr_IX_sup: float
    variance_I0: Optional[float] = None
    orlicz_I0: Optional[float] = None
    p: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def model_constants(model: Model) -> ModelConstants:
    d = model.dim
    if isinstance(model, GaussianLocation):
        s2 = model.sigma ** 2
        return ModelConstants(B=model.B, tr_IX_sup=d / s2, variance_I0=1.0 / s2,
                              orlicz_I0=8.0 / (3.0 * s2), p=2.0)
    if isinstance(model, GaussianCovariance):
        v = model.sigma_min ** 2
        return ModelConstants(B=(model.sigma_max ** 2 - v) / 2.0, tr_IX_sup=d / (2.0 * v ** 2),
                              variance_I0=1.0 / (2.0 * v ** 2),
                              orlicz_I0=(2.0 / (v * COVARIANCE_ALPHA)) ** 2, p=1.0)
    if isinstance(model, DiscreteDistribution):
        return ModelConstants(B=1.0 / (8 * d), tr_IX_sup=4.0 * d ** 2 + 2.0 * d, variance_I0=6.0 * d)
    if isinstance(model, ProductBernoulli):
        lo, hi = model.coordinate_interval
        eps = model.eps
        if model.regime == 'dense':
            inverse_var = 1.0 / ((0.5 - eps) * (0.5 + eps))
            return ModelConstants(B=eps, tr_IX_sup=d * inverse_var, variance_I0=inverse_var,
                                  orlicz_I0=6.0 * inverse_var ** 2 / 4.0, p=2.0)
        return ModelConstants(B=eps / d, tr_IX_sup=d / (lo * (1.0 - lo)), variance_I0=2.0 * d / (0.5 - eps))
    raise ConfigurationError(f"{model.kind} has no parametric bound constants; use nonpar_lower_bound",
                             field="model.kind")


def _rate_terms(model: Model, n: float, k: int):
    """(communication term, centralized term, their tags, sample-size precondition)"""
    d = model.dim
    if isinstance(model, GaussianLocation):
        s2 = model.sigma ** 2
        return (s2 * d ** 2 / (n * k), s2 * d / n, "d^2/(nk)", "d/n",
                n * model.B ** 2 * min(k, d) >= d * s2, "n B^2 min{k,d} >= d sigma^2")
    if isinstance(model, GaussianCovariance):
        s4 = model.sigma_min ** 4
        width = model.sigma_max ** 2 - model.sigma_min ** 2
        return (s4 * d ** 2 / (n * k ** 2), s4 * d / n, "d^2/(nk^2)", "d/n",
                n * width ** 2 * min(k ** 2, d) >= d * s4,
                "n (sigma_max^2 - sigma_min^2)^2 min{k^2,d} >= d sigma_min^4")
    if isinstance(model, DiscreteDistribution) or (isinstance(model, ProductBernoulli) and model.regime == 'sparse'):
        return (d / (n * _two_pow(k)), 1.0 / n, "d/(n 2^k)", "1/n",
                n * min(_two_pow(k), d) >= d ** 2, "n min{2^k,d} >= d^2")
    if isinstance(model, ProductBernoulli):
        return (d ** 2 / (n * k), d / n, "d^2/(nk)", "d/n", n * min(k, d) >= d, "n min{k,d} >= d")
    raise ConfigurationError(f"{model.kind} has no corollary rate", field="model.kind")


def corollary_bound(model: Model, n: float, k: int) -> LowerBound:
    """
    Concrete minimax lower bound for a catalog model

    The per-node trace is bounded by the smallest admissible value among
    Tr I_X, 2^k I0 (variance constant) and 4 k^{2/p} I0 (Orlicz constant),
    and fed to the van Trees bound. The symbolic rate and its magnitude
    (without the universal constant) are reported alongside. A failed
    sample-size precondition adds a warning and keeps the same value.
    """
    if n <= 0 or k < 1:
        raise ConfigurationError("corollary_bound needs n > 0 and k >= 1")
    constants = model_constants(model)
    d = model.dim
    candidates = {'tr_IX': constants.tr_IX_sup}
    if constants.variance_I0 is not None:
        candidates['thm1'] = _two_pow(k) * constants.variance_I0
    if constants.orlicz_I0 is not None:
        candidates['thm2'] = ORLICZ_C * constants.orlicz_I0 * k ** (2.0 / constants.p)
    source = min(candidates, key=candidates.get)
    trace = candidates[source]
    regime = source if source != 'tr_IX' else min((r for r in candidates if r != 'tr_IX'), key=candidates.get)
    value = bayes_risk_bound(d, n, trace, constants.B)

    communication, centralized, comm_tag, central_tag, precondition, condition_text = _rate_terms(model, n, k)
    rate, tag = (communication, comm_tag) if communication > centralized else (centralized, central_tag)
    warnings = []
    if not precondition:
        warnings.append(f"precondition {condition_text} fails for n={n}, k={k}; the prior term is not negligible")
        logger.warning("corollary_bound: %s", warnings[-1])
    I0 = constants.orlicz_I0 if regime == 'thm2' else constants.variance_I0
    inputs = {'d': d, 'n': n, 'k': k, 'B': constants.B, 'I0': I0,
              'p': constants.p if regime == 'thm2' else None,
              'trace_bound': trace, 'trace_bound_source': source}
    return LowerBound(value, tag, regime, inputs, rate_value=rate, warnings=warnings)


# ---------------------------------------------------------------------------
# Nonparametric density estimation
# ---------------------------------------------------------------------------

class Bandwidth(NamedTuple):
    h: float
    d: int
    converged: bool


def nonpar_bandwidth(s: float, n: float, k: int) -> Bandwidth:
    """
    Bandwidth h and bin count d with h^{2(s+1)} n min{2^k, d} = 1 and d = round(1/h)

    Starts from the classical bandwidth n^{-1/(2s+1)} and iterates the fixed
    point until d repeats. An alternating sequence is resolved by the
    candidate minimizing 2 h^{2s} + d^2 / (n min{2^k, d}), with converged
    set to False.
    """
    if not 0 < s <= 1 or n < 1 or k < 1:
        raise ConfigurationError("nonpar_bandwidth needs 0 < s <= 1, n >= 1 and k >= 1")
    h = n ** (-1.0 / (2.0 * s + 1.0))
    d = max(1, round(1.0 / h))
    seen = []
    for _ in range(get_settings().limits.bandwidth_max_iterations):
        h = (n * min(_two_pow(k), d)) ** (-1.0 / (2.0 * (s + 1.0)))
        new_d = max(1, round(1.0 / h))
        if new_d == d:
            return Bandwidth(h, d, True)
        seen.append((h, new_d))
        d = new_d
    surrogate = lambda cand: 2.0 * cand[0] ** (2.0 * s) + cand[1] ** 2 / (n * min(_two_pow(k), cand[1]))
    h, d = min(seen, key=surrogate)
    logger.warning("nonpar_bandwidth: fixed point alternates for s=%s, n=%s, k=%s; using d=%d", s, n, k, d)
    return Bandwidth(h, d, False)


def nonpar_rate(s: float, n: float, k: int):
    centralized = n ** (-2.0 * s / (2.0 * s + 1.0))
    communication = (n * _two_pow(k)) ** (-s / (s + 1.0))
    if communication > centralized:
        return communication, "(n 2^k)^(-s/(s+1))"
    return centralized, "n^(-2s/(2s+1))"


def nonpar_lower_bound(s: float, L: float, n: float, k: int, bump: BumpFunction = DEFAULT_BUMP) -> LowerBound:
    """
    Lower bound on sup E||f - f_hat||_2^2 over the (s, L)-Hölder class

    The numeric value instantiates the bump reduction: with d bins from
    nonpar_bandwidth, bumps are paired (p_{2j-1}, p_{2j}) = (h + q_j, h - q_j)
    so that sum p = 1 holds for every q in [-B, B]^{d/2}, B = c0 h^{s+1}. Then
    ||f - f_hat||^2 >= 2 d ||g||^2 ||q_hat - q||^2, and the first trace bound
    with I0 = 2 d ||g||^2 / f_min closes the van Trees argument.
    """
    if not 0 < s <= 1 or L <= 0 or n < 1 or k < 1:
        raise ConfigurationError("nonpar_lower_bound needs 0 < s <= 1, L > 0, n >= 1 and k >= 1")
    bandwidth = nonpar_bandwidth(s, n, k)
    d = max(2, bandwidth.d)
    h = 1.0 / d
    c0 = holder_constant_c0(s, L)
    B = min(c0 * h ** (s + 1.0), h / (2.0 * bump.maximum))
    f_min = 1.0 - (B / h) * bump.maximum
    g_norm = bump.squared_norm()
    I0 = 2.0 * d * g_norm / f_min
    pairs = d // 2
    q_bound = pairs ** 2 / (n * I0 * min(pairs, _two_pow(k)) + pairs * math.pi ** 2 / B ** 2)
    value = 2.0 * d * g_norm * q_bound
    rate, tag = nonpar_rate(s, n, k)
    return LowerBound(value, tag, 'thm1', {'s': s, 'L': L, 'n': n, 'k': k, 'd': d, 'h': h, 'B': B, 'I0': I0,
                                           'bandwidth_converged': bandwidth.converged},
                      rate_value=rate)
