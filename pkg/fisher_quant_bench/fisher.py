"""
Fisher Information - Quantized samples, transcripts and trace bounds

The trace of the Fisher information of a message M is the probability
weighted squared norm of the per-message score centroids:

    Tr I_M(theta) = sum_m p(m|theta) ||E[S_theta(X) | m]||^2

Everything here is evaluated exactly on finite supports and by adaptive
quadrature for 1-d continuous models. Multivariate continuous models fall
back to Monte Carlo with a batch-means standard error.
"""

import itertools
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.integrate import IntegrationWarning

from .config import get_settings
from .errors import (
    ConfigurationError,
    EmptyBinError,
    ExactComputationInfeasibleError,
    InfeasibleEnumerationError,
)
from .models import (
    DiscreteDistribution,
    GaussianCovariance,
    GaussianLocation,
    Model,
    ParamDomain,
    ProductBernoulli,
    finite_view,
)
from .quantizers import (
    ProtocolTree,
    Quantizer,
    enumerate_transcripts,
    from_messages,
    message_moments,
)

logger = logging.getLogger(__name__)


@dataclass
class FisherReport:
    trace: float
    centroids: List[Dict[str, Any]]
    matrix: Optional[np.ndarray] = None
    stderr: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {'trace': self.trace, 'centroids': self.centroids}
        if self.matrix is not None:
            record['matrix'] = self.matrix.tolist()
        if self.stderr is not None:
            record['stderr'] = self.stderr
        return record


@dataclass
class BoundCertificate:
    regime: str
    bound_value: float
    components: Dict[str, float]
    I0: float
    p: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _empty_threshold(model: Model) -> float:
    return 0.0 if model.support() is not None else get_settings().numerics.quad_abs_tol


def centroid(model: Model, theta, q: Quantizer, m: int) -> np.ndarray:
    """E[S_theta(X) | m] = E[S_theta(X) b_m(X)] / p(m|theta)"""
    probs, moments = message_moments(q, model, theta)
    if not 1 <= m <= q.num_messages:
        raise ConfigurationError(f"Message {m} is outside 1..{q.num_messages}", field="m")
    if probs[m - 1] <= _empty_threshold(model):
        raise EmptyBinError(f"Message {m} has probability {probs[m - 1]:.3g} under theta", field="m")
    return moments[m - 1] / probs[m - 1]


def trace_IM(model: Model, theta, q: Quantizer, with_matrix: bool = False) -> FisherReport:
    """
    Trace of the Fisher information of the quantized sample

    Args:
        model: Statistical model
        theta: Parameter (interior)
        q: Quantizer
        with_matrix: Also assemble I_M(theta) = sum_m t_m c_m c_m^T

    Returns:
        FisherReport with one centroid per message of positive probability
    """
    probs, moments = message_moments(q, model, theta)
    threshold = _empty_threshold(model)
    trace = 0.0
    matrix = np.zeros((model.dim, model.dim)) if with_matrix else None
    centroids = []
    for m in range(1, q.num_messages + 1):
        t = float(probs[m - 1])
        if t <= threshold:
            continue
        c = moments[m - 1] / t
        trace += t * float(c @ c)
        if matrix is not None:
            matrix += t * np.outer(c, c)
        centroids.append({'m': m, 'prob': t, 'vector': c.tolist()})
    return FisherReport(trace=trace, centroids=centroids, matrix=matrix)


def message_score_fd(model: Model, theta, q: Quantizer, m: int, delta: Optional[float] = None) -> np.ndarray:
    """S_theta(m) by central differences of log p(m|theta)"""
    delta = delta or get_settings().numerics.finite_difference_step
    theta = model.check_theta(theta)
    result = np.empty(model.dim)
    for i in range(model.dim):
        step = np.zeros(model.dim)
        step[i] = delta
        up, _ = message_moments(q, model, theta + step)
        down, _ = message_moments(q, model, theta - step)
        result[i] = (math.log(up[m - 1]) - math.log(down[m - 1])) / (2.0 * delta)
    return result


def trace_IM_fd(model: Model, theta, q: Quantizer, delta: Optional[float] = None) -> float:
    """sum_m p(m|theta) ||S_theta(m)||^2 with finite-difference message scores"""
    delta = delta or get_settings().numerics.finite_difference_step
    theta = model.check_theta(theta)
    probs, _ = message_moments(q, model, theta)
    plus, minus = [], []
    for i in range(model.dim):
        step = np.zeros(model.dim)
        step[i] = delta
        plus.append(message_moments(q, model, theta + step)[0])
        minus.append(message_moments(q, model, theta - step)[0])
    total = 0.0
    for m in range(q.num_messages):
        if probs[m] <= _empty_threshold(model):
            continue
        s = np.array([(math.log(plus[i][m]) - math.log(minus[i][m])) / (2.0 * delta) for i in range(model.dim)])
        total += probs[m] * float(s @ s)
    return total


def trace_IM_monte_carlo(model: Model, theta, q: Quantizer, rng: np.random.Generator,
                         samples: Optional[int] = None, batches: Optional[int] = None) -> FisherReport:
    """
    Monte Carlo trace for models without exact integration

    Centroids use the pooled ratio estimator E[S b_m] / E[b_m]; the
    standard error comes from the spread of per-batch traces.
    """
    settings = get_settings().monte_carlo
    samples = samples or settings.default_samples
    batches = batches or settings.batches
    theta = model.check_theta(theta)
    xs = model.sample_batch(theta, rng, samples)
    scores = model.score_batch(theta, xs)
    if q.is_deterministic:
        weights = np.eye(q.num_messages)[q.encode_batch(xs) - 1]
    else:
        weights = np.array([q.probabilities(x) for x in xs])

    def trace_of(w: np.ndarray, s: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        mass = w.mean(axis=0)
        moments = w.T @ s / len(s)
        positive = mass > 0
        return float(np.sum(np.sum(moments[positive] ** 2, axis=1) / mass[positive])), mass, moments

    trace, mass, moments = trace_of(weights, scores)
    per_batch = [trace_of(w, s)[0] for w, s in zip(np.array_split(weights, batches), np.array_split(scores, batches))]
    stderr = float(np.std(per_batch, ddof=1) / math.sqrt(batches)) if batches > 1 else None
    centroids = [{'m': m + 1, 'prob': float(mass[m]), 'vector': (moments[m] / mass[m]).tolist()}
                 for m in range(q.num_messages) if mass[m] > 0]
    return FisherReport(trace=trace, centroids=centroids, stderr=stderr)


# ---------------------------------------------------------------------------
# Blackboard protocols
# ---------------------------------------------------------------------------

def trace_IM_blackboard(tree: ProtocolTree, model: Model, theta) -> float:
    """
    Trace of the Fisher information of a blackboard transcript

    Tr I_Y(theta) = sum_y P(Y=y) sum_j ||E_{j,y}[S_theta(X_j)]||^2, where E_{j,y}
    reweights node j's sample by p_{j,y}.
    """
    view = finite_view(model, theta, tree.breakpoints())
    total = 0.0
    for _, factors in enumerate_transcripts(tree, view):
        node_mass = factors @ view.masses
        prob = float(np.prod(node_mass))
        if prob <= 0.0:
            continue
        moments = factors @ view.score_moments
        total += prob * float(np.sum(np.sum(moments ** 2, axis=1) / node_mass ** 2))
    return total


def tree_identity(tree: ProtocolTree, model: Model, theta, j: int) -> float:
    """sum_y prod_{i != j} E[p_{i,y}(X_i)]; equals 2^k for a valid tree"""
    if not 1 <= j <= tree.n:
        raise ConfigurationError(f"Node {j} is outside 1..{tree.n}", field="j")
    view = finite_view(model, theta, tree.breakpoints())
    total = 0.0
    for _, factors in enumerate_transcripts(tree, view):
        node_mass = factors @ view.masses
        total += float(np.prod(np.delete(node_mass, j - 1)))
    return total


def transcript_total(tree: ProtocolTree, model: Model, theta) -> float:
    view = finite_view(model, theta, tree.breakpoints())
    return float(sum(np.prod(factors @ view.masses) for _, factors in enumerate_transcripts(tree, view)))


def blackboard_bounds(tree: ProtocolTree, model: Model, theta, I0_variance: float,
                      I0_orlicz: Optional[float] = None, p: float = 2.0) -> Dict[str, float]:
    """Transcript trace next to n I0 2^k (variance case) and 4 I0 n k^{2/p} (Orlicz case)"""
    I0_orlicz = I0_variance if I0_orlicz is None else I0_orlicz
    return {
        'trace': trace_IM_blackboard(tree, model, theta),
        'variance_bound': tree.n * I0_variance * 2 ** tree.k,
        'orlicz_bound': 4.0 * I0_orlicz * tree.n * tree.k ** (2.0 / p),
    }


# ---------------------------------------------------------------------------
# I0 proxies
# ---------------------------------------------------------------------------

def _discrete_vertices(domain: ParamDomain, tol: float) -> Tuple[np.ndarray, bool]:
    """Vertices of box intersect {sum <= 1 - tol}, with the box shrunk away from zero"""
    lower = np.maximum(np.asarray(domain.lower), tol)
    upper = np.asarray(domain.upper)
    cap = min(1.0 - tol, domain.sum_range[1] if domain.sum_range else 1.0 - tol)
    shrunk = bool(np.any(np.asarray(domain.lower) < tol) or np.sum(upper) > 1.0 - tol)
    d = len(lower)
    masks = np.arange(2 ** d)
    bits = (masks[:, None] >> np.arange(d)) & 1
    corners = np.where(bits == 1, upper, lower)
    points = [corners[corners.sum(axis=1) <= cap]]
    for i in range(d):
        base = corners[bits[:, i] == 0]
        rest = base.sum(axis=1) - base[:, i]
        crossing = (base.sum(axis=1) <= cap) & (rest + upper[i] > cap)
        edge = base[crossing].copy()
        edge[:, i] = cap - rest[crossing]
        points.append(edge)
    return np.vstack(points), shrunk


def variance_I0(model: Model, domain: Optional[ParamDomain] = None) -> float:
    """
    sup over theta and unit u of Var<u, S_theta(X)> = sup_theta lambda_max(I_X(theta))

    The supremum is taken over `domain` (the model's own domain by default).
    When the domain reaches a singular boundary, the supremum over the
    tolerance-shrunk domain is returned and a warning is logged.
    """
    domain = domain or model.domain
    tol = get_settings().numerics.boundary_tol
    lower = np.asarray(domain.lower)
    upper = np.asarray(domain.upper)

    if isinstance(model, GaussianLocation):
        return 1.0 / model.sigma ** 2
    if isinstance(model, GaussianCovariance):
        smallest = max(float(lower.min()), tol)
        if smallest > float(lower.min()):
            logger.warning("variance_I0: covariance domain touches zero; using the tolerance-shrunk domain")
        return 1.0 / (2.0 * smallest ** 2)
    if isinstance(model, ProductBernoulli):
        lo = np.clip(lower, tol, 1.0 - tol)
        hi = np.clip(upper, tol, 1.0 - tol)
        if np.any(lo != lower) or np.any(hi != upper):
            logger.warning("variance_I0: Bernoulli domain touches 0 or 1; using the tolerance-shrunk domain")
        ends = np.concatenate([lo, hi])
        return float(np.max(1.0 / (ends * (1.0 - ends))))
    if isinstance(model, DiscreteDistribution):
        if model.d > get_settings().limits.max_enumerated_bernoulli_dim:
            raise InfeasibleEnumerationError(f"Vertex enumeration for d={model.d} is too large")
        vertices, shrunk = _discrete_vertices(domain, tol)
        if shrunk:
            logger.warning("variance_I0: discrete domain reaches the simplex boundary; "
                           "using the tolerance-shrunk domain")
        last = 1.0 - vertices.sum(axis=1)
        best = 0.0
        for chunk, tail in zip(np.array_split(vertices, max(1, len(vertices) // 4096)),
                               np.array_split(last, max(1, len(vertices) // 4096))):
            matrices = np.einsum('ni,ij->nij', 1.0 / chunk, np.eye(model.d))
            matrices += (1.0 / tail)[:, None, None]
            best = max(best, float(np.linalg.eigvalsh(matrices)[:, -1].max()))
        return best
    raise ExactComputationInfeasibleError(f"{model.kind} has no closed-form Fisher information for I0")


# ---------------------------------------------------------------------------
# Orlicz norms
# ---------------------------------------------------------------------------

class _Divergent(Exception):
    pass


@dataclass(frozen=True)
class ScalarDistribution:
    """
    Law of T(X) for a real random variable X

    X has `density` on [lower, upper] (split at `breakpoints` for quadrature)
    plus point masses `atoms` given as (value, probability) pairs already
    mapped through T.
    """

    density: Optional[Callable[[float], float]] = None
    lower: float = -math.inf
    upper: float = math.inf
    transform: Optional[Callable[[float], float]] = None
    atoms: Tuple[Tuple[float, float], ...] = ()
    breakpoints: Tuple[float, ...] = ()

    @classmethod
    def normal(cls, scale: float) -> 'ScalarDistribution':
        return cls(density=lambda x: math.exp(-0.5 * (x / scale) ** 2) / (scale * math.sqrt(2 * math.pi)),
                   breakpoints=(0.0,))

    @classmethod
    def point_mass(cls, value: float = 0.0) -> 'ScalarDistribution':
        return cls(atoms=((value, 1.0),))

    def expect(self, fn: Callable[[float], float]) -> float:
        total = sum(prob * fn(abs(value)) for value, prob in self.atoms)
        if self.density is None:
            return total
        numerics = get_settings().numerics
        transform = self.transform or (lambda x: x)
        cuts = [self.lower] + [b for b in self.breakpoints if self.lower < b < self.upper] + [self.upper]
        with warnings.catch_warnings(), np.errstate(over='ignore', invalid='ignore'):
            warnings.simplefilter('error', IntegrationWarning)
            for a, b in zip(cuts[:-1], cuts[1:]):
                try:
                    value, _ = integrate.quad(lambda x: self.density(x) * fn(abs(transform(x))), a, b,
                                              epsabs=numerics.quad_abs_tol, epsrel=1e-10, limit=numerics.quad_limit)
                except (IntegrationWarning, OverflowError) as e:
                    raise _Divergent(str(e))
                total += value
        if not math.isfinite(total):
            raise _Divergent("non-finite expectation")
        return total


def _psi_excess(dist: ScalarDistribution, p: float, K: float) -> float:
    """E[Psi_p(|X|/K)] - 1, with divergence reported as a large positive value"""
    def psi(v: float) -> float:
        try:
            return math.expm1((v / K) ** p)
        except OverflowError:
            return math.inf
    try:
        value = dist.expect(psi)
    except _Divergent:
        return 1e300
    return min(value, 1e300) - 1.0


def orlicz_norm(dist: ScalarDistribution, p: float) -> float:
    """
    Psi_p Orlicz norm inf{K : E[exp((|X|/K)^p) - 1] <= 1}

    Since exp(t) - 1 >= t, K* >= (E|X|^p)^{1/p}, which gives a lower bracket.
    The upper bracket doubles until the expectation is finite and at most 1,
    then bisection runs to the configured relative tolerance.

    Returns:
        The norm, 0 for the zero variable and inf for tails heavier than Psi_p
    """
    if p < 1:
        raise ConfigurationError(f"Orlicz exponent p={p} must be >= 1", field="p")
    try:
        moment = dist.expect(lambda v: v ** p)
    except _Divergent:
        return math.inf
    if moment <= 0.0:
        return 0.0
    low = moment ** (1.0 / p)
    high = 2.0 * low
    for _ in range(60):
        if _psi_excess(dist, p, high) <= 0.0:
            break
        low, high = high, 2.0 * high
    else:
        return math.inf
    rel_tol = get_settings().numerics.orlicz_rel_tol
    return float(optimize.bisect(lambda K: _psi_excess(dist, p, K), low, high, xtol=rel_tol * low * 1e-2))


def projected_score_distribution(model: Model, theta, u) -> ScalarDistribution:
    """Law of <u, S_theta(X)>"""
    theta = model.check_theta(theta)
    u = np.asarray(u, dtype=float)
    points = model.support()
    if points is not None:
        return ScalarDistribution(atoms=tuple((float(u @ model.score(theta, x)), model.density(theta, x))
                                              for x in points))
    if isinstance(model, GaussianLocation):
        return ScalarDistribution.normal(float(np.linalg.norm(u)) / model.sigma)
    if model.sample_dim == 1:
        lower, upper = (0.0, 1.0) if model.kind == 'holder' else (-math.inf, math.inf)
        return ScalarDistribution(density=lambda x: model.density(theta, x), lower=lower, upper=upper,
                                  transform=lambda x: float(u @ model.score(theta, x)),
                                  breakpoints=tuple(model.natural_breakpoints(theta)))
    raise ExactComputationInfeasibleError(f"No exact projected score law for {model.kind} with d={model.dim}")


def orlicz_projection_sup(model: Model, theta, p: float, rng: np.random.Generator,
                          directions: int = 1000) -> Dict[str, Any]:
    """Largest Psi_p norm of <u, S> over random unit vectors; a heuristic cross-check only"""
    best, best_u = 0.0, None
    for _ in range(directions):
        u = rng.standard_normal(model.dim)
        u /= np.linalg.norm(u)
        value = orlicz_norm(projected_score_distribution(model, theta, u), p)
        if value > best:
            best, best_u = value, u
    return {'norm': best, 'I0': best ** 2, 'direction': None if best_u is None else best_u.tolist(),
            'directions': directions, 'heuristic': True}


def tail_envelope(x, p: float, grid: int = 4001):
    """
    Upper concave envelope on [0, 1] of x (log(2/x))^{2/p}

    Equal to the function itself on (0, 1/2]; beyond that it is read off the
    upper hull of the graph on a fine grid.
    """
    xs = np.linspace(0.0, 1.0, grid)
    with np.errstate(divide='ignore', invalid='ignore'):
        ys = np.where(xs > 0, xs * np.log(2.0 / np.maximum(xs, 1e-300)) ** (2.0 / p), 0.0)
    hull = [0]
    for i in range(1, grid):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        exact = np.where(x > 0, x * np.log(2.0 / np.maximum(x, 1e-300)) ** (2.0 / p), 0.0)
    hulled = np.interp(x, xs[hull], ys[hull])
    result = np.where(x <= 0.5, exact, np.maximum(exact, hulled))
    return float(result) if result.ndim == 0 else result


# ---------------------------------------------------------------------------
# Trace bounds
# ---------------------------------------------------------------------------

def bound_thm1(I0: float, k: int, tr_IX: float) -> BoundCertificate:
    """Tr I_M <= min{Tr I_X, 2^k I0} under a variance bound I0"""
    if I0 < 0 or k < 1:
        raise ConfigurationError("bound_thm1 needs I0 >= 0 and k >= 1")
    communication = 2.0 ** k * I0
    return BoundCertificate('thm1', min(tr_IX, communication),
                            {'tr_IX': tr_IX, 'communication': communication}, I0)


def bound_thm2(I0: float, k: int, p: float, tr_IX: float) -> BoundCertificate:
    """
    Tr I_M <= min{Tr I_X, 4 k^{2/p} I0} under a squared Psi_p bound I0

    The tighter intermediate I0 ((k+1) log 2)^{2/p} is reported as 'refined'.
    """
    if I0 < 0 or k < 1 or p < 1:
        raise ConfigurationError("bound_thm2 needs I0 >= 0, k >= 1 and p >= 1")
    communication = 4.0 * k ** (2.0 / p) * I0
    refined = I0 * ((k + 1) * math.log(2.0)) ** (2.0 / p)
    return BoundCertificate('thm2', min(tr_IX, communication),
                            {'tr_IX': tr_IX, 'communication': communication, 'refined': refined}, I0, p)


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------

def set_partitions(size: int, max_blocks: int) -> Iterator[Tuple[int, ...]]:
    """Restricted-growth strings of length `size` with at most `max_blocks` blocks, lexicographic"""
    if size == 0:
        yield ()
        return
    labels = [0] * size

    def extend(i: int, used: int):
        if i == size:
            yield tuple(labels)
            return
        for b in range(min(used + 1, max_blocks)):
            labels[i] = b
            yield from extend(i + 1, max(used, b + 1))

    yield from extend(1, 1)


class BruteForceResult(NamedTuple):
    quantizer: Quantizer
    trace: float


def brute_force_traces(model: Model, theta, k: int) -> Iterator[Tuple[Tuple[int, ...], float]]:
    """Trace of every deterministic quantizer with at most 2^k nonempty bins"""
    points = model.support()
    if points is None:
        raise InfeasibleEnumerationError(f"{model.kind} has no finite support to enumerate")
    limit = get_settings().limits.max_bruteforce_support
    if len(points) > limit:
        raise InfeasibleEnumerationError(f"Support of size {len(points)} exceeds the enumeration limit {limit}")
    view = finite_view(model, theta)
    blocks = min(2 ** k, len(points))
    for assignment in set_partitions(len(points), blocks):
        labels = np.asarray(assignment)
        mass = np.bincount(labels, weights=view.masses, minlength=blocks)
        moments = np.zeros((blocks, model.dim))
        np.add.at(moments, labels, view.score_moments)
        positive = mass > 0
        yield assignment, float(np.sum(np.sum(moments[positive] ** 2, axis=1) / mass[positive]))


def brute_force_max_trace(model: Model, theta, k: int) -> BruteForceResult:
    """
    Best deterministic k-bit quantizer by exhaustive search over set partitions

    Deterministic quantizers suffice: the trace is convex in the quantizer.
    Ties keep the first partition found.
    """
    best_assignment, best_trace = None, -1.0
    for assignment, trace in brute_force_traces(model, theta, k):
        if trace > best_trace:
            best_assignment, best_trace = assignment, trace
    points = model.support()
    return BruteForceResult(from_messages(points, [b + 1 for b in best_assignment], k), best_trace)
