"""
Experiment Runner - Monte Carlo risk of distributed estimation schemes

An experiment fixes a model, a theta rule, a protocol, a scheme, n nodes
and k bits per node. Each trial draws one sample per node, runs the
protocol, decodes an estimate and records its squared l2 loss (squared L2
loss of the density for the histogram scheme).

Trial t uses random streams derived from sha256("<seed>:<t>") only, so
results do not depend on the worker count or on scheduling order.
"""

import csv
import hashlib
import json
import logging
import math
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from scipy import stats

from . import __version__
from .bounds import LowerBound, corollary_bound, nonpar_bandwidth, nonpar_lower_bound
from .config import get_settings
from .errors import ConfigurationError, InsufficientDataError, InsufficientNodesError, ParseError
from .models import (
    DiscreteDistribution,
    GaussianLocation,
    HolderDensity,
    Model,
    ProductBernoulli,
    _field_path,
    integrate_interval,
    model_from_json,
)
from .parameter_generator import ThetaGenerator
from .quantizers import (
    CellPartition,
    CoordinateSign,
    DiscreteTable,
    Quantizer,
    SequentialStrategy,
    decode_transcript,
    induced_tree,
    run_sequential,
    run_tree,
)

logger = logging.getLogger(__name__)

PROTOCOLS = ('independent', 'sequential', 'blackboard')
CSV_COLUMNS = ('model', 'd', 'n', 'k', 'protocol', 'scheme', 'trials', 'risk', 'stderr', 'bound', 'ratio')


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class ThetaRule(BaseModel):
    method: Literal['fixed', 'uniform', 'prior', 'grid', 'corners'] = 'uniform'
    value: Optional[List[float]] = None
    pattern: Optional[str] = None


class ExperimentConfig(BaseModel):
    model: Dict[str, Any]
    theta: ThetaRule = ThetaRule()
    protocol: Literal['independent', 'sequential', 'blackboard'] = 'independent'
    scheme: Literal['discrete_grouping', 'gaussian_sign', 'histogram', 'bernoulli_coordinate',
                    'sequential_refinement']
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    trials: int = Field(ge=1)
    seed: int = 0

    def build_model(self) -> Model:
        return model_from_json(self.model)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.model_dump(), sort_keys=True).encode()).hexdigest()


class SweepAxis(BaseModel):
    axis: Literal['n', 'k']
    values: List[int] = Field(min_length=1)


class SweepConfig(BaseModel):
    """A base experiment repeated over one axis"""

    name: str = "sweep"
    base: Dict[str, Any]
    sweep: SweepAxis
    slope_fit: bool = False

    def points(self) -> List[ExperimentConfig]:
        configs = []
        for i, value in enumerate(self.sweep.values):
            raw = {**self.base, self.sweep.axis: value}
            try:
                configs.append(ExperimentConfig.model_validate(raw))
            except ValidationError as e:
                path = f"sweep.values.{i}" if self.sweep.axis in _error_loc(e) else _field_path(e, "base")
                raise ConfigurationError(f"Invalid sweep point {i}: {e.errors()[0]['msg']}", field=path)
        return configs


def _error_loc(error: ValidationError) -> Tuple[str, ...]:
    return tuple(str(p) for p in error.errors()[0]['loc']) if error.errors() else ()


def load_sweep(path: str) -> SweepConfig:
    """Load a sweep file; a single experiment file becomes a one-point sweep"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"Config file {path} is not valid JSON: {e}", field="config")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}", field="config")
    if isinstance(raw, dict) and 'sweep' not in raw and 'base' not in raw:
        raw = {'name': Path(path).stem, 'base': raw, 'sweep': {'axis': 'n', 'values': [raw.get('n', 1)]}}
    try:
        return SweepConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid sweep file: {e.errors()[0]['msg']}", field=_field_path(e))


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------

class Scheme(ABC):
    """Per-node quantizers plus the estimator that decodes their messages"""

    name = ""
    protocols: Tuple[str, ...] = ('independent', 'blackboard')

    @property
    @abstractmethod
    def quantizers(self) -> Sequence[Quantizer]:
        ...

    @abstractmethod
    def encode_batch(self, samples: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Messages of all nodes, node i quantizing samples[i]"""

    @abstractmethod
    def estimate(self, messages: np.ndarray) -> np.ndarray:
        ...

    def loss(self, model: Model, theta: np.ndarray, estimate: np.ndarray) -> float:
        diff = estimate - theta
        return float(diff @ diff)


class DiscreteGrouping(Scheme):
    """
    Categories are split into groups of 2^k - 1; node i reports on group i mod G

    A node whose sample falls in its group sends the category's position in
    the group, anything else sends the spare message 2^k. Category j is
    estimated by the fraction of its group's nodes that reported it.
    """

    name = "discrete_grouping"

    def __init__(self, categories: int, k: int, n: int):
        if categories < 2 or k < 1:
            raise ConfigurationError("discrete_grouping needs at least 2 categories and k >= 1")
        self.categories = categories
        self.k = k
        self.n = n
        self.group_size = 2 ** k - 1
        self.groups = math.ceil(categories / self.group_size)
        if n < self.groups:
            raise InsufficientNodesError(f"{self.groups} category groups need at least {self.groups} nodes, got n={n}",
                                         field="n")
        self.node_group = np.arange(n) % self.groups
        self.group_counts = np.bincount(self.node_group, minlength=self.groups)
        category = np.arange(categories)
        self.category_group = category // self.group_size
        self.category_message = category % self.group_size + 1
        self._tables = [self._table(g) for g in range(self.groups)]

    def _table(self, group: int) -> DiscreteTable:
        matrix = np.zeros((self.categories, 2 ** self.k))
        for c in range(self.categories):
            m = self.category_message[c] if self.category_group[c] == group else 2 ** self.k
            matrix[c, m - 1] = 1.0
        return DiscreteTable(self.k, tuple(range(1, self.categories + 1)), matrix)

    @property
    def quantizers(self) -> List[Quantizer]:
        return [self._tables[g] for g in self.node_group]

    def encode_categories(self, categories: np.ndarray) -> np.ndarray:
        index = np.asarray(categories, dtype=int) - 1
        own = self.category_group[index] == self.node_group
        return np.where(own, self.category_message[index], 2 ** self.k)

    def encode_batch(self, samples, rng):
        return self.encode_categories(samples)

    def probabilities(self, messages: np.ndarray) -> np.ndarray:
        """Estimated probabilities of all categories"""
        messages = np.asarray(messages)
        hits = np.array([np.count_nonzero((self.node_group == self.category_group[c])
                                          & (messages == self.category_message[c]))
                         for c in range(self.categories)])
        return hits / self.group_counts[self.category_group]

    def estimate(self, messages):
        return self.probabilities(messages)[:self.categories - 1]


class CoordinateBits(Scheme):
    """Node i thresholds coordinates (i k' + t) mod d for t < k', k' = min(k, d)"""

    threshold = 0.0

    def __init__(self, d: int, k: int, n: int):
        self.d = d
        self.k = k
        self.n = n
        self.width = min(k, d)
        self.coords = (np.arange(n)[:, None] * self.width + np.arange(self.width)[None, :]) % d
        self.reports = np.bincount(self.coords.ravel(), minlength=d)
        if np.any(self.reports == 0):
            missing = int(np.argmin(self.reports))
            raise InsufficientNodesError(f"Coordinate {missing + 1} gets no reports with n={n}, k={k}, d={d}",
                                         field="n")

    @property
    def quantizers(self) -> List[Quantizer]:
        return [CoordinateSign(self.k, tuple(int(c) for c in row), (self.threshold,) * self.width)
                for row in self.coords]

    def encode_batch(self, samples, rng):
        samples = np.asarray(samples, dtype=float).reshape(self.n, self.d)
        bits = samples[np.arange(self.n)[:, None], self.coords] > self.threshold
        return bits.astype(int) @ (2 ** np.arange(self.width)) + 1

    def positive_fractions(self, messages: np.ndarray) -> np.ndarray:
        codes = np.asarray(messages, dtype=int) - 1
        bits = (codes[:, None] >> np.arange(self.width)[None, :]) & 1
        positives = np.bincount(self.coords.ravel(), weights=bits.ravel(), minlength=self.d)
        return positives / self.reports


class GaussianSign(CoordinateBits):
    """
    Sign of each assigned coordinate; theta_j = sigma Phi^{-1}(fraction of positive signs)

    The fraction is clamped to [1/(2m_j), 1 - 1/(2m_j)] for m_j reports and,
    when B is given, the estimate to [-B, B].
    """

    name = "gaussian_sign"

    def __init__(self, d: int, k: int, n: int, sigma: float, B: Optional[float] = None):
        super().__init__(d, k, n)
        self.sigma = sigma
        self.B = B

    def clamped_fractions(self, messages: np.ndarray) -> np.ndarray:
        delta = 1.0 / (2.0 * self.reports)
        return np.clip(self.positive_fractions(messages), delta, 1.0 - delta)

    def estimate(self, messages):
        theta_hat = self.sigma * stats.norm.ppf(self.clamped_fractions(messages))
        return theta_hat if self.B is None else np.clip(theta_hat, -self.B, self.B)


class BernoulliCoordinate(CoordinateBits):
    """Raw bits of assigned coordinates; theta_j is the mean of its reports"""

    name = "bernoulli_coordinate"
    threshold = 0.5

    def estimate(self, messages):
        return self.positive_fractions(messages)


class HistogramDensity(Scheme):
    """
    Piecewise-constant density on bins of width 1/d from the grouping scheme

    (h, d) come from nonpar_bandwidth; every node sends its grouping message
    for the bin its sample falls in.
    """

    name = "histogram"

    def __init__(self, s: float, n: int, k: int):
        bandwidth = nonpar_bandwidth(s, n, k)
        self.bandwidth = bandwidth
        self.bins = max(2, bandwidth.d)
        self.k = k
        self.grouping = DiscreteGrouping(self.bins, k, n)
        self.cuts = tuple(j / self.bins for j in range(1, self.bins))
        self._truth: Dict[bytes, Tuple[float, np.ndarray]] = {}
        self._truth_lock = threading.Lock()

    @property
    def quantizers(self) -> List[Quantizer]:
        return [CellPartition(self.k, self.cuts, table.matrix, 0.0, 1.0) for table in self.grouping.quantizers]

    def bin_of(self, samples: np.ndarray) -> np.ndarray:
        return np.minimum((np.asarray(samples, dtype=float) * self.bins).astype(int), self.bins - 1) + 1

    def encode_batch(self, samples, rng):
        return self.grouping.encode_categories(self.bin_of(samples))

    def estimate(self, messages):
        return self.grouping.probabilities(messages)

    def truth(self, model: Model, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        """(integral of f^2, bin masses) by quadrature, cached per theta"""
        key = theta.tobytes()
        with self._truth_lock:
            if key not in self._truth:
                square = float(integrate_interval(model, theta, lambda x: model.density_values(theta, x), 0.0, 1.0))
                edges = (0.0,) + self.cuts + (1.0,)
                masses = np.array([float(integrate_interval(model, theta, lambda x: 1.0, a, b))
                                   for a, b in zip(edges[:-1], edges[1:])])
                self._truth[key] = (square, masses)
            return self._truth[key]

    def loss(self, model, theta, estimate):
        """||f - f_hat||_2^2 = int f^2 - 2 sum p_hat_i q_i / h + sum p_hat_i^2 / h"""
        square, masses = self.truth(model, theta)
        width = 1.0 / self.bins
        return max(0.0, square - 2.0 * float(estimate @ masses) / width + float(estimate @ estimate) / width)


class SequentialRefinement(Scheme):
    """
    1-d Gaussian location by stochastic approximation

    Node i quantizes X_i into the 2^k equal-probability cells of
    N(theta_hat, sigma^2) around the current estimate and the estimate moves
    by the cell's score centroid divided by i I_M, clipped to [-B, B].
    """

    name = "sequential_refinement"
    protocols = ('sequential',)

    def __init__(self, k: int, n: int, sigma: float, B: float):
        self.k = k
        self.n = n
        self.sigma = sigma
        self.B = B
        z = stats.norm.ppf(np.arange(1, 2 ** k) / 2 ** k)
        self.offsets = sigma * z
        pdf = stats.norm.pdf(np.concatenate([[-np.inf], z, [np.inf]]))
        self.centroids = 2 ** k * (pdf[:-1] - pdf[1:]) / sigma
        self.information = float(np.mean(self.centroids ** 2))
        self._history: List[int] = []
        self._estimates = [0.0]

    @property
    def quantizers(self):
        raise ConfigurationError("sequential_refinement has no fixed per-node quantizers", field="protocol")

    def _advance(self, history: Tuple[int, ...]) -> float:
        seen = len(self._history)
        if len(history) < seen or (seen and history[seen - 1] != self._history[-1]):
            self._history, self._estimates = [], [0.0]
        for m in history[len(self._history):]:
            i = len(self._history) + 1
            step = self.centroids[m - 1] / (i * self.information)
            self._estimates.append(float(np.clip(self._estimates[-1] + step, -self.B, self.B)))
            self._history.append(m)
        return self._estimates[len(history)]

    def quantizer_for(self, history: Tuple[int, ...]) -> CellPartition:
        return CellPartition(self.k, tuple(self._advance(history) + self.offsets))

    def strategy(self) -> SequentialStrategy:
        return SequentialStrategy(self.k, self.quantizer_for)

    def encode_batch(self, samples, rng):
        return np.asarray(run_sequential(self.strategy(), [float(x) for x in np.ravel(samples)], rng))

    def estimate(self, messages):
        return np.array([self._advance(tuple(int(m) for m in messages))])


SCHEME_MODELS = {
    'discrete_grouping': DiscreteDistribution,
    'gaussian_sign': GaussianLocation,
    'histogram': HolderDensity,
    'bernoulli_coordinate': ProductBernoulli,
    'sequential_refinement': GaussianLocation,
}


def scheme_discrete_grouping(d: int, k: int, n: int) -> Tuple[List[Quantizer], Callable]:
    scheme = DiscreteGrouping(d + 1, k, n)
    return scheme.quantizers, scheme.estimate


def scheme_gaussian_sign(d: int, k: int, n: int, B: float, sigma: float) -> Tuple[List[Quantizer], Callable]:
    scheme = GaussianSign(d, k, n, sigma, B)
    return scheme.quantizers, scheme.estimate


def scheme_histogram_density(s: float, n: int, k: int) -> Tuple[List[Quantizer], Callable]:
    scheme = HistogramDensity(s, n, k)
    return scheme.quantizers, scheme.estimate


def build_scheme(config: ExperimentConfig, model: Model) -> Scheme:
    """Instantiate the configured scheme, checking it fits the model and protocol"""
    expected = SCHEME_MODELS[config.scheme]
    if not isinstance(model, expected):
        raise ConfigurationError(f"Scheme {config.scheme} does not apply to model kind {model.kind}", field="scheme")
    if config.scheme == 'discrete_grouping':
        scheme = DiscreteGrouping(model.d + 1, config.k, config.n)
    elif config.scheme == 'gaussian_sign':
        scheme = GaussianSign(model.d, config.k, config.n, model.sigma, model.B)
    elif config.scheme == 'histogram':
        scheme = HistogramDensity(model.s, config.n, config.k)
    elif config.scheme == 'bernoulli_coordinate':
        if model.regime != 'dense':
            raise ConfigurationError("bernoulli_coordinate needs the dense regime", field="model.regime")
        scheme = BernoulliCoordinate(model.d, config.k, config.n)
    else:
        if model.d != 1:
            raise ConfigurationError("sequential_refinement needs a 1-d Gaussian location model", field="model.d")
        scheme = SequentialRefinement(config.k, config.n, model.sigma, model.B)
    if config.protocol not in scheme.protocols:
        raise ConfigurationError(f"Scheme {config.scheme} does not support the {config.protocol} protocol",
                                 field="protocol")
    return scheme


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def trial_seed(seed: int, trial: Any) -> int:
    return int.from_bytes(hashlib.sha256(f"{seed}:{trial}".encode()).digest()[:8], 'little')


def trial_streams(seed: int, trial: Any) -> List[np.random.Generator]:
    """Independent streams for samples, quantization and theta"""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(trial_seed(seed, trial)).spawn(3)]


@dataclass
class RiskEstimate:
    risk: float
    stderr: float
    trials: int
    seeds_digest: str
    theta: List[float]
    bound: Optional[LowerBound] = None
    ratio: Optional[float] = None
    per_point: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record['bound'] = self.bound.to_dict() if self.bound is not None else None
        return record


def attach_bound(model: Model, n: int, k: int) -> Optional[LowerBound]:
    if isinstance(model, HolderDensity):
        return nonpar_lower_bound(model.s, model.L, n, k)
    try:
        return corollary_bound(model, n, k)
    except ConfigurationError:
        return None


def run_trial(config: ExperimentConfig, model: Model, scheme: Optional[Scheme], theta: Optional[np.ndarray],
              generator: ThetaGenerator, trial: int) -> float:
    sample_rng, quantize_rng, theta_rng = trial_streams(config.seed, trial)
    if theta is None:
        theta = generator.draw(theta_rng)
    if scheme is None:
        scheme = build_scheme(config, model)
    samples = model.sample_batch(theta, sample_rng, config.n)
    if config.protocol == 'blackboard':
        tree = induced_tree(scheme.quantizers)
        messages = np.asarray(decode_transcript(tree, run_tree(tree, list(samples), quantize_rng)))
    else:
        messages = scheme.encode_batch(samples, quantize_rng)
    return scheme.loss(model, theta, scheme.estimate(messages))


def _mean_and_stderr(losses: np.ndarray) -> Tuple[float, float]:
    risk = float(np.sum(losses) / len(losses))
    stderr = float(np.std(losses, ddof=1) / math.sqrt(len(losses))) if len(losses) > 1 else 0.0
    return risk, stderr


def run_experiment(config: ExperimentConfig, threads: int = 1, with_bound: bool = True) -> RiskEstimate:
    """
    Monte Carlo risk of one configuration

    Args:
        config: Experiment configuration
        threads: Worker threads; results are identical for any value
        with_bound: Attach the matching lower bound and the risk/bound ratio

    Returns:
        RiskEstimate; for the grid rule, the estimate at the worst grid point
    """
    model = config.build_model()
    generator = ThetaGenerator(model)
    scheme = build_scheme(config, model)
    # sequential schemes carry per-run state and are rebuilt in every trial
    shared = None if config.protocol == 'sequential' else scheme
    rule = config.theta.model_dump(exclude_none=True)
    if generator.is_random(rule):
        points: List[Optional[np.ndarray]] = [None]
    else:
        points = generator.points(rule, trial_streams(config.seed, 'grid')[2])
        if not points:
            raise ConfigurationError("The theta rule produced no point inside the domain", field="theta")

    seeds = [trial_seed(config.seed, t) for t in range(config.trials)]
    seeds_digest = hashlib.sha256(",".join(map(str, seeds)).encode()).hexdigest()
    per_point = []
    for theta in points:
        run = lambda t, theta=theta: run_trial(config, model, shared, theta, generator, t)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                losses = np.fromiter(pool.map(run, range(config.trials)), dtype=float, count=config.trials)
        else:
            losses = np.fromiter(map(run, range(config.trials)), dtype=float, count=config.trials)
        risk, stderr = _mean_and_stderr(losses)
        per_point.append({'theta': None if theta is None else theta.tolist(), 'risk': risk, 'stderr': stderr})
        logger.debug("%s n=%d k=%d theta=%s risk=%.6g", config.scheme, config.n, config.k,
                     per_point[-1]['theta'], risk)

    worst = max(per_point, key=lambda p: p['risk'])
    estimate = RiskEstimate(worst['risk'], worst['stderr'], config.trials, seeds_digest,
                            worst['theta'] or [], per_point=per_point if len(per_point) > 1 else [])
    if with_bound:
        estimate.bound = attach_bound(model, config.n, config.k)
        if estimate.bound is not None:
            estimate.ratio = estimate.risk / estimate.bound.value
    return estimate


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    points: int


def slope_fit(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of log(risk) on log(x) with a 95% confidence interval"""
    if len(points) < 4:
        raise InsufficientDataError(f"A slope fit needs at least 4 points, got {len(points)}", field="points")
    xs, ys = np.asarray(points, dtype=float).T
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise InsufficientDataError("A log-log fit needs positive x and risk values", field="points")
    fit = stats.linregress(np.log(xs), np.log(ys))
    half = float(stats.t.ppf(0.975, len(xs) - 2) * fit.stderr)
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.slope) - half, float(fit.slope) + half, len(xs))


def run_sweep(sweep: SweepConfig, threads: int = 1,
              progress: Optional[Callable[[ExperimentConfig, RiskEstimate], None]] = None):
    """
    Run every point of a sweep

    Returns:
        ([(config, estimate), ...], SlopeFit or None)
    """
    results = []
    for config in sweep.points():
        estimate = run_experiment(config, threads=threads)
        results.append((config, estimate))
        if progress is not None:
            progress(config, estimate)
    fit = None
    if sweep.slope_fit:
        fit = slope_fit([(getattr(c, sweep.sweep.axis), e.risk) for c, e in results])
    return results, fit


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------

def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.{get_settings().output.significant_digits}g}"


def experiment_record(config: ExperimentConfig, estimate: RiskEstimate) -> Dict[str, Any]:
    return {'config_digest': config.digest(), 'config': config.model_dump(), 'estimate': estimate.to_dict()}


def write_jsonl(path: Path, records: Sequence[Dict[str, Any]]) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")


def csv_row(config: ExperimentConfig, estimate: RiskEstimate) -> List[str]:
    model = config.model
    return [model.get('kind', ''), str(model.get('d', '')), str(config.n), str(config.k), config.protocol,
            config.scheme, str(config.trials), _fmt(estimate.risk), _fmt(estimate.stderr),
            _fmt(estimate.bound.value if estimate.bound else None), _fmt(estimate.ratio)]


def write_csv(path: Path, results: Sequence[Tuple[ExperimentConfig, RiskEstimate]]) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for config, estimate in results:
            writer.writerow(csv_row(config, estimate))


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    version: str
    config: Dict[str, Any]
    seed: int
    started_at: str
    finished_at: str = ""
    outputs: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def start(cls, config: Dict[str, Any], seed: int) -> 'RunManifest':
        return cls(__version__, config, seed, datetime.now(timezone.utc).isoformat())

    def finish(self, paths: Sequence[Path]) -> None:
        self.finished_at = datetime.now(timezone.utc).isoformat()
        self.outputs = {Path(p).name: file_digest(p) for p in paths}

    def verify(self, directory: Path) -> bool:
        """Every listed output exists in `directory` and matches its digest"""
        return all((Path(directory) / name).exists() and file_digest(Path(directory) / name) == digest
                   for name, digest in self.outputs.items())

    def write(self, path: Path) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
