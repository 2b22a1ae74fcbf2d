"""
Quantizers and Protocols - k-bit quantization strategies

Three protocol classes are represented:

1. Independent: every node applies its own (possibly randomized) quantizer.
2. Sequential: node i picks its quantizer from the messages already sent.
3. Blackboard: a labeled binary tree; node l_v writes one bit at each
   internal node v with probability b_v(X_{l_v}).

Messages are 1-based integers in 1..2^k. A node writes its message to the
blackboard most significant bit first.
"""

import bisect
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_settings
from .errors import (
    ConfigurationError,
    ExactComputationInfeasibleError,
    InvalidSampleError,
    ParseError,
    ProtocolInvalidError,
)
from .models import FiniteView, Model, finite_view, marginal

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12


def _point_key(x):
    if isinstance(x, np.ndarray):
        return tuple(int(v) for v in x) if x.ndim else x.item()
    if isinstance(x, (list, tuple)):
        return tuple(int(v) for v in x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _scalar(x) -> float:
    if isinstance(x, (list, tuple, np.ndarray)):
        flat = np.asarray(x, dtype=float).reshape(-1)
        if flat.size != 1:
            raise InvalidSampleError(f"Expected a scalar sample, got {flat.tolist()}", field="x")
        return float(flat[0])
    return float(x)


def _check_rows(matrix: np.ndarray, what: str) -> None:
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        raise ConfigurationError(f"{what} has entries outside [0, 1]")
    if np.any(np.abs(matrix.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise ConfigurationError(f"{what} rows must sum to 1")


class Quantizer(ABC):
    """A mapping from a sample to a distribution over messages 1..2^k"""

    k: int

    @property
    def num_messages(self) -> int:
        return 2 ** self.k

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Points where p(.|x) may jump, for 1-d continuous samples"""
        return ()

    @property
    def is_deterministic(self) -> bool:
        return True

    @abstractmethod
    def probabilities(self, x) -> np.ndarray:
        """p(m|x) for m = 1..2^k"""

    def quantize(self, x, rng: Optional[np.random.Generator] = None) -> int:
        row = self.probabilities(x)
        if self.is_deterministic:
            return int(np.argmax(row)) + 1
        if rng is None:
            raise ConfigurationError("A randomized quantizer needs a random stream")
        return int(rng.choice(self.num_messages, p=row)) + 1

    def encode_batch(self, xs, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return np.array([self.quantize(x, rng) for x in xs], dtype=int)

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        ...


@dataclass(frozen=True)
class DiscreteTable(Quantizer):
    """Row c gives p(.|points[c]) over the 2^k messages"""

    k: int
    points: Tuple[Any, ...]
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if matrix.shape[0] != len(self.points):
            raise ConfigurationError(f"Table has {matrix.shape[0]} rows for {len(self.points)} support points")
        if matrix.shape[1] > self.num_messages:
            raise ConfigurationError(f"Table has {matrix.shape[1]} columns, more than 2^{self.k}")
        matrix = np.pad(matrix, ((0, 0), (0, self.num_messages - matrix.shape[1])))
        _check_rows(matrix, "Quantizer table")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'points', tuple(_point_key(p) for p in self.points))
        object.__setattr__(self, '_index', {p: i for i, p in enumerate(self.points)})

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.matrix == 0.0) | (self.matrix == 1.0)))

    def probabilities(self, x) -> np.ndarray:
        index = self._index.get(_point_key(x))
        if index is None:
            raise InvalidSampleError(f"Sample {x!r} is not a point of the quantizer table", field="x")
        return self.matrix[index]

    def encode_batch(self, xs, rng=None) -> np.ndarray:
        if not self.is_deterministic or not all(isinstance(p, int) for p in self.points):
            return super().encode_batch(xs, rng)
        lookup = np.zeros(max(self.points) + 1, dtype=int)
        for i, p in enumerate(self.points):
            lookup[p] = int(np.argmax(self.matrix[i])) + 1
        values = np.asarray(xs)
        codes = values.astype(int)
        inside = (codes >= 0) & (codes < lookup.size) & (codes == values)
        messages = np.where(inside, lookup[np.where(inside, codes, 0)], 0)
        if np.any(messages == 0):
            bad = values[messages == 0].ravel()[0]
            raise InvalidSampleError(f"Sample {bad!r} is not a point of the quantizer table", field="x")
        return messages

    def describe(self) -> Dict[str, Any]:
        return {'type': 'table', 'k': self.k, 'points': [list(p) if isinstance(p, tuple) else p for p in self.points],
                'rows': self.matrix.tolist()}


@dataclass(frozen=True)
class CellPartition(Quantizer):
    """
    Intervals cut at increasing breakpoints; cell c sends message c+1

    With `cell_probs`, cell c instead sends message m with probability
    cell_probs[c][m-1], and the partition may refine the 2^k messages.
    """

    k: int
    cuts: Tuple[float, ...]
    cell_probs: Optional[np.ndarray] = field(default=None, compare=False)
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cuts)
        if any(b <= a for a, b in zip(cuts[:-1], cuts[1:])):
            raise ConfigurationError("Cell breakpoints must be strictly increasing", field="breakpoints")
        object.__setattr__(self, 'cuts', cuts)
        cells = len(cuts) + 1
        if self.cell_probs is None:
            if cells > self.num_messages:
                raise ConfigurationError(f"{cells} cells do not fit in 2^{self.k} messages", field="breakpoints")
            return
        probs = np.atleast_2d(np.asarray(self.cell_probs, dtype=float))
        if probs.shape[0] != cells:
            raise ConfigurationError(f"cell_probs has {probs.shape[0]} rows for {cells} cells")
        probs = np.pad(probs, ((0, 0), (0, self.num_messages - probs.shape[1])))
        _check_rows(probs, "cell_probs")
        probs.setflags(write=False)
        object.__setattr__(self, 'cell_probs', probs)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self.cuts

    @property
    def is_deterministic(self) -> bool:
        return self.cell_probs is None or bool(np.all((self.cell_probs == 0.0) | (self.cell_probs == 1.0)))

    def cell(self, x) -> int:
        x = _scalar(x)
        if not self.lower <= x <= self.upper or math.isnan(x):
            raise InvalidSampleError(f"Sample {x} lies outside all cells [{self.lower}, {self.upper}]", field="x")
        return bisect.bisect_right(self.cuts, x)

    def probabilities(self, x) -> np.ndarray:
        c = self.cell(x)
        if self.cell_probs is not None:
            return self.cell_probs[c]
        row = np.zeros(self.num_messages)
        row[c] = 1.0
        return row

    def encode_batch(self, xs, rng=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim > 1 and int(np.prod(xs.shape[1:])) != 1:
            raise InvalidSampleError(f"Expected scalar samples, got rows of shape {xs.shape[1:]}", field="x")
        xs = xs.reshape(-1)
        if np.any(xs < self.lower) or np.any(xs > self.upper):
            raise InvalidSampleError("A sample lies outside all cells", field="x")
        cells = np.searchsorted(np.asarray(self.cuts), xs, side='right')
        if self.cell_probs is None:
            return cells + 1
        if self.is_deterministic:
            return np.argmax(self.cell_probs, axis=1)[cells] + 1
        return super().encode_batch(xs, rng)

    def describe(self) -> Dict[str, Any]:
        record = {'type': 'cells', 'k': self.k, 'breakpoints': list(self.cuts)}
        if self.cell_probs is not None:
            record['cell_probs'] = self.cell_probs.tolist()
        return record


@dataclass(frozen=True)
class CoordinateSign(Quantizer):
    """
    Sign bits of assigned coordinates of a vector sample

    Bit t is 1(x[coords[t]] > thresholds[t]) and the message is
    1 + sum_t bit_t 2^t.
    """

    k: int
    coords: Tuple[int, ...]
    thresholds: Tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) > self.k:
            raise ConfigurationError(f"{len(self.coords)} coordinates do not fit in {self.k} bits", field="coords")
        if len(set(self.coords)) != len(self.coords):
            raise ConfigurationError("Coordinates must be distinct", field="coords")
        if len(self.thresholds) != len(self.coords):
            raise ConfigurationError("Need one threshold per coordinate", field="thresholds")

    def bits(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.coords and max(self.coords) >= x.size:
            raise InvalidSampleError(f"Sample of length {x.size} has no coordinate {max(self.coords)}", field="x")
        return (x[list(self.coords)] > np.asarray(self.thresholds)).astype(int)

    def message_bits(self, m: int) -> np.ndarray:
        return np.array([((m - 1) >> t) & 1 for t in range(len(self.coords))], dtype=int)

    def probabilities(self, x) -> np.ndarray:
        row = np.zeros(self.num_messages)
        row[int(np.dot(self.bits(x), 2 ** np.arange(len(self.coords))))] = 1.0
        return row

    def encode_batch(self, xs, rng=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        xs = xs.reshape(xs.shape[0], -1)
        bits = (xs[:, list(self.coords)] > np.asarray(self.thresholds)).astype(int)
        return bits @ (2 ** np.arange(len(self.coords))) + 1

    def describe(self) -> Dict[str, Any]:
        return {'type': 'coordinate_sign', 'k': self.k, 'coords': list(self.coords),
                'thresholds': list(self.thresholds)}


@dataclass(frozen=True)
class ConstantQuantizer(Quantizer):
    """Every sample sends the same message"""

    k: int = 1
    message: int = 1

    def probabilities(self, x) -> np.ndarray:
        row = np.zeros(self.num_messages)
        row[self.message - 1] = 1.0
        return row

    def encode_batch(self, xs, rng=None) -> np.ndarray:
        return np.full(len(xs), self.message, dtype=int)

    def describe(self) -> Dict[str, Any]:
        return {'type': 'one_cell', 'k': self.k}


def bits_needed(count: int) -> int:
    return max(1, math.ceil(math.log2(count)))


def identity_quantizer(model: Model, k: Optional[int] = None) -> DiscreteTable:
    points = model.support()
    if points is None:
        raise ConfigurationError(f"{model.kind} has no finite support for an identity quantizer")
    k = k or bits_needed(len(points))
    return DiscreteTable(k, tuple(points), np.eye(len(points), 2 ** k))


def one_cell_quantizer(k: int = 1) -> ConstantQuantizer:
    return ConstantQuantizer(k)


def sign_quantizer(threshold: float = 0.0) -> CellPartition:
    return CellPartition(1, (threshold,))


def uniform_quantizer(points: Sequence[Any], k: int) -> DiscreteTable:
    """Every point sends a uniformly random message"""
    return DiscreteTable(k, tuple(points), np.full((len(points), 2 ** k), 2.0 ** -k))


def from_messages(points: Sequence[Any], assignment: Sequence[int], k: int) -> DiscreteTable:
    """Deterministic table sending points[c] to message assignment[c] (1-based)"""
    matrix = np.zeros((len(points), 2 ** k))
    matrix[np.arange(len(points)), np.asarray(assignment) - 1] = 1.0
    return DiscreteTable(k, tuple(points), matrix)


def table_from_csv(path: str, points: Sequence[Any], k: int) -> DiscreteTable:
    """Load a table whose rows follow `points` and whose columns are message probabilities"""
    try:
        matrix = np.loadtxt(path, delimiter=',', ndmin=2)
    except (OSError, ValueError) as e:
        raise ParseError(f"Cannot read quantizer table {path}: {e}", field="quantizer.csv")
    return DiscreteTable(k, tuple(points), matrix)


# ---------------------------------------------------------------------------
# Likelihoods
# ---------------------------------------------------------------------------

def _atom_scalar(point) -> float:
    return float(point[0]) if isinstance(point, tuple) else float(point)


def _coordinate_bit_moments(model: Model, theta: np.ndarray, coord: int, threshold: float):
    """P(bit = b) and E[S_coord 1(bit = b)] for b = 0, 1 on the 1-d marginal"""
    view = finite_view(marginal(model, coord), theta[coord:coord + 1], (threshold,))
    ones = np.array([_atom_scalar(p) > threshold for p in view.points])
    mass = np.array([view.masses[~ones].sum(), view.masses[ones].sum()])
    moment = np.array([view.score_moments[~ones, 0].sum(), view.score_moments[ones, 0].sum()])
    return mass, moment


def message_moments(q: Quantizer, model: Model, theta) -> Tuple[np.ndarray, np.ndarray]:
    """
    p(m|theta) and E[S_theta(X) b_m(X)] for every message

    Returns:
        (probabilities of shape (2^k,), score moments of shape (2^k, dim))
    """
    theta = model.check_theta(theta)
    if isinstance(q, CoordinateSign) and model.is_product:
        return _coordinate_sign_moments(q, model, theta)
    if isinstance(q, ConstantQuantizer):
        probs = np.zeros(q.num_messages)
        probs[q.message - 1] = 1.0
        return probs, np.zeros((q.num_messages, model.dim))
    if model.support() is None and model.sample_dim != 1:
        raise ExactComputationInfeasibleError(
            f"Exact likelihoods of {type(q).__name__} on {model.kind} with d={model.dim} need Monte Carlo")
    view = finite_view(model, theta, q.breakpoints)
    table = np.array([q.probabilities(p) for p in view.points])
    return view.masses @ table, table.T @ view.score_moments


def _coordinate_sign_moments(q: CoordinateSign, model: Model, theta: np.ndarray):
    per_bit = [_coordinate_bit_moments(model, theta, c, thr) for c, thr in zip(q.coords, q.thresholds)]
    probs = np.zeros(q.num_messages)
    moments = np.zeros((q.num_messages, model.dim))
    for m in range(1, 2 ** len(q.coords) + 1):
        bits = q.message_bits(m)
        factors = np.array([per_bit[t][0][b] for t, b in enumerate(bits)])
        probs[m - 1] = np.prod(factors)
        for t, (coord, b) in enumerate(zip(q.coords, bits)):
            others = np.prod(np.delete(factors, t))
            moments[m - 1, coord] = per_bit[t][1][b] * others
    return probs, moments


def message_likelihood(q: Quantizer, model: Model, theta, m: int) -> float:
    """p(m|theta) = E[p(m|X)]"""
    if not 1 <= m <= q.num_messages:
        raise ConfigurationError(f"Message {m} is outside 1..{q.num_messages}", field="m")
    probs, _ = message_moments(q, model, theta)
    return float(probs[m - 1])


# ---------------------------------------------------------------------------
# Sequential protocols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequentialStrategy:
    """
    Quantizer choice as a function of the message history

    Histories listed in `table` use their own quantizer; all others use
    `default`, either a fixed quantizer or a rule called with the history.
    """

    k: int
    default: Union[Quantizer, Callable[[Tuple[int, ...]], Quantizer]]
    table: Mapping[Tuple[int, ...], Quantizer] = field(default_factory=dict)

    def quantizer_for(self, history: Sequence[int]) -> Quantizer:
        history = tuple(int(m) for m in history)
        q = self.table.get(history)
        if q is None:
            q = self.default if isinstance(self.default, Quantizer) else self.default(history)
        if q.k != self.k:
            raise ProtocolInvalidError(f"History {history} produced a {q.k}-bit quantizer, expected {self.k}")
        return q


def run_sequential(strategy: SequentialStrategy, samples: Sequence[Any], rng: np.random.Generator) -> List[int]:
    """Nodes speak in order, each quantizing with the strategy chosen by the messages so far"""
    messages: List[int] = []
    for x in samples:
        messages.append(strategy.quantizer_for(messages).quantize(x, rng))
    return messages


# ---------------------------------------------------------------------------
# Blackboard protocols
# ---------------------------------------------------------------------------

class BitFunction(ABC):
    """b(x) = probability of writing 1"""

    @abstractmethod
    def __call__(self, x) -> float:
        ...

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def in_range(self) -> bool:
        return True

    def spec(self) -> str:
        raise ConfigurationError(f"{type(self).__name__} has no catalog name")


@dataclass(frozen=True)
class SignBit(BitFunction):
    threshold: float

    def __call__(self, x) -> float:
        return 1.0 if _scalar(x) > self.threshold else 0.0

    @property
    def breakpoints(self):
        return (self.threshold,)

    def spec(self) -> str:
        return f"sign@{self.threshold!r}"


@dataclass(frozen=True)
class IntervalBit(BitFunction):
    low: float
    high: float

    def __call__(self, x) -> float:
        return 1.0 if self.low <= _scalar(x) < self.high else 0.0

    @property
    def breakpoints(self):
        return (self.low, self.high)

    def spec(self) -> str:
        return f"interval@{json.dumps([self.low, self.high])}"


@dataclass(frozen=True)
class TableBit(BitFunction):
    """values[i] for category i+1, or for the i-th 0/1 vector in lexicographic order"""

    values: Tuple[float, ...]

    def __call__(self, x) -> float:
        if isinstance(x, (tuple, list, np.ndarray)) and np.ndim(x):
            index = int("".join(str(int(b)) for b in x), 2)
        else:
            index = int(x) - 1
        if not 0 <= index < len(self.values):
            raise InvalidSampleError(f"Sample {x!r} has no entry in a {len(self.values)}-entry bit table", field="x")
        return self.values[index]

    def in_range(self) -> bool:
        return all(0.0 <= v <= 1.0 for v in self.values)

    def spec(self) -> str:
        return f"table@{json.dumps(list(self.values))}"


@dataclass(frozen=True)
class ConstBit(BitFunction):
    p: float

    def __call__(self, x) -> float:
        return self.p

    def in_range(self) -> bool:
        return 0.0 <= self.p <= 1.0

    def spec(self) -> str:
        return f"const@{self.p!r}"


@dataclass(frozen=True)
class CoordBit(BitFunction):
    """Bit j (1-based) of a 0/1 vector sample"""

    j: int

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not 1 <= self.j <= x.size:
            raise InvalidSampleError(f"Sample of length {x.size} has no coordinate {self.j}", field="x")
        return float(min(max(x[self.j - 1], 0.0), 1.0))

    def spec(self) -> str:
        return f"coord@{self.j}"


@dataclass(frozen=True)
class QuantizerBit(BitFunction):
    """
    Bit `position` (most significant first) of a quantizer's message, given
    the bits already written by the same node
    """

    quantizer: Quantizer
    position: int
    prefix: Tuple[int, ...]

    def __call__(self, x) -> float:
        row = self.quantizer.probabilities(x)
        k = self.quantizer.k
        codes = np.arange(len(row))
        match = np.ones(len(row), dtype=bool)
        for t, b in enumerate(self.prefix):
            match &= ((codes >> (k - 1 - t)) & 1) == b
        total = row[match].sum()
        if total <= 0.0:
            return 0.0
        ones = match & (((codes >> (k - 1 - self.position)) & 1) == 1)
        return float(row[ones].sum() / total)

    @property
    def breakpoints(self):
        return self.quantizer.breakpoints


def parse_bit(spec: str) -> BitFunction:
    """Parse a catalog name such as sign@0.0, interval@[a,b], table@[...], const@p, coord@j"""
    name, sep, arg = str(spec).partition('@')
    if not sep:
        raise ParseError(f"Bit function {spec!r} is missing '@'", field="bit")
    try:
        if name == 'sign':
            return SignBit(float(arg))
        if name == 'interval':
            low, high = json.loads(arg)
            return IntervalBit(float(low), float(high))
        if name == 'table':
            return TableBit(tuple(float(v) for v in json.loads(arg)))
        if name == 'const':
            return ConstBit(float(arg))
        if name == 'coord':
            return CoordBit(int(arg))
    except (ValueError, TypeError, json.JSONDecodeError) as e:
        raise ParseError(f"Cannot parse bit function {spec!r}: {e}", field="bit")
    raise ParseError(f"Unknown bit function {name!r}", field="bit")


class ProtocolTree(ABC):
    """
    Blackboard protocol as a labeled binary tree

    A node is addressed by its path from the root, a tuple of bits where 0
    is the left branch. Labels are 1-based node indices.
    """

    def __init__(self, n: int, k: int):
        if n < 1 or k < 1:
            raise ConfigurationError("A protocol tree needs n >= 1 and k >= 1")
        self.n = n
        self.k = k

    @property
    def depth(self) -> int:
        return self.n * self.k

    @abstractmethod
    def node(self, path: Tuple[int, ...]) -> Tuple[int, BitFunction]:
        """(label, bit function) of the internal node at `path`"""

    @abstractmethod
    def breakpoints(self) -> Tuple[float, ...]:
        ...


class ExplicitTree(ProtocolTree):
    """Full binary tree stored in heap order: node v has children 2v+1 (bit 0) and 2v+2 (bit 1)"""

    def __init__(self, n: int, k: int, labels: Sequence[int], bits: Sequence[BitFunction]):
        super().__init__(n, k)
        count = len(labels)
        if count != len(bits):
            raise ParseError("Tree needs one bit function per label", field="nodes")
        height = (count + 1).bit_length() - 1
        if count < 1 or 2 ** height - 1 != count:
            raise ParseError(f"{count} nodes do not form a full binary tree", field="nodes")
        if height > get_settings().limits.max_exact_tree_bits:
            raise ExactComputationInfeasibleError(f"Explicit trees are limited to depth "
                                                  f"{get_settings().limits.max_exact_tree_bits}")
        self.height = height
        self.labels = tuple(int(l) for l in labels)
        self.bits = tuple(bits)
        self._report: Optional[Dict[str, Any]] = None

    @staticmethod
    def index(path: Sequence[int]) -> int:
        v = 0
        for b in path:
            v = 2 * v + 1 + int(b)
        return v

    def node(self, path):
        v = self.index(path)
        if len(path) >= self.height:
            raise ProtocolInvalidError(f"Path {path} runs past the leaves at depth {self.height}")
        return self.labels[v], self.bits[v]

    def breakpoints(self):
        return tuple(sorted({c for bit in self.bits for c in bit.breakpoints}))

    def validity(self) -> Dict[str, Any]:
        if self._report is None:
            self._report = validate_tree(self, self.n, self.k)
        return self._report


class IndependentProtocolTree(ProtocolTree):
    """
    An independent protocol written on the blackboard

    Node i writes the k bits of its message in turn. Nodes are evaluated on
    demand, so the depth is unbounded.
    """

    def __init__(self, quantizers: Sequence[Quantizer]):
        if not quantizers:
            raise ConfigurationError("An independent protocol needs at least one node")
        k = quantizers[0].k
        if any(q.k != k for q in quantizers):
            raise ProtocolInvalidError("All nodes of a protocol must use the same number of bits")
        super().__init__(len(quantizers), k)
        self.quantizers = tuple(quantizers)

    def node(self, path):
        if len(path) >= self.depth:
            raise ProtocolInvalidError(f"Path of length {len(path)} runs past depth {self.depth}")
        i, t = divmod(len(path), self.k)
        return i + 1, QuantizerBit(self.quantizers[i], t, tuple(int(b) for b in path[i * self.k:]))

    def breakpoints(self):
        return tuple(sorted({c for q in set(self.quantizers) for c in q.breakpoints}))


def induced_tree(quantizers: Sequence[Quantizer]) -> IndependentProtocolTree:
    return IndependentProtocolTree(quantizers)


def decode_transcript(tree: ProtocolTree, y: Sequence[int]) -> List[int]:
    """Per-node messages: node i's bits along the path, most significant first"""
    codes = [0] * tree.n
    path: List[int] = []
    for b in y:
        label, _ = tree.node(tuple(path))
        codes[label - 1] = 2 * codes[label - 1] + int(b)
        path.append(int(b))
    return [c + 1 for c in codes]


def random_valid_tree(n: int, k: int, rng: np.random.Generator,
                      bit_factory: Optional[Callable[[np.random.Generator], BitFunction]] = None) -> ExplicitTree:
    """
    Random labels chosen so that every root-to-leaf path has exactly k nodes per label

    Args:
        n: Number of nodes
        k: Bits per node
        rng: Random stream
        bit_factory: Draws a bit function for each tree node; fair coins by default
    """
    bit_factory = bit_factory or (lambda r: ConstBit(0.5))
    size = 2 ** (n * k) - 1
    labels = [0] * size
    bits: List[BitFunction] = [ConstBit(0.5)] * size
    stack = [(0, tuple([k] * n))]
    while stack:
        v, remaining = stack.pop()
        if v >= size:
            continue
        choices = [i for i, r in enumerate(remaining) if r > 0]
        i = choices[int(rng.integers(len(choices)))]
        labels[v] = i + 1
        bits[v] = bit_factory(rng)
        left = remaining[:i] + (remaining[i] - 1,) + remaining[i + 1:]
        stack.append((2 * v + 2, left))
        stack.append((2 * v + 1, left))
    return ExplicitTree(n, k, labels, bits)


def validate_tree(tree: ProtocolTree, n: int, k: int) -> Dict[str, Any]:
    """
    Check the labeling constraint, the depth and the bit ranges

    Returns:
        Report with 'passed', 'checks' and 'violations' (each violating path
        with its per-label counts); violations are data, never raised
    """
    checks = []
    violations = []

    shape_ok = tree.n == n and tree.k == k
    checks.append({'name': 'Protocol Shape', 'passed': shape_ok,
                   'message': f"tree has n={tree.n}, k={tree.k}; expected n={n}, k={k}"})

    if isinstance(tree, IndependentProtocolTree):
        checks.append({'name': 'Depth', 'passed': tree.depth == n * k,
                       'message': f"depth {tree.depth} by construction"})
        checks.append({'name': 'Labels Per Path', 'passed': shape_ok,
                       'message': "each node writes its k message bits by construction"})
        checks.append({'name': 'Bit Ranges', 'passed': True,
                       'message': "bits are conditional message probabilities"})
    else:
        depth_ok = tree.height == n * k
        checks.append({'name': 'Depth', 'passed': depth_ok,
                       'message': f"depth {tree.height}, expected {n * k}"})
        stack = [((), (0,) * n)]
        while stack:
            path, counts = stack.pop()
            if len(path) == tree.height:
                if any(c != k for c in counts):
                    violations.append({'path': "".join(map(str, path)),
                                       'label_counts': {str(i + 1): c for i, c in enumerate(counts)}})
                continue
            label = tree.labels[ExplicitTree.index(path)]
            if 1 <= label <= n:
                counts = counts[:label - 1] + (counts[label - 1] + 1,) + counts[label:]
            stack.append((path + (1,), counts))
            stack.append((path + (0,), counts))
        checks.append({'name': 'Labels Per Path', 'passed': not violations,
                       'message': f"{len(violations)} paths violate the per-label count {k}"})
        bad_bits = [i for i, bit in enumerate(tree.bits) if not bit.in_range()]
        checks.append({'name': 'Bit Ranges', 'passed': not bad_bits,
                       'message': f"{len(bad_bits)} nodes have bit probabilities outside [0, 1]"})

    passed = all(c['passed'] for c in checks)
    return {
        'passed': passed,
        'checks': checks,
        'violations': violations,
        'feedback': "✅ Protocol tree is valid" if passed else "❌ Protocol tree violates the labeling constraint",
    }


def _draw_bit(b: float, rng: np.random.Generator) -> int:
    if b >= 1.0:
        return 1
    if b <= 0.0:
        return 0
    return int(rng.random() < b)


def run_tree(tree: ProtocolTree, samples: Sequence[Any], rng: np.random.Generator) -> Tuple[int, ...]:
    """Walk from the root, node l_v writing 1 with probability b_v(x_{l_v})"""
    if len(samples) != tree.n:
        raise ProtocolInvalidError(f"Tree has {tree.n} nodes but got {len(samples)} samples")
    if isinstance(tree, ExplicitTree) and not tree.validity()['passed']:
        raise ProtocolInvalidError("Cannot run an invalid protocol tree")
    path: List[int] = []
    counts = [0] * tree.n
    for _ in range(tree.depth):
        label, bit = tree.node(tuple(path))
        if not 1 <= label <= tree.n:
            raise ProtocolInvalidError(f"Node label {label} is outside 1..{tree.n}")
        counts[label - 1] += 1
        if counts[label - 1] > tree.k:
            raise ProtocolInvalidError(f"Node {label} speaks more than {tree.k} times on path {path}")
        path.append(_draw_bit(bit(samples[label - 1]), rng))
    return tuple(path)


def _check_exact_size(tree: ProtocolTree) -> None:
    limit = get_settings().limits.max_exact_tree_bits
    if tree.depth > limit:
        raise ExactComputationInfeasibleError(f"Exact transcript sums need nk <= {limit}, got {tree.depth}")


def transcript_factors(tree: ProtocolTree, view: FiniteView, y: Sequence[int]) -> np.ndarray:
    """p_{i,y}(atom) for every node i, as an (n, atoms) array"""
    factors = np.ones((tree.n, len(view.points)))
    path: List[int] = []
    for b in y:
        label, bit = tree.node(tuple(path))
        values = np.array([bit(p) for p in view.points])
        factors[label - 1] *= values if int(b) == 1 else 1.0 - values
        path.append(int(b))
    return factors


def enumerate_transcripts(tree: ProtocolTree, view: FiniteView) -> Iterator[Tuple[Tuple[int, ...], np.ndarray]]:
    """Depth-first over all 2^{nk} transcripts, yielding (y, p_{i,y} per node and atom)"""
    _check_exact_size(tree)
    stack = [((), np.ones((tree.n, len(view.points))))]
    while stack:
        path, factors = stack.pop()
        if len(path) == tree.depth:
            yield path, factors
            continue
        label, bit = tree.node(path)
        values = np.array([bit(p) for p in view.points])
        one = factors.copy()
        one[label - 1] *= values
        zero = factors.copy()
        zero[label - 1] *= 1.0 - values
        stack.append((path + (1,), one))
        stack.append((path + (0,), zero))


def transcript_probability(tree: ProtocolTree, model: Model, theta, y: Sequence[int]) -> float:
    """P(Y = y) = prod_i E[p_{i,y}(X_i)]"""
    if len(y) != tree.depth:
        raise ProtocolInvalidError(f"Transcript has {len(y)} bits, expected {tree.depth}")
    view = finite_view(model, theta, tree.breakpoints())
    return float(np.prod(transcript_factors(tree, view, y) @ view.masses))


# ---------------------------------------------------------------------------
# JSON formats
# ---------------------------------------------------------------------------

def tree_from_json(description: Union[str, Dict[str, Any]]) -> ExplicitTree:
    """{"n": 2, "k": 1, "nodes": [{"label": 1, "bit": "sign@0.0"}, ...]} in heap order"""
    if isinstance(description, str):
        try:
            description = json.loads(description)
        except json.JSONDecodeError as e:
            raise ParseError(f"Protocol tree is not valid JSON: {e}", field="tree")
    try:
        nodes = description['nodes']
        return ExplicitTree(int(description['n']), int(description['k']),
                            [node['label'] for node in nodes], [parse_bit(node['bit']) for node in nodes])
    except (KeyError, TypeError) as e:
        raise ParseError(f"Protocol tree is missing a field: {e}", field="tree")


def tree_to_json(tree: ExplicitTree) -> Dict[str, Any]:
    return {'n': tree.n, 'k': tree.k,
            'nodes': [{'label': l, 'bit': b.spec()} for l, b in zip(tree.labels, tree.bits)]}


def quantizer_from_json(description: Union[str, Dict[str, Any]], model: Model) -> Quantizer:
    """
    Build a quantizer for `model` from its JSON description

    Supported types: identity, one_cell, sign, cells, table (rows or csv),
    coordinate_sign.
    """
    if isinstance(description, str):
        try:
            description = json.loads(description)
        except json.JSONDecodeError as e:
            raise ParseError(f"Quantizer description is not valid JSON: {e}", field="quantizer")
    kind = description.get('type')
    k = description.get('k')
    if kind == 'identity':
        return identity_quantizer(model, k)
    if kind == 'one_cell':
        return one_cell_quantizer(k or 1)
    if kind == 'sign':
        return sign_quantizer(float(description.get('threshold', 0.0)))
    if kind == 'cells':
        return CellPartition(int(k), tuple(description.get('breakpoints', [])), description.get('cell_probs'))
    if kind == 'table':
        points = model.support()
        if points is None:
            raise ConfigurationError("Table quantizers need a finite support", field="quantizer.type")
        if 'csv' in description:
            return table_from_csv(description['csv'], points, int(k))
        return DiscreteTable(int(k), tuple(points), np.asarray(description.get('rows', []), dtype=float))
    if kind == 'coordinate_sign':
        coords = [int(c) for c in description.get('coords', [])]
        thresholds = description.get('thresholds', [0.0] * len(coords))
        return CoordinateSign(int(k), tuple(coords), tuple(float(t) for t in thresholds))
    raise ConfigurationError(f"Unsupported quantizer type: {kind}", field="quantizer.type")
