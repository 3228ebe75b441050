"""Block-partitioned random graphs and their closed-form degree statistics.

The sampler draws a graph on blocks ``V_1..V_k`` where same-block pairs are
edges with probability ``p`` and cross-block pairs with probability ``q``.
Alongside it live the per-block criticals ``c_i`` that locate an instance
inside the Hamiltonicity window, exact and asymptotic degree-count formulas,
and a plain-text edge-list format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.stats import binom

from .rng import stream

__all__ = [
    "BlockPartition",
    "ModelParams",
    "Criticals",
    "BlockedGraph",
    "DegreeProfile",
    "NoSolutionError",
    "GraphFormatError",
    "generate",
    "criticals",
    "solve_q_for_window",
    "solve_p_for_window",
    "expected_degree_count",
    "degree_profile",
    "low_degree_census",
    "serialize",
    "deserialize",
    "induced_subgraph",
]


class NoSolutionError(ValueError):
    """Raised when no probability in [0, 1] reaches the requested target."""


class GraphFormatError(ValueError):
    """Raised on malformed edge-list input; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class BlockPartition:
    """Partition of vertices ``0..n-1`` into k contiguous blocks."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) < 1:
            raise ValueError("need at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "sizes", sizes)

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Start index of each block (cumulative sizes, leading 0)."""
        out, acc = [], 0
        for s in self.sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    @property
    def membership(self) -> np.ndarray:
        """Array mapping every vertex to its partition index."""
        return np.repeat(np.arange(self.k, dtype=np.int32),
                         np.asarray(self.sizes, dtype=np.int64))

    def index_of(self, v: int) -> int:
        """Partition index of vertex ``v``."""
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range")
        acc = 0
        for i, s in enumerate(self.sizes):
            acc += s
            if v < acc:
                return i
        raise AssertionError

    def block_range(self, i: int) -> range:
        off = self.offsets[i]
        return range(off, off + self.sizes[i])


@dataclass(frozen=True)
class ModelParams:
    """Sampler parameters: the partition plus the two edge probabilities."""

    partition: BlockPartition
    p: float
    q: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("p and q must lie in [0, 1]")


@dataclass(frozen=True)
class Criticals:
    """Per-block mean degrees, window positions, and the predicted P(HAM)."""

    phi: tuple[float, ...]
    c: tuple[float, ...]
    predicted_ham: float


class BlockedGraph:
    """Immutable simple graph with a block partition.

    Adjacency is stored CSR-style (``indptr``/``indices`` with sorted
    neighbor lists) plus a lazily built per-vertex bitset matrix used for
    word-parallel neighborhood unions.
    """

    __slots__ = ("partition", "indptr", "indices", "edge_count", "_bits")

    def __init__(self, partition: BlockPartition, indptr: np.ndarray,
                 indices: np.ndarray, edge_count: int):
        self.partition = partition
        self.indptr = indptr
        self.indices = indices
        self.edge_count = int(edge_count)
        self._bits = None
        indptr.setflags(write=False)
        indices.setflags(write=False)

    # -- construction -------------------------------------------------

    @classmethod
    def from_edges(cls, partition: BlockPartition,
                   edges: Iterable[tuple[int, int]]) -> "BlockedGraph":
        """Build from an iterable of vertex pairs (dedup, both orders ok)."""
        n = partition.n
        seen = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a},{b}) out of range")
            seen.add((a, b) if a < b else (b, a))
        if not seen:
            us = np.empty(0, dtype=np.int64)
            vs = np.empty(0, dtype=np.int64)
        else:
            arr = np.array(sorted(seen), dtype=np.int64)
            us, vs = arr[:, 0], arr[:, 1]
        return cls._from_pair_arrays(partition, us, vs)

    @classmethod
    def _from_pair_arrays(cls, partition: BlockPartition,
                          us: np.ndarray, vs: np.ndarray) -> "BlockedGraph":
        """Build from distinct pairs with u < v."""
        n = partition.n
        heads = np.concatenate([us, vs])
        tails = np.concatenate([vs, us])
        order = np.lexsort((tails, heads))
        indices = tails[order].astype(np.int32)
        counts = np.bincount(heads, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(partition, indptr, indices, len(us))

    # -- queries ------------------------------------------------------

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each edge once as (u, v) with u < v, sorted."""
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    yield u, int(v)

    def edge_array(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v."""
        us = np.repeat(np.arange(self.n), self.degrees)
        mask = us < self.indices
        return np.column_stack([us[mask], self.indices[mask]]).astype(np.int64)

    def is_block_edge(self, u: int, v: int) -> bool:
        return self.partition.index_of(u) == self.partition.index_of(v)

    @property
    def bitrows(self) -> np.ndarray:
        """(n, ceil(n/64)) uint64 adjacency bitset, built on first use."""
        if self._bits is None:
            n = self.n
            words = (n + 63) // 64
            bits = np.zeros((n, words), dtype=np.uint64)
            us = np.repeat(np.arange(n), self.degrees)
            vs = self.indices.astype(np.int64)
            np.bitwise_or.at(bits, (us, vs >> 6),
                             np.uint64(1) << (vs & 63).astype(np.uint64))
            bits.setflags(write=False)
            self._bits = bits
        return self._bits

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockedGraph):
            return NotImplemented
        return (self.partition.sizes == other.partition.sizes
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.partition.sizes, self.edge_count))

    def __repr__(self):
        return (f"BlockedGraph(sizes={self.partition.sizes}, "
                f"edges={self.edge_count})")


@dataclass(frozen=True)
class DegreeProfile:
    """Degree census of one graph: per-vertex degrees plus block counts."""

    degrees: np.ndarray
    small_threshold: float
    x_j_counts: tuple[np.ndarray, ...] = field(repr=False)
    n1: int = 0

    def count(self, i: int, j: int) -> int:
        """Number of block-``i`` vertices with degree exactly ``j``."""
        row = self.x_j_counts[i]
        return int(row[j]) if j < len(row) else 0

    @property
    def small_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.degrees < self.small_threshold)


# -- sampling ----------------------------------------------------------


def _bernoulli_positions(rng: np.random.Generator, n_pairs: int,
                         prob: float) -> np.ndarray:
    """Indices of successes among ``n_pairs`` independent Bernoulli(prob).

    Geometric gap skipping; exact and O(#successes).
    """
    if n_pairs <= 0 or prob <= 0.0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(n_pairs, dtype=np.int64)
    chunks = []
    pos = -1
    mean = n_pairs * prob
    batch = max(64, int(mean + 10.0 * math.sqrt(mean) + 16))
    while True:
        gaps = rng.geometric(prob, size=batch).astype(np.int64)
        positions = pos + np.cumsum(gaps)
        if positions[-1] >= n_pairs:
            chunks.append(positions[positions < n_pairs])
            break
        chunks.append(positions)
        pos = int(positions[-1])
        batch = max(64, batch // 4)
    return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]


def _decode_triangular(t: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the C(s,2) pairs of [0,s) to (a, b), a < b.

    Index layout is row-major by the smaller endpoint:
    t = a*(2s - a - 1)/2 + (b - a - 1).
    """
    tf = t.astype(np.float64)
    a = np.floor((2 * s - 1 - np.sqrt((2 * s - 1) ** 2 - 8 * tf)) / 2).astype(np.int64)
    # one correction pass each way guards against sqrt rounding
    for _ in range(2):
        start = a * (2 * s - a - 1) // 2
        a = np.where(start > t, a - 1, a)
        nxt = (a + 1) * (2 * s - a - 2) // 2
        a = np.where(t >= nxt, a + 1, a)
    start = a * (2 * s - a - 1) // 2
    b = t - start + a + 1
    return a, b


def _sample_block_pairs(rng: np.random.Generator, size: int, offset: int,
                        prob: float) -> tuple[np.ndarray, np.ndarray]:
    n_pairs = size * (size - 1) // 2
    t = _bernoulli_positions(rng, n_pairs, prob)
    a, b = _decode_triangular(t, size)
    return a + offset, b + offset


def _sample_cross_pairs(rng: np.random.Generator, size_i: int, off_i: int,
                        size_j: int, off_j: int,
                        prob: float) -> tuple[np.ndarray, np.ndarray]:
    t = _bernoulli_positions(rng, size_i * size_j, prob)
    return off_i + t // size_j, off_j + t % size_j


def generate(params: ModelParams, seed: int) -> BlockedGraph:
    """Draw one graph: same-block pairs with probability p, crossing with q.

    Deterministic given ``seed``; every pair is independent.
    """
    rng = stream(seed)
    return _generate_with(rng, params)


def _generate_with(rng: np.random.Generator, params: ModelParams) -> BlockedGraph:
    part = params.partition
    offs = part.offsets
    us, vs = [], []
    for i, s in enumerate(part.sizes):
        a, b = _sample_block_pairs(rng, s, offs[i], params.p)
        us.append(a)
        vs.append(b)
    for i in range(part.k):
        for j in range(i + 1, part.k):
            a, b = _sample_cross_pairs(rng, part.sizes[i], offs[i],
                                       part.sizes[j], offs[j], params.q)
            us.append(a)
            vs.append(b)
    return BlockedGraph._from_pair_arrays(part, np.concatenate(us),
                                          np.concatenate(vs))


# -- closed-form statistics ---------------------------------------------


def criticals(params: ModelParams) -> Criticals:
    """Window positions ``c_i`` and the predicted Hamiltonicity probability.

    c_i = p*n_i + (n - n_i)*q - log(n_i) - log(log(n)) with n the total
    vertex count, and the prediction is exp(-sum_i exp(-c_i)).
    """
    part = params.partition
    n = part.n
    if n <= 3:
        raise ValueError(f"criticals undefined for n={n} (needs n > 3)")
    if min(part.sizes) < 2:
        raise ValueError("every block needs at least 2 vertices")
    loglog = math.log(math.log(n))
    phi, c = [], []
    for ni in part.sizes:
        phi_i = params.p * ni + params.q * (n - ni)
        phi.append(phi_i)
        c.append(phi_i - math.log(ni) - loglog)
    predicted = math.exp(-sum(math.exp(-ci) for ci in c))
    return Criticals(tuple(phi), tuple(c), predicted)


def _min_c(partition: BlockPartition, p: float, q: float) -> float:
    n = partition.n
    loglog = math.log(math.log(n))
    return min(p * ni + (n - ni) * q - math.log(ni) for ni in partition.sizes) - loglog


def solve_q_for_window(partition: BlockPartition, p: float,
                       target_c: float, tol: float = 1e-9) -> float:
    """Crossing probability placing ``min_i c_i`` at ``target_c`` for fixed p.

    Monotone bisection; exact-boundary target at q=0 returns 0.  Raises
    :class:`NoSolutionError` when neither endpoint brackets the target.
    """
    lo, hi = 0.0, 1.0
    f_lo = _min_c(partition, p, 0.0)
    f_hi = _min_c(partition, p, 1.0)
    if abs(f_lo - target_c) <= tol:
        return 0.0
    if f_lo > target_c:
        raise NoSolutionError(
            f"target {target_c} below reach: min c = {f_lo} already at q=0")
    if f_hi < target_c:
        raise NoSolutionError(
            f"target {target_c} above reach: min c = {f_hi} at q=1")
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        val = _min_c(partition, p, mid)
        if abs(val - target_c) <= tol:
            return mid
        if val < target_c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_p_for_window(partition: BlockPartition, q: float,
                       target_c: float, tol: float = 1e-9) -> float:
    """Block probability placing ``min_i c_i`` at ``target_c`` for fixed q."""
    f_lo = _min_c(partition, 0.0, q)
    f_hi = _min_c(partition, 1.0, q)
    if abs(f_lo - target_c) <= tol:
        return 0.0
    if f_lo > target_c:
        raise NoSolutionError(
            f"target {target_c} below reach: min c = {f_lo} already at p=0")
    if f_hi < target_c:
        raise NoSolutionError(
            f"target {target_c} above reach: min c = {f_hi} at p=1")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        val = _min_c(partition, mid, q)
        if abs(val - target_c) <= tol:
            return mid
        if val < target_c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expected_degree_count(params: ModelParams, i: int,
                          j: int) -> tuple[float, float]:
    """Expected number of block-``i`` vertices with degree exactly ``j``.

    Returns ``(exact, asymptotic)``: the exact value convolves the two
    binomial degree components; the asymptotic one is the Poisson-style
    formula n_i * exp(-phi_i) * phi_i^j / j!, evaluated in log space.
    """
    part = params.partition
    n, ni = part.n, part.sizes[i]
    if not 0 <= j < n:
        raise ValueError(f"degree {j} out of range")
    s_lo = max(0, j - (n - ni))
    s_hi = min(j, ni - 1)
    if s_lo > s_hi:
        exact = 0.0
    else:
        s = np.arange(s_lo, s_hi + 1)
        terms = binom.pmf(s, ni - 1, params.p) * binom.pmf(j - s, n - ni, params.q)
        exact = ni * float(np.sum(terms))
    phi_i = params.p * ni + params.q * (n - ni)
    if phi_i == 0.0:
        asym = float(ni) if j == 0 else 0.0
    else:
        log_val = math.log(ni) - phi_i + j * math.log(phi_i) - math.lgamma(j + 1)
        asym = math.exp(log_val)
    return exact, asym


def degree_profile(graph: BlockedGraph,
                   small_threshold: float | None = None) -> DegreeProfile:
    """Census of degrees: per-block degree counts and the n1 statistic."""
    degs = graph.degrees
    if small_threshold is None:
        small_threshold = math.log(graph.n) / 10.0
    part = graph.partition
    counts = []
    for i in range(part.k):
        rng_i = part.block_range(i)
        counts.append(np.bincount(degs[rng_i.start:rng_i.stop]))
    n1 = int(np.count_nonzero(degs <= 1))
    return DegreeProfile(degs, small_threshold, tuple(counts), n1)


def low_degree_census(graph: BlockedGraph, alpha: float) -> tuple[int, float]:
    """Count vertices of degree <= alpha*log(n) and the n^rho(alpha) bound.

    rho(alpha) = alpha + alpha*log(1/alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n = graph.n
    thr = alpha * math.log(n)
    count = int(np.count_nonzero(graph.degrees <= thr))
    rho = alpha + alpha * math.log(1.0 / alpha)
    return count, float(n ** rho)


# -- induced subgraphs ---------------------------------------------------


def induced_subgraph(graph: BlockedGraph,
                     vertices: Sequence[int]) -> tuple[BlockedGraph, np.ndarray]:
    """Induced subgraph on ``vertices`` plus the new->old vertex map.

    Blocks that lose all their vertices are dropped; the survivors keep
    their relative order, so block membership is preserved.
    """
    keep = np.asarray(sorted(set(int(v) for v in vertices)), dtype=np.int64)
    if len(keep) == 0:
        raise ValueError("cannot induce on an empty vertex set")
    n = graph.n
    old_to_new = np.full(n, -1, dtype=np.int64)
    old_to_new[keep] = np.arange(len(keep))
    member = graph.partition.membership[keep]
    sizes = [int(c) for c in np.bincount(member, minlength=graph.partition.k) if c > 0]
    part = BlockPartition(tuple(sizes))
    us, vs = [], []
    for new_u, old_u in enumerate(keep):
        for old_v in graph.neighbors(int(old_u)):
            new_v = old_to_new[old_v]
            if new_v > new_u:
                us.append(new_u)
                vs.append(int(new_v))
    sub = BlockedGraph._from_pair_arrays(part, np.asarray(us, dtype=np.int64),
                                         np.asarray(vs, dtype=np.int64))
    return sub, keep


# -- serialization --------------------------------------------------------


def serialize(graph: BlockedGraph) -> str:
    """Edge-list text: header then one ``u v`` line per edge, u < v."""
    sizes = ",".join(str(s) for s in graph.partition.sizes)
    lines = [f"blockham v1 k={graph.partition.k} sizes={sizes}"]
    arr = graph.edge_array()
    lines.extend(f"{u} {v}" for u, v in arr)
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> BlockedGraph:
    """Parse the edge-list format produced by :func:`serialize`."""
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError(1, "empty input")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "blockham" or header[1] != "v1":
        raise GraphFormatError(1, f"bad header {lines[0]!r}")
    try:
        k = int(header[2].removeprefix("k="))
        sizes = tuple(int(s) for s in header[3].removeprefix("sizes=").split(","))
    except ValueError as exc:
        raise GraphFormatError(1, f"unparseable header field: {exc}") from None
    if len(sizes) != k:
        raise GraphFormatError(1, f"k={k} but {len(sizes)} sizes given")
    part = BlockPartition(sizes)
    n = part.n
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(lineno, f"expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(lineno, f"non-integer endpoint in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(lineno, f"vertex out of range in {line!r}")
        if u >= v:
            raise GraphFormatError(lineno, f"need u < v, got {line!r}")
        edges.append((u, v))
    return BlockedGraph.from_edges(part, edges)
