"""Hamilton-cycle and longest-path engines.

Exact oracles (subset DP, depth-first backtracking) for small graphs, and
the rotation-extension heuristic for large ones.  All of them support
forced vertex pairs: a returned cycle must traverse every forced pair as
an edge, and a path may touch a pair's vertices only by using its edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .model import BlockedGraph
from .rng import kernel_seed

__all__ = [
    "ForcedEdgeSet",
    "PathState",
    "RotationState",
    "BoosterSet",
    "BacktrackResult",
    "PosaResult",
    "SizeLimitError",
    "held_karp_hamilton",
    "hamilton_cycle_exact",
    "backtrack_hamilton",
    "longest_path_exact",
    "extract_longest_path",
    "rotate_closure",
    "booster_set",
    "posa_solve",
    "verify_cycle",
    "is_connected",
]

HELD_KARP_LIMIT = 22
LONGEST_PATH_LIMIT = 20


class SizeLimitError(ValueError):
    """Raised when a graph is too large for an exact oracle."""


@dataclass(frozen=True)
class ForcedEdgeSet:
    """Pairwise vertex-disjoint pairs a Hamilton cycle must use as edges."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = tuple(sorted((min(a, b), max(a, b)) for a, b in self.pairs))
        seen: set[int] = set()
        for a, b in norm:
            if a == b:
                raise ValueError(f"degenerate pair ({a},{b})")
            if a in seen or b in seen:
                raise ValueError(f"pair ({a},{b}) shares a vertex with another pair")
            seen.add(a)
            seen.add(b)
        object.__setattr__(self, "pairs", norm)

    @classmethod
    def of(cls, pairs: Iterable[Sequence[int]]) -> "ForcedEdgeSet":
        return cls(tuple((int(a), int(b)) for a, b in pairs))

    def __len__(self):
        return len(self.pairs)

    def __bool__(self):
        return bool(self.pairs)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(v for pair in self.pairs for v in pair)

    def counts(self, partition) -> dict[tuple[int, int], int]:
        """Pair counts keyed by block pair (i, j), i <= j."""
        out: dict[tuple[int, int], int] = {}
        for a, b in self.pairs:
            i, j = partition.index_of(a), partition.index_of(b)
            key = (min(i, j), max(i, j))
            out[key] = out.get(key, 0) + 1
        return out

    def partner_array(self, n: int) -> np.ndarray:
        arr = np.full(n, -1, dtype=np.int32)
        for a, b in self.pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"pair ({a},{b}) out of range for n={n}")
            arr[a] = b
            arr[b] = a
        return arr


EMPTY_FORCED = ForcedEdgeSet(())


@dataclass(frozen=True)
class PathState:
    """Simple path held as a vertex sequence; the fixed end is path[0]."""

    path: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.path)) != len(self.path):
            raise ValueError("path repeats a vertex")
        if not self.path:
            raise ValueError("empty path")
        object.__setattr__(self, "path", tuple(int(v) for v in self.path))

    @property
    def fixed_end(self) -> int:
        return self.path[0]

    @property
    def free_end(self) -> int:
        return self.path[-1]

    @property
    def length(self) -> int:
        """Edge count."""
        return len(self.path) - 1

    @property
    def on_path(self) -> int:
        bits = 0
        for v in self.path:
            bits |= 1 << v
        return bits


@dataclass(frozen=True)
class RotationState:
    """End set of a maximal path under admissible rotations.

    ``witness[x]`` is the pivot-vertex sequence whose rotations turn the
    base path into the path ending at x; ``anchor[x]`` is the vertex next
    to x on that path.
    """

    base_path: PathState
    forced: ForcedEdgeSet
    end_set: frozenset[int]
    witness: dict[int, tuple[int, ...]] = field(repr=False)
    anchor: dict[int, int] = field(repr=False)

    def path_to(self, x: int) -> list[int]:
        """Replay the witness rotations and return the path ending at x."""
        path = list(self.base_path.path)
        for pivot in self.witness[x]:
            h = path.index(pivot)
            path[h + 1:] = reversed(path[h + 1:])
        if path[-1] != x:
            raise AssertionError(f"witness replay for {x} ended at {path[-1]}")
        return path


@dataclass(frozen=True)
class BoosterSet:
    """Non-edges whose addition lengthens a longest path or closes a
    Hamilton cycle (the extension step needs a connected graph)."""

    pairs: frozenset[tuple[int, int]]
    graph_connected: bool


@dataclass(frozen=True)
class BacktrackResult:
    status: str  # "cycle" | "none" | "timeout"
    cycle: list[int] | None
    nodes: int


@dataclass(frozen=True)
class PosaResult:
    """Outcome of the rotation heuristic; cycle is None on failure."""

    cycle: list[int] | None
    best_length: int  # vertices on the best path seen
    restarts_used: int
    steps: int

    @property
    def found(self) -> bool:
        return self.cycle is not None


# -- shared plumbing ------------------------------------------------------


def _neighbor_sets(graph: BlockedGraph, forced: ForcedEdgeSet) -> list[set[int]]:
    adj = [set(map(int, graph.neighbors(v))) for v in range(graph.n)]
    for a, b in forced.pairs:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _augmented_csr(graph: BlockedGraph,
                   forced: ForcedEdgeSet) -> tuple[np.ndarray, np.ndarray]:
    if not forced:
        return graph.indptr.astype(np.int64), graph.indices.astype(np.int32)
    adj = _neighbor_sets(graph, forced)
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    chunks = []
    for v in range(graph.n):
        row = np.array(sorted(adj[v]), dtype=np.int32)
        chunks.append(row)
        indptr[v + 1] = indptr[v] + len(row)
    indices = np.concatenate(chunks) if chunks else np.empty(0, np.int32)
    return indptr, indices


def _bitmask_adjacency(graph: BlockedGraph, forced: ForcedEdgeSet) -> np.ndarray:
    n = graph.n
    nbr = np.zeros(n, dtype=np.int64)
    for v in range(n):
        m = 0
        for w in graph.neighbors(v):
            m |= 1 << int(w)
        nbr[v] = m
    for a, b in forced.pairs:
        nbr[a] |= 1 << b
        nbr[b] |= 1 << a
    return nbr


def is_connected(graph: BlockedGraph) -> bool:
    n = graph.n
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        v = stack.pop()
        for w in graph.neighbors(v):
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(int(w))
    return count == n


def _walk_back(table: np.ndarray, nbr: np.ndarray, partner: np.ndarray,
               mask: int, end: int) -> list[int]:
    """Reconstruct one path realizing DP state (mask, end), returned
    start-to-end."""
    path = [end]
    while bin(mask).count("1") > 1:
        w = int(partner[end])
        if w >= 0 and mask == (1 << end) | (1 << w):
            path.append(w)
            break
        stepped = False
        pm = mask & ~(1 << end)
        c = int(table[pm]) & int(nbr[end])
        while c:
            lsb = c & -c
            c ^= lsb
            x = lsb.bit_length() - 1
            if w < 0 or w == x:
                path.append(x)
                mask, end = pm, x
                stepped = True
                break
        if stepped:
            continue
        pm2 = mask & ~(1 << end) & ~(1 << w)
        c = int(table[pm2]) & int(nbr[w])
        while c:
            lsb = c & -c
            c ^= lsb
            x = lsb.bit_length() - 1
            path.append(w)
            path.append(x)
            mask, end = pm2, x
            stepped = True
            break
        if not stepped:
            raise AssertionError("DP walk-back found no predecessor")
    return path[::-1]


# -- exact oracles --------------------------------------------------------


def held_karp_hamilton(graph: BlockedGraph) -> list[int] | None:
    """Hamilton cycle via subset DP, or None; exhaustive up to 22 vertices."""
    return hamilton_cycle_exact(graph, EMPTY_FORCED)


def hamilton_cycle_exact(graph: BlockedGraph,
                         forced: ForcedEdgeSet = EMPTY_FORCED) -> list[int] | None:
    """Exact Hamilton cycle through all forced pairs, or None."""
    n = graph.n
    if n > HELD_KARP_LIMIT:
        raise SizeLimitError(f"n={n} exceeds exact-solver limit {HELD_KARP_LIMIT}")
    if n < 3:
        return None
    nbr = _bitmask_adjacency(graph, forced)
    partner = forced.partner_array(n)
    table = _kernels.endpoint_table(nbr, partner, 0)
    full = (1 << n) - 1
    ends = int(table[full]) & int(nbr[0])
    if ends == 0:
        return None
    e = (ends & -ends).bit_length() - 1
    path = _walk_back(table, nbr, partner, full, e)
    if path[0] != 0:
        raise AssertionError("cycle reconstruction lost its start")
    return path


def backtrack_hamilton(graph: BlockedGraph,
                       forced: ForcedEdgeSet = EMPTY_FORCED,
                       node_budget: int = 1_000_000) -> BacktrackResult:
    """Depth-first exact search; timeout is an explicit result."""
    n = graph.n
    if n < 3:
        return BacktrackResult("none", None, 0)
    adj = _neighbor_sets(graph, forced)
    partner = forced.partner_array(n)
    path = [0]
    on = [False] * n
    on[0] = True
    nodes = 0
    start_partner = int(partner[0])

    def candidates(u: int, prev: int) -> list[int]:
        pu = int(partner[u])
        if pu >= 0 and pu != prev:
            return [pu]
        return sorted(adj[u])

    stack: list[list[int]] = []
    first = [start_partner] if start_partner >= 0 else sorted(adj[0])
    stack.append(first)
    while stack:
        nodes += 1
        if nodes > node_budget:
            return BacktrackResult("timeout", None, nodes)
        cands = stack[-1]
        if not cands:
            stack.pop()
            v = path.pop()
            if len(path) == 0:
                break
            on[v] = False
            continue
        w = cands.pop()
        if on[w]:
            continue
        u = path[-1]
        if w not in adj[u]:
            continue
        path.append(w)
        on[w] = True
        if len(path) == n:
            if 0 in adj[w]:
                pw = int(partner[w])
                if pw < 0 or pw == path[-2]:
                    return BacktrackResult("cycle", list(path), nodes)
            on[w] = False
            path.pop()
            continue
        stack.append(candidates(w, u))
    return BacktrackResult("none", None, nodes)


def longest_path_exact(graph: BlockedGraph,
                       forced: ForcedEdgeSet = EMPTY_FORCED) -> int:
    """Exact longest (admissible) path length, counted in edges."""
    length, _ = extract_longest_path(graph, forced)
    return length


def extract_longest_path(graph: BlockedGraph,
                         forced: ForcedEdgeSet = EMPTY_FORCED
                         ) -> tuple[int, list[int]]:
    """Exact longest path length plus one witness path."""
    n = graph.n
    if n > LONGEST_PATH_LIMIT:
        raise SizeLimitError(f"n={n} exceeds longest-path limit {LONGEST_PATH_LIMIT}")
    nbr = _bitmask_adjacency(graph, forced)
    partner = forced.partner_array(n)
    table = _kernels.endpoint_table(nbr, partner, -1)
    nz = np.flatnonzero(table)
    if len(nz) == 0:
        raise ValueError("no admissible path exists (isolated forced pair?)")
    popc = np.bitwise_count(nz.astype(np.uint64))
    best = int(nz[int(np.argmax(popc))])
    ends = int(table[best])
    e = (ends & -ends).bit_length() - 1
    path = _walk_back(table, nbr, partner, best, e)
    return len(path) - 1, path


# -- rotations -------------------------------------------------------------


def rotate_closure(graph: BlockedGraph, path: PathState | Sequence[int],
                   forced: ForcedEdgeSet = EMPTY_FORCED) -> RotationState:
    """Close the end set of a maximal path under admissible rotations.

    Breadth-first over newly discovered ends; each end keeps the pivot
    sequence that rebuilds its path.  A rotation is admissible when the
    path edge it removes is not a forced pair.
    """
    if not isinstance(path, PathState):
        path = PathState(tuple(path))
    adj = _neighbor_sets(graph, forced)
    seq = list(path.path)
    for a, b in zip(seq, seq[1:]):
        if b not in adj[a]:
            raise ValueError(f"path edge ({a},{b}) missing from working graph")
    on = set(seq)
    for endv in (seq[0], seq[-1]):
        if any(w not in on for w in adj[endv]):
            raise ValueError(f"path is extendable at {endv}; not maximal")
    if len(seq) < 3:
        return RotationState(path, forced, frozenset({seq[-1]}) - {seq[0]},
                             {seq[-1]: ()} if len(seq) > 1 else {},
                             {seq[-1]: seq[-2]} if len(seq) > 1 else {})

    pairset = set(forced.pairs)

    def is_forced(a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in pairset

    base = seq
    L = len(base)
    e0 = base[-1]
    witness: dict[int, tuple[int, ...]] = {e0: ()}
    anchor: dict[int, int] = {e0: base[-2]}
    queue = [e0]
    qi = 0
    while qi < len(queue):
        e = queue[qi]
        qi += 1
        work = list(base)
        for pivot in witness[e]:
            h = work.index(pivot)
            work[h + 1:] = reversed(work[h + 1:])
        wpos = {v: i for i, v in enumerate(work)}
        for v in adj[e]:
            h = wpos.get(v, -1)
            if h < 0 or h > L - 3:
                continue
            nxt = work[h + 1]
            if nxt in witness or is_forced(v, nxt):
                continue
            witness[nxt] = witness[e] + (v,)
            anchor[nxt] = work[h + 2]
            queue.append(nxt)
    end_set = frozenset(witness)
    return RotationState(path, forced, end_set, witness, anchor)


def booster_set(graph: BlockedGraph, rotation: RotationState) -> BoosterSet:
    """Pairs (x, y) with x in the end set and y an end reachable after
    re-rotating with x fixed; existing working edges are excluded."""
    forced = rotation.forced
    adj = _neighbor_sets(graph, forced)
    pairs: set[tuple[int, int]] = set()
    for x in sorted(rotation.end_set):
        p_x = rotation.path_to(x)
        rot_x = rotate_closure(graph, PathState(tuple(reversed(p_x))), forced)
        for y in rot_x.end_set:
            if y == x or y in adj[x]:
                continue
            pairs.add((min(x, y), max(x, y)))
    return BoosterSet(frozenset(pairs), is_connected(graph))


# -- the heuristic ----------------------------------------------------------


def posa_solve(graph: BlockedGraph, forced: ForcedEdgeSet = EMPTY_FORCED,
               restarts: int = 20, step_budget: int | None = None,
               seed: int = 0) -> PosaResult:
    """Rotation-extension Hamilton cycle search with restarts.

    Deterministic given the seed.  Any returned cycle has passed
    :func:`verify_cycle`; a failure reports the best path seen.
    """
    n = graph.n
    if n < 3:
        return PosaResult(None, n, 0, 0)
    if step_budget is None:
        step_budget = int(50 * n * max(1.0, math.log(n)))
    indptr, indices = _augmented_csr(graph, forced)
    partner = forced.partner_array(n)
    found, path, length, restarts_used, steps = _kernels.posa_kernel(
        indptr, indices, partner, n, restarts, step_budget,
        np.uint64(kernel_seed(seed)))
    if not found:
        return PosaResult(None, int(length), int(restarts_used), int(steps))
    cycle = [int(v) for v in path]
    if not verify_cycle(graph, cycle, forced):
        raise AssertionError("solver produced an invalid cycle")
    return PosaResult(cycle, n, int(restarts_used), int(steps))


def verify_cycle(graph: BlockedGraph, cycle: Sequence[int],
                 forced: ForcedEdgeSet = EMPTY_FORCED) -> bool:
    """True iff the sequence is a Hamilton cycle of graph+forced using
    every forced pair as a cycle edge."""
    n = graph.n
    if len(cycle) != n or n < 3:
        return False
    if set(cycle) != set(range(n)):
        return False
    pairset = set(forced.pairs)
    consecutive = set()
    for i in range(n):
        a, b = int(cycle[i]), int(cycle[(i + 1) % n])
        key = (min(a, b), max(a, b))
        consecutive.add(key)
        if not graph.has_edge(a, b) and key not in pairset:
            return False
    return pairset <= consecutive
