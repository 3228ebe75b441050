"""Multi-round edge exposures that factor a block-model graph into a base
graph plus independently sprinkled later rounds.

Three variants:

* ``two_stage``: base ~ G(n, p1, q1), then every non-edge appears with
  probability p_bar.  Marginal law of the final graph is G(n, p, q).
* ``three_stage``: crossing-only base at q1, block edges exposed only at
  vertices of base degree <= 1, then two crossing sprinkles at q_bar each.
* ``case3``: base ~ G(n, p1, q), then block non-edges appear with p_bar.

The reverse (deletion) form thins a finished graph back to the base law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BlockedGraph, ModelParams, _generate_with
from .rng import stream

__all__ = [
    "ExposureSchedule",
    "ExposedPair",
    "InfeasibleScheduleError",
    "schedule",
    "two_stage_generate",
    "three_stage_generate",
    "case3_generate",
    "generate_pair",
    "reverse_two_stage",
]

VARIANTS = ("two_stage", "three_stage", "case3")

_IDENTITY_TOL = 1e-12


class InfeasibleScheduleError(ValueError):
    """Raised when a stage probability would fall outside [0, 1]."""


@dataclass(frozen=True)
class ExposureSchedule:
    """Derived constants of one exposure coupling.

    Fields not used by the variant are None.  ``p1``/``q1`` are the
    stage-one probabilities, ``p_star``/``q_star`` the deletion
    probabilities of the reverse form.
    """

    variant: str
    params: ModelParams
    a: float
    p_bar: float | None
    q_bar: float | None
    p1: float
    q1: float
    p_star: float | None
    q_star: float | None


@dataclass(frozen=True)
class ExposedPair:
    """Base/middle/final graphs of one exposure run.

    ``added_edges`` maps round color (blue, yellow, red) to an (m, 2)
    edge array; the colors partition the final graph's edges.
    """

    base: BlockedGraph
    final: BlockedGraph
    middle: BlockedGraph | None
    added_edges: dict[str, np.ndarray]


def default_a(variant: str, n: int) -> float:
    """Sprinkle intensity: 1 for the two-stage forms, sqrt(log n) for the
    three-stage form (which needs it to grow, but slower than log n)."""
    if variant == "three_stage":
        return math.sqrt(math.log(n))
    return 1.0


def schedule(variant: str, params: ModelParams,
             a: float | None = None) -> ExposureSchedule:
    """Derive all coupling constants; raises if a stage probability is
    negative (the forward form needs p >= p_bar etc.)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = params.partition.n
    if a is None:
        a = default_a(variant, n)
    bar = a / (n * math.log(n))
    if not 0.0 <= bar < 1.0:
        raise InfeasibleScheduleError(f"sprinkle probability {bar} outside [0,1)")
    p, q = params.p, params.q

    if variant == "two_stage":
        p1 = 1.0 - (1.0 - p) / (1.0 - bar)
        q1 = 1.0 - (1.0 - q) / (1.0 - bar)
        if p1 < 0.0 or q1 < 0.0:
            raise InfeasibleScheduleError(
                f"p={p}, q={q} below sprinkle rate {bar}")
        p_star = bar * (1.0 - p) / ((1.0 - bar) * p) if p > 0 else 1.0
        q_star = bar * (1.0 - q) / ((1.0 - bar) * q) if q > 0 else 1.0
        sched = ExposureSchedule(variant, params, a, bar, None, p1, q1,
                                 p_star, q_star)
        _check(1.0 - (1.0 - p1) * (1.0 - bar), p)
        _check(1.0 - (1.0 - q1) * (1.0 - bar), q)
        if p > 0:
            _check(p * (1.0 - p_star), p1)
        if q > 0:
            _check(q * (1.0 - q_star), q1)
        return sched

    if variant == "three_stage":
        q1 = 1.0 - (1.0 - q) / (1.0 - bar) ** 2
        if q1 < 0.0:
            raise InfeasibleScheduleError(f"q={q} below two-round rate of {bar}")
        q_star = 1.0 - q1 / q if q > 0 else 1.0
        sched = ExposureSchedule(variant, params, a, None, bar, 0.0, q1,
                                 None, q_star)
        _check(1.0 - (1.0 - q1) * (1.0 - bar) ** 2, q)
        if q > 0:
            _check(q * (1.0 - q_star), q1)
        return sched

    # case3: block-edge sprinkle only, crossing edges all in the base
    p1 = 1.0 - (1.0 - p) / (1.0 - bar)
    if p1 < 0.0:
        raise InfeasibleScheduleError(f"p={p} below sprinkle rate {bar}")
    p_star = bar * (1.0 - p) / ((1.0 - bar) * p) if p > 0 else 1.0
    sched = ExposureSchedule(variant, params, a, bar, None, p1, q, p_star, 0.0)
    _check(1.0 - (1.0 - p1) * (1.0 - bar), p)
    if p > 0:
        _check(p * (1.0 - p_star), p1)
    return sched


def _check(lhs: float, rhs: float) -> None:
    if abs(lhs - rhs) > _IDENTITY_TOL:
        raise AssertionError(f"coupling identity violated: {lhs} != {rhs}")


# -- edge-set plumbing --------------------------------------------------


def _keys(edges: np.ndarray, n: int) -> np.ndarray:
    if len(edges) == 0:
        return np.empty(0, dtype=np.int64)
    return edges[:, 0].astype(np.int64) * n + edges[:, 1]


def _subtract(cand: np.ndarray, existing: np.ndarray, n: int) -> np.ndarray:
    """Candidate edges not already present; both arrays have u < v rows."""
    if len(cand) == 0:
        return cand.reshape(0, 2)
    mask = ~np.isin(_keys(cand, n), _keys(existing, n))
    return cand[mask]


def _union_graph(partition, *edge_arrays) -> BlockedGraph:
    parts = [np.asarray(e, dtype=np.int64) for e in edge_arrays if len(e)]
    if parts:
        allv = np.vstack(parts)
        us, vs = allv[:, 0], allv[:, 1]
        order = np.lexsort((vs, us))
        us, vs = us[order], vs[order]
    else:
        us = vs = np.empty(0, dtype=np.int64)
    return BlockedGraph._from_pair_arrays(partition, us, vs)


def _sample_all_pairs(rng, partition, p_block: float, p_cross: float) -> np.ndarray:
    g = _generate_with(rng, ModelParams(partition, p_block, p_cross))
    return g.edge_array()


# -- forward generators --------------------------------------------------


def two_stage_generate(sched: ExposureSchedule, seed: int) -> ExposedPair:
    """Base at (p1, q1), then one sprinkle of every non-edge at p_bar."""
    if sched.variant != "two_stage":
        raise ValueError("schedule is not two_stage")
    rng = stream(seed)
    part = sched.params.partition
    base = _generate_with(rng, ModelParams(part, sched.p1, sched.q1))
    blue = base.edge_array()
    cand = _sample_all_pairs(rng, part, sched.p_bar, sched.p_bar)
    red = _subtract(cand, blue, part.n)
    final = _union_graph(part, blue, red)
    return ExposedPair(base, final, None, {"blue": blue, "red": red})


def three_stage_generate(sched: ExposureSchedule, seed: int) -> ExposedPair:
    """Crossing base at q1 with block edges exposed at its weak vertices,
    then two crossing sprinkles at q_bar (yellow, then red)."""
    if sched.variant != "three_stage":
        raise ValueError("schedule is not three_stage")
    rng = stream(seed)
    params = sched.params
    part = params.partition
    n = part.n
    hat = _generate_with(rng, ModelParams(part, 0.0, sched.q1))

    # block pairs touching a degree<=1 vertex of the crossing-only graph,
    # deduplicated, each present independently with probability p
    weak = np.flatnonzero(hat.degrees <= 1)
    member = part.membership
    offs = part.offsets
    pair_set = set()
    for v in weak:
        b = member[v]
        off, size = offs[b], part.sizes[b]
        for u in range(off, off + size):
            if u != v:
                pair_set.add((u, int(v)) if u < v else (int(v), u))
    if pair_set:
        pairs = np.array(sorted(pair_set), dtype=np.int64)
        keep = rng.random(len(pairs)) < params.p
        block_edges = pairs[keep]
    else:
        block_edges = np.empty((0, 2), dtype=np.int64)

    hat_edges = hat.edge_array()
    base = _union_graph(part, hat_edges, block_edges)
    blue = base.edge_array()

    cand_y = _sample_all_pairs(rng, part, 0.0, sched.q_bar)
    yellow = _subtract(cand_y, blue, n)
    middle = _union_graph(part, blue, yellow)

    cand_r = _sample_all_pairs(rng, part, 0.0, sched.q_bar)
    red = _subtract(cand_r, middle.edge_array(), n)
    final = _union_graph(part, blue, yellow, red)
    return ExposedPair(base, final, middle,
                       {"blue": blue, "yellow": yellow, "red": red})


def case3_generate(sched: ExposureSchedule, seed: int) -> ExposedPair:
    """Base at (p1, q), then one sprinkle of block non-edges at p_bar."""
    if sched.variant != "case3":
        raise ValueError("schedule is not case3")
    rng = stream(seed)
    part = sched.params.partition
    base = _generate_with(rng, ModelParams(part, sched.p1, sched.params.q))
    blue = base.edge_array()
    cand = _sample_all_pairs(rng, part, sched.p_bar, 0.0)
    red = _subtract(cand, blue, part.n)
    final = _union_graph(part, blue, red)
    return ExposedPair(base, final, None, {"blue": blue, "red": red})


def generate_pair(sched: ExposureSchedule, seed: int) -> ExposedPair:
    """Dispatch to the generator matching the schedule's variant."""
    if sched.variant == "two_stage":
        return two_stage_generate(sched, seed)
    if sched.variant == "three_stage":
        return three_stage_generate(sched, seed)
    return case3_generate(sched, seed)


# -- reverse (deletion) form ----------------------------------------------


def reverse_two_stage(final_graph: BlockedGraph, sched: ExposureSchedule,
                      seed: int) -> ExposedPair:
    """Thin a finished graph: delete block edges with p_star and crossing
    edges with q_star.  The survivor is distributed as the base law.

    With p = 0 the deletion rate is undefined; block edges are then removed
    outright (they are off-support anyway).
    """
    if sched.variant == "three_stage":
        raise ValueError("reverse form is defined for the two-stage variants")
    rng = stream(seed)
    part = final_graph.partition
    edges = final_graph.edge_array()
    member = part.membership
    if len(edges):
        is_block = member[edges[:, 0]] == member[edges[:, 1]]
        u = rng.random(len(edges))
        drop = np.where(is_block, u < sched.p_star, u < sched.q_star)
    else:
        drop = np.empty(0, dtype=bool)
    kept = edges[~drop]
    removed = edges[drop]
    base = _union_graph(part, kept)
    return ExposedPair(base, final_graph, None, {"blue": kept, "red": removed})
