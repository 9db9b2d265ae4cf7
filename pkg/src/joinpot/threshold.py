"""Threshold weightings, exact deficiency, Markov-chain weightings, and the
random colored instance sampler with a backtracking subgraph solver."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .graph_core import (
    Ambient,
    EdgeIndex,
    Edge,
    PatternGraph,
    Vertex,
    CapExceeded,
    EXHAUSTIVE_EDGE_CAP,
    make_edge,
    restrict_away,
)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return Fraction(int(x[0]), int(x[1]))
    return Fraction(x)


class ThresholdWeighting:
    """Exact rational edge weights in ``[0, 2]``.

    Either a finite table (``table``) or a rule over an infinite ambient
    (``rule``); a table entry takes precedence over the rule.
    """

    def __init__(
        self,
        ambient: Ambient,
        table: Optional[Mapping[Edge, Fraction]] = None,
        rule: Optional[Callable[[Edge], Fraction]] = None,
        name: str = "custom",
    ):
        self.ambient = ambient
        self.table = {make_edge(ambient, *e): as_fraction(v) for e, v in (table or {}).items()}
        self.rule = rule
        self.name = name
        for e, v in self.table.items():
            if not 0 <= v <= 2:
                raise ValueError(f"weight {v} on {e} outside [0, 2]")

    def __call__(self, e: Edge) -> Fraction:
        e = make_edge(self.ambient, *e)
        v = self.table.get(e)
        if v is not None:
            return v
        if self.rule is None:
            raise KeyError(f"edge {e} is outside the weighting's domain")
        return self.rule(e)

    def restricted_to(self, G: PatternGraph) -> "ThresholdWeighting":
        return ThresholdWeighting(self.ambient, {e: self(e) for e in G.edges}, name=self.name)

    def to_json(self) -> dict:
        rows = []
        for e, v in sorted(self.table.items()):
            u, w = e
            pair = [list(u), list(w)] if self.ambient is Ambient.TINF else [u, w]
            rows.append({"edge": pair, "theta": [v.numerator, v.denominator]})
        return {"ambient": self.ambient.value, "weights": rows}

    @classmethod
    def from_json(cls, data: Mapping) -> "ThresholdWeighting":
        ambient = Ambient(data["ambient"])
        conv = tuple if ambient is Ambient.TINF else int
        table = {}
        for row in data["weights"]:
            u, w = row["edge"]
            table[(conv(u), conv(w))] = as_fraction(row["theta"])
        return cls(ambient, table, name="json")

    def __repr__(self) -> str:
        return f"ThresholdWeighting({self.name})"


def constant_theta(ambient: Ambient, value) -> ThresholdWeighting:
    v = as_fraction(value)
    if not 0 <= v <= 2:
        raise ValueError("constant weight outside [0, 2]")
    return ThresholdWeighting(ambient, rule=lambda e: v, name=f"const:{v}")


LEAF_WEIGHT = Fraction(4, 3)
INNER_WEIGHT = Fraction(2, 3)


def theta_infinity() -> ThresholdWeighting:
    """The infinite-tree weighting: 4/3 on edges touching a leaf, 2/3 elsewhere."""

    def rule(e: Edge) -> Fraction:
        return LEAF_WEIGHT if e[0][0] == 0 else INNER_WEIGHT

    return ThresholdWeighting(Ambient.TINF, rule=rule, name="tinf")


def parse_theta(spec: str, ambient: Ambient, graph: Optional[PatternGraph] = None) -> ThresholdWeighting:
    """``const:p/q``, ``tinf``, ``walk`` (uniform walk on ``graph``) or a JSON file."""
    spec = spec.strip()
    if spec.startswith("const:"):
        return constant_theta(ambient, spec[6:])
    if spec == "tinf":
        return theta_infinity()
    if spec == "walk":
        if graph is None:
            raise ValueError("walk weighting needs a finite graph")
        return theta_from_markov(uniform_walk(graph))
    with open(spec) as fh:
        return ThresholdWeighting.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# deficiency


def delta(F: PatternGraph, theta: ThresholdWeighting) -> Fraction:
    """``|V(F)| - sum of weights over E(F)``, exactly."""
    return len(F.vertices) - sum((theta(e) for e in F.edges), Fraction(0))


def delta_cond(F: PatternGraph, S: Iterable[Vertex], theta: ThresholdWeighting) -> Fraction:
    """Deficiency of the part of ``F`` whose components avoid ``S``."""
    return delta(restrict_away(F, S), theta)


class MaskDelta:
    """Deficiency over edge masks of an :class:`EdgeIndex`, in scaled integers.

    Every weight is stored as an integer multiple of ``1/den``; ``scaled``
    returns ``den`` times the deficiency so inner loops avoid Fractions.
    """

    def __init__(self, index: EdgeIndex, theta: ThresholdWeighting):
        self.index = index
        self.theta = theta
        weights = [theta(e) for e in index.edges]
        self.den = math.lcm(*(w.denominator for w in weights)) if weights else 1
        self.weight = [int(w * self.den) for w in weights]
        self._cache: dict[int, int] = {0: 0}

    def scaled(self, emask: int) -> int:
        hit = self._cache.get(emask)
        if hit is not None:
            return hit
        total = bin(self.index.vmask(emask)).count("1") * self.den
        m = emask
        w = self.weight
        while m:
            b = m & -m
            m ^= b
            total -= w[b.bit_length() - 1]
        self._cache[emask] = total
        return total

    def __call__(self, emask: int) -> Fraction:
        return Fraction(self.scaled(emask), self.den)

    def cond_scaled(self, emask: int, vmask: int) -> int:
        return self.scaled(self.index.restrict(emask, vmask))


# ---------------------------------------------------------------------------
# Markov chains


@dataclass
class MarkovChain:
    """Row-stochastic rational transition matrix supported on graph edges."""

    graph: PatternGraph
    rows: dict[Vertex, dict[Vertex, Fraction]]

    def __post_init__(self) -> None:
        adj = self.graph.adjacency
        for v in self.graph.vertices:
            row = self.rows.get(v, {})
            total = sum(row.values(), Fraction(0))
            if total != 1:
                raise ValueError(f"row of {v!r} sums to {total}, not 1")
            for w, p in row.items():
                if p < 0:
                    raise ValueError("negative transition probability")
                if p > 0 and w not in adj[v]:
                    raise ValueError(f"transition {v!r}->{w!r} is not along an edge")

    def p(self, v: Vertex, w: Vertex) -> Fraction:
        return self.rows.get(v, {}).get(w, Fraction(0))


def uniform_walk(G: PatternGraph) -> MarkovChain:
    adj = G.adjacency
    return MarkovChain(G, {v: {w: Fraction(1, len(adj[v])) for w in adj[v]} for v in G.vertices})


def theta_from_markov(M: MarkovChain) -> ThresholdWeighting:
    table = {e: M.p(e[0], e[1]) + M.p(e[1], e[0]) for e in M.graph.edges}
    return ThresholdWeighting(M.graph.ambient, table, name="markov")


def boundary_sum_delta(M: MarkovChain, F: PatternGraph) -> Fraction:
    """Total probability of leaving ``F`` along a step not in ``E(F)``.

    For a Markov-chain weighting this equals the deficiency of ``F``.
    """
    if not F.edges <= M.graph.edges:
        raise ValueError("F must be a subgraph of the chain's graph")
    total = Fraction(0)
    for v in F.vertices:
        for w, p in M.rows.get(v, {}).items():
            if make_edge(F.ambient, v, w) not in F.edges:
                total += p
    return total


def uniform_walk_tree_theta(k: int) -> ThresholdWeighting:
    from .graph_core import build_complete_binary_tree

    return theta_from_markov(uniform_walk(build_complete_binary_tree(k)))


# ---------------------------------------------------------------------------
# validation


@dataclass
class ThresholdReport:
    valid: bool
    total_delta: Fraction
    checked: int
    witness: Optional[PatternGraph] = None
    witness_delta: Optional[Fraction] = None

    def to_json(self) -> dict:
        out = {
            "valid": self.valid,
            "total_delta": str(self.total_delta),
            "checked": self.checked,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
            out["witness_delta"] = str(self.witness_delta)
        return out


def validate_threshold(G: PatternGraph, theta: ThresholdWeighting, cap: int = EXHAUSTIVE_EDGE_CAP) -> ThresholdReport:
    """Check nonnegative deficiency on every edge subset and zero on ``G``."""
    if len(G.edges) > cap:
        raise CapExceeded(f"{len(G.edges)} edges exceed the exhaustive cap {cap}")
    idx = EdgeIndex(G)
    md = MaskDelta(idx, theta)
    total = md(idx.full)
    checked = 0
    for m in range(1 << len(idx.edges)):
        checked += 1
        if md.scaled(m) < 0:
            return ThresholdReport(False, total, checked, idx.graph(m), md(m))
    if total != 0:
        return ThresholdReport(False, total, checked, G, total)
    return ThresholdReport(True, total, checked)


# ---------------------------------------------------------------------------
# random instances and the subgraph solver


@dataclass
class ColoredInstance:
    """Host graph on ``V(G) x [n]``.

    ``layers[e]`` is an ``n x n`` boolean matrix for the canonical edge
    ``e = (u, w)``: entry ``[i, j]`` means ``(u, i)`` is joined to ``(w, j)``.
    """

    pattern: PatternGraph
    n: int
    layers: dict[Edge, np.ndarray]
    seed: Optional[int] = None
    trial: Optional[int] = None

    def edge_count(self) -> int:
        return int(sum(int(m.sum()) for m in self.layers.values()))

    def to_json(self) -> dict:
        out = []
        for (u, w), mat in sorted(self.layers.items()):
            for i, j in zip(*np.nonzero(mat)):
                out.append([[_vjson(u), int(i)], [_vjson(w), int(j)]])
        return {"n": self.n, "pattern": self.pattern.to_json(), "edges": out, "seed": self.seed, "trial": self.trial}


def _vjson(v):
    return list(v) if isinstance(v, tuple) else v


def instance_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based stream for one trial: child ``trial`` of ``SeedSequence(seed)``."""
    child = np.random.SeedSequence(seed, spawn_key=(trial,))
    return np.random.Generator(np.random.Philox(child))


def sample_instance(G: PatternGraph, theta: ThresholdWeighting, n: int, seed: int, trial: int = 0) -> ColoredInstance:
    """Keep each potential colored edge independently with probability ``n ** -theta``."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = instance_rng(seed, trial)
    layers = {}
    for e in sorted(G.edges):
        p = float(n) ** (-float(theta(e)))
        layers[e] = rng.random((n, n)) < p
    return ColoredInstance(G, n, layers, seed, trial)


SOLVER_CAP = 10_000


def elimination_order(G: PatternGraph) -> list[Vertex]:
    """Start from a minimum-degree vertex, then greedily take the vertex with
    the most already-placed neighbours (ties: lower degree, then order)."""
    adj = G.adjacency
    remaining = set(G.vertices)
    order: list[Vertex] = []
    while remaining:
        placed = set(order)
        v = min(remaining, key=lambda x: (-len(adj[x] & placed), len(adj[x]), x))
        order.append(v)
        remaining.discard(v)
    return order


def solve_sub(inst: ColoredInstance) -> bool:
    """Does the host contain a properly colored copy of the pattern?"""
    G = inst.pattern
    if len(G.vertices) * inst.n > SOLVER_CAP:
        raise CapExceeded("instance exceeds the solver size cap")
    order = elimination_order(G)
    adj = G.adjacency
    pos = {v: t for t, v in enumerate(order)}
    # for each vertex, its earlier neighbours and the matrix row selector
    back: list[list[tuple[int, np.ndarray, bool]]] = []
    for v in order:
        links = []
        for w in adj[v]:
            if pos[w] < pos[v]:
                e = make_edge(G.ambient, v, w)
                links.append((pos[w], inst.layers[e], e[0] == w))
        back.append(links)
    choice = [0] * len(order)
    full = np.ones(inst.n, dtype=bool)

    def extend(t: int) -> bool:
        if t == len(order):
            return True
        cand = full
        for s, mat, w_first in back[t]:
            row = mat[choice[s], :] if w_first else mat[:, choice[s]]
            cand = cand & row
            if not cand.any():
                return False
        for i in np.flatnonzero(cand):
            choice[t] = int(i)
            if extend(t + 1):
                return True
        return False

    return extend(0)


def yes_rate(G: PatternGraph, theta: ThresholdWeighting, n: int, trials: int, seed: int) -> tuple[int, list[bool]]:
    outcomes = [solve_sub(sample_instance(G, theta, n, seed, t)) for t in range(trials)]
    return sum(outcomes), outcomes
