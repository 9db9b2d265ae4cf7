"""Finite pattern graphs inside the two infinite ambients.

The infinite binary tree has vertices ``(level, index)``; the parent of
``(j, i)`` is ``(j + 1, i // 2)`` and level 0 holds the leaves.  The infinite
path has integer vertices with edges ``(i, i + 1)``.  Edges are stored as
sorted vertex pairs, which for the tree puts the child first.

Structural functions (boundary size, max-complete height) are always measured
against the infinite ambient; finite windows only bound enumeration.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Union

Vertex = Union[int, tuple[int, int]]
Edge = tuple[Vertex, Vertex]

EXHAUSTIVE_EDGE_CAP = 24


class Ambient(str, Enum):
    TINF = "Tinf"
    PINF = "Pinf"


class CapExceeded(ValueError):
    """Raised when an exhaustive operation would exceed its configured cap."""


# ---------------------------------------------------------------------------
# ambient adjacency


def tree_parent(v: tuple[int, int]) -> tuple[int, int]:
    j, i = v
    return (j + 1, i // 2)


def tree_children(v: tuple[int, int]) -> list[tuple[int, int]]:
    j, i = v
    if j == 0:
        return []
    return [(j - 1, 2 * i), (j - 1, 2 * i + 1)]


def ambient_degree(ambient: Ambient, v: Vertex) -> int:
    if ambient is Ambient.PINF:
        return 2
    return 1 if v[0] == 0 else 3


def ambient_neighbors(ambient: Ambient, v: Vertex) -> list[Vertex]:
    if ambient is Ambient.PINF:
        return [v - 1, v + 1]
    return [tree_parent(v)] + tree_children(v)


def is_ambient_edge(ambient: Ambient, u: Vertex, v: Vertex) -> bool:
    if ambient is Ambient.PINF:
        return isinstance(u, int) and isinstance(v, int) and abs(u - v) == 1
    if not (isinstance(u, tuple) and isinstance(v, tuple)):
        return False
    if u[0] < 0 or v[0] < 0 or u[1] < 0 or v[1] < 0:
        return False
    return tree_parent(u) == v or tree_parent(v) == u


def make_edge(ambient: Ambient, u: Vertex, v: Vertex) -> Edge:
    """Canonical (sorted) form of an ambient edge; rejects non-edges."""
    if ambient is Ambient.TINF:
        u, v = tuple(u), tuple(v)
    if not is_ambient_edge(ambient, u, v):
        raise ValueError(f"{u!r}-{v!r} is not an edge of {ambient.value}")
    return (u, v) if u <= v else (v, u)


def tree_edge_above(v: tuple[int, int]) -> Edge:
    """The edge joining ``v`` to its parent."""
    return (tuple(v), tree_parent(v))


# ---------------------------------------------------------------------------
# pattern graphs


@dataclass(frozen=True)
class PatternGraph:
    """A finite subgraph of one of the infinite ambients.

    Vertices are the union of edge endpoints; ``isolated`` may add extra
    vertices only when ``allow_isolated`` is set.
    """

    ambient: Ambient
    edges: frozenset
    isolated: frozenset = field(default_factory=frozenset)
    allow_isolated: bool = False

    def __post_init__(self) -> None:
        canon = frozenset(make_edge(self.ambient, u, v) for u, v in self.edges)
        object.__setattr__(self, "edges", canon)
        iso = frozenset(tuple(v) if self.ambient is Ambient.TINF else v for v in self.isolated)
        if iso and not self.allow_isolated:
            raise ValueError("isolated vertices need allow_isolated=True")
        object.__setattr__(self, "isolated", iso)

    @classmethod
    def from_edges(cls, ambient: Ambient, edges: Iterable[Edge]) -> "PatternGraph":
        return cls(ambient, frozenset(edges))

    @cached_property
    def vertices(self) -> frozenset:
        vs = set(self.isolated)
        for u, v in self.edges:
            vs.add(u)
            vs.add(v)
        return frozenset(vs)

    @cached_property
    def adjacency(self) -> dict[Vertex, set[Vertex]]:
        adj: dict[Vertex, set[Vertex]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def __len__(self) -> int:
        return len(self.edges)

    def is_empty(self) -> bool:
        return not self.vertices

    def with_edges(self, edges: Iterable[Edge]) -> "PatternGraph":
        return PatternGraph(self.ambient, frozenset(edges))

    def union(self, other: "PatternGraph") -> "PatternGraph":
        return PatternGraph(
            self.ambient,
            self.edges | other.edges,
            self.isolated | other.isolated,
            self.allow_isolated or other.allow_isolated,
        )

    def issubgraph(self, other: "PatternGraph") -> bool:
        return self.edges <= other.edges and self.vertices <= other.vertices

    def components(self) -> list["PatternGraph"]:
        """Connected components, ordered by their smallest vertex."""
        seen: set[Vertex] = set()
        out = []
        for start in sorted(self.vertices):
            if start in seen:
                continue
            stack, comp = [start], {start}
            while stack:
                x = stack.pop()
                for y in self.adjacency[x]:
                    if y not in comp:
                        comp.add(y)
                        stack.append(y)
            seen |= comp
            edges = frozenset(e for e in self.edges if e[0] in comp)
            iso = frozenset(comp) if not edges else frozenset()
            out.append(PatternGraph(self.ambient, edges, iso, bool(iso)))
        return out

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def is_grounded(self) -> bool:
        """Connected and touching the leaf level of the tree ambient."""
        self._require_tree()
        return self.is_connected() and any(v[0] == 0 for v in self.vertices)

    def is_ungrounded(self) -> bool:
        self._require_tree()
        return self.is_connected() and all(v[0] > 0 for v in self.vertices)

    def _require_tree(self) -> None:
        if self.ambient is not Ambient.TINF:
            raise ValueError("operation is defined for subgraphs of the infinite tree")

    def to_json(self) -> dict:
        if self.ambient is Ambient.TINF:
            edges = [[list(u), list(v)] for u, v in sorted(self.edges)]
        else:
            edges = [[u, v] for u, v in sorted(self.edges)]
        out: dict = {"ambient": self.ambient.value, "edges": edges}
        if self.isolated:
            out["isolated"] = sorted(list(v) if isinstance(v, tuple) else v for v in self.isolated)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "PatternGraph":
        ambient = Ambient(data["ambient"])
        conv = (lambda x: tuple(x)) if ambient is Ambient.TINF else int
        edges = frozenset(make_edge(ambient, conv(u), conv(v)) for u, v in data["edges"])
        iso = frozenset(conv(v) for v in data.get("isolated", []))
        return cls(ambient, edges, iso, bool(iso))


def empty_graph(ambient: Ambient) -> PatternGraph:
    return PatternGraph(ambient, frozenset())


# ---------------------------------------------------------------------------
# builders


def build_path(k: int, start: int = 0) -> PatternGraph:
    """The path with vertices ``start .. start + k``."""
    if k < 1:
        raise ValueError("path length must be at least 1")
    return PatternGraph(Ambient.PINF, frozenset((i, i + 1) for i in range(start, start + k)))


def subtree(x: tuple[int, int]) -> PatternGraph:
    """The complete binary tree hanging below ``x`` (a bare vertex at level 0)."""
    x = tuple(x)
    edges = set()
    frontier = [x]
    while frontier:
        nxt = []
        for v in frontier:
            for c in tree_children(v):
                edges.add((c, v))
                nxt.append(c)
        frontier = nxt
    if not edges:
        return PatternGraph(Ambient.TINF, frozenset(), frozenset([x]), True)
    return PatternGraph(Ambient.TINF, frozenset(edges))


def subtree_plus(x: tuple[int, int]) -> PatternGraph:
    """``subtree(x)`` together with the edge from ``x`` to its parent."""
    x = tuple(x)
    base = subtree(x)
    return PatternGraph(Ambient.TINF, base.edges | {tree_edge_above(x)})


def build_complete_binary_tree(k: int) -> PatternGraph:
    """T_k rooted at ``(k, 0)``; its leaves are ``(0, 0) .. (0, 2^k - 1)``."""
    if k < 1:
        raise ValueError("tree height must be at least 1")
    return subtree((k, 0))


def level_vertices(x: tuple[int, int], level: int) -> list[tuple[int, int]]:
    """Vertices of ``subtree(x)`` on the given level."""
    k, i = x
    if not 0 <= level <= k:
        return []
    width = 1 << (k - level)
    return [(level, i * width + t) for t in range(width)]


def is_descendant(v: tuple[int, int], x: tuple[int, int]) -> bool:
    """True when ``v`` lies in ``subtree(x)`` (including ``v == x``)."""
    return v[0] <= x[0] and (v[1] >> (x[0] - v[0])) == x[1]


def parse_graph_spec(spec: str) -> PatternGraph:
    """Accept ``T:k``, ``P:k``, a JSON document, or a path to a JSON file."""
    spec = spec.strip()
    if spec[:2] in ("T:", "t:"):
        return build_complete_binary_tree(int(spec[2:]))
    if spec[:2] in ("P:", "p:"):
        return build_path(int(spec[2:]))
    if spec.startswith("{"):
        return PatternGraph.from_json(json.loads(spec))
    with open(spec) as fh:
        return PatternGraph.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# structural functions


def restrict_away(F: PatternGraph, S: Iterable[Vertex]) -> PatternGraph:
    """Union of the components of ``F`` that avoid every vertex of ``S``."""
    S = set(S)
    if not S:
        return F
    keep_edges, keep_iso = set(), set()
    for comp in F.components():
        if comp.vertices.isdisjoint(S):
            keep_edges |= comp.edges
            if not comp.edges:
                keep_iso |= comp.vertices
    return PatternGraph(F.ambient, frozenset(keep_edges), frozenset(keep_iso), bool(keep_iso))


def boundary_vertices(F: PatternGraph) -> frozenset:
    """Vertices of ``F`` incident to an ambient edge outside ``F``."""
    deg = {v: len(n) for v, n in F.adjacency.items()}
    return frozenset(v for v in F.vertices if deg[v] < ambient_degree(F.ambient, v))


def boundary_size(F: PatternGraph) -> int:
    return len(boundary_vertices(F))


def complete_vertices(F: PatternGraph) -> set[tuple[int, int]]:
    """Vertices ``x`` of ``F`` with ``subtree(x)`` contained in ``F``."""
    F._require_tree()
    full: set[tuple[int, int]] = set()
    for v in sorted(F.vertices):  # sorted puts lower levels first
        if v[0] == 0:
            full.add(v)
            continue
        kids = tree_children(v)
        if all(c in full and (c, v) in F.edges for c in kids):
            full.add(v)
    return full


def max_complete_height(F: PatternGraph) -> int:
    """Largest level of a vertex whose full subtree lies in ``F`` (0 if none)."""
    full = complete_vertices(F)
    return max((v[0] for v in full), default=0)


def longest_component_length(F: PatternGraph) -> int:
    """Edge count of the largest component of a path-ambient graph."""
    if F.ambient is not Ambient.PINF:
        raise ValueError("defined for subgraphs of the infinite path")
    return max((len(c.edges) for c in F.components()), default=0)


@dataclass(frozen=True)
class PathComponent:
    """A maximal piece of ``F`` whose interior avoids ``S``.

    ``left_in_s`` / ``right_in_s`` say whether each endpoint lies in ``S``.
    The bracket notation follows the convention that ``(`` or ``)`` marks an
    endpoint in ``S`` and ``[`` or ``]`` an endpoint outside it.
    """

    left: int
    right: int
    left_in_s: bool
    right_in_s: bool

    @property
    def length(self) -> int:
        return self.right - self.left

    @property
    def kind(self) -> str:
        ends = self.left_in_s + self.right_in_s
        return ("closed", "half-open", "open")[ends]

    @property
    def vertex_set(self) -> frozenset[int]:
        lo = self.left + 1 if self.left_in_s else self.left
        hi = self.right - 1 if self.right_in_s else self.right
        return frozenset(range(lo, hi + 1))

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset((i, i + 1) for i in range(self.left, self.right))

    def notation(self) -> str:
        lb = "(" if self.left_in_s else "["
        rb = ")" if self.right_in_s else "]"
        return f"{lb}{self.left},{self.right}{rb}"


def decompose_components(F: PatternGraph, S: Iterable[int]) -> list[PathComponent]:
    """Split each path component of ``F`` at the vertices of ``S``."""
    if F.ambient is not Ambient.PINF:
        raise ValueError("defined for subgraphs of the infinite path")
    S = set(S)
    out = []
    for comp in F.components():
        if not comp.edges:
            continue
        lo = min(comp.vertices)
        hi = max(comp.vertices)
        cuts = [lo] + [v for v in range(lo + 1, hi) if v in S] + [hi]
        for a, b in zip(cuts, cuts[1:]):
            out.append(PathComponent(a, b, a in S, b in S))
    out.sort(key=lambda c: c.left)
    return out


# ---------------------------------------------------------------------------
# tree-depth


class TreeDepthCapError(CapExceeded):
    pass


def _adjacency_masks(graph: PatternGraph | Mapping) -> tuple[list, list[int]]:
    if isinstance(graph, PatternGraph):
        adj = graph.adjacency
    else:
        adj = {v: set(ns) for v, ns in graph.items()}
        for v, ns in list(adj.items()):
            for w in ns:
                adj.setdefault(w, set()).add(v)
    verts = sorted(adj, key=repr)
    index = {v: t for t, v in enumerate(verts)}
    masks = [0] * len(verts)
    for v, ns in adj.items():
        for w in ns:
            if w != v:
                masks[index[v]] |= 1 << index[w]
    return verts, masks


def _mask_components(mask: int, nbr: list[int]) -> list[int]:
    comps = []
    rest = mask
    while rest:
        low = rest & -rest
        comp = low
        frontier = low
        while frontier:
            b = frontier & -frontier
            frontier ^= b
            new = nbr[b.bit_length() - 1] & mask & ~comp
            comp |= new
            frontier |= new
        comps.append(comp)
        rest &= ~comp
    return comps


def _bfs_far(start: int, mask: int, nbr: list[int]) -> tuple[int, int]:
    """Farthest vertex from ``start`` inside ``mask`` and its distance."""
    seen = 1 << start
    frontier = seen
    dist, last = 0, start
    while True:
        nxt = 0
        f = frontier
        while f:
            b = f & -f
            f ^= b
            nxt |= nbr[b.bit_length() - 1]
        nxt &= mask & ~seen
        if not nxt:
            return last, dist
        seen |= nxt
        frontier = nxt
        dist += 1
        last = (nxt & -nxt).bit_length() - 1


def _depth_lower_bound(comp: int, nbr: list[int]) -> int:
    # a shortest path on d + 1 vertices forces depth ceil(log2(d + 2)) - 1
    start = (comp & -comp).bit_length() - 1
    far, _ = _bfs_far(start, comp, nbr)
    _, d = _bfs_far(far, comp, nbr)
    return math.ceil(math.log2(d + 2)) - 1


def tree_depth(graph: PatternGraph | Mapping, cap: int = 25) -> int:
    """Tree-depth in the edge-height convention.

    A single vertex has depth 0 and a single edge depth 1, so the complete
    binary tree of height k has depth k.  The common vertex-count convention
    is this value plus one for any graph with at least one vertex.
    """
    verts, nbr = _adjacency_masks(graph)
    if len(verts) > cap:
        raise TreeDepthCapError(f"{len(verts)} vertices exceed the tree-depth cap {cap}")
    memo: dict[int, int] = {}

    def connected(comp: int) -> int:
        if comp & (comp - 1) == 0:
            return 0
        hit = memo.get(comp)
        if hit is not None:
            return hit
        lower = _depth_lower_bound(comp, nbr)
        best = bin(comp).count("1") - 1
        # try high-degree vertices first; they tend to split the graph
        order = sorted(
            (t for t in range(len(nbr)) if comp >> t & 1),
            key=lambda t: -bin(nbr[t] & comp).count("1"),
        )
        for t in order:
            if best <= lower:
                break
            rest = comp & ~(1 << t)
            parts = _mask_components(rest, nbr)
            if 1 + max(_depth_lower_bound(p, nbr) for p in parts) >= best:
                continue
            val = 0
            for p in parts:
                val = max(val, connected(p))
                if 1 + val >= best:
                    break
            best = min(best, 1 + val)
        memo[comp] = best
        return best

    full = (1 << len(verts)) - 1
    return max((connected(c) for c in _mask_components(full, nbr)), default=0)


def tree_depth_bruteforce(graph: PatternGraph | Mapping) -> int:
    """Plain vertex-removal recursion without memoisation or pruning."""
    verts, nbr = _adjacency_masks(graph)

    def depth(mask: int) -> int:
        best = 0
        for comp in _mask_components(mask, nbr):
            if comp & (comp - 1) == 0:
                continue
            cand = min(
                1 + depth(comp & ~(1 << t)) for t in range(len(verts)) if comp >> t & 1
            )
            best = max(best, cand)
        return best

    return depth((1 << len(verts)) - 1)


# ---------------------------------------------------------------------------
# bitmask index over a finite window


class EdgeIndex:
    """Bit positions for the edges and vertices of a finite window.

    Sweeps and the potential engine work on integer masks over this index;
    ``graph`` / ``mask`` convert between masks and :class:`PatternGraph`.
    """

    def __init__(self, window: PatternGraph, extra_edges: Iterable[Edge] = ()):
        self.ambient = window.ambient
        edges = sorted(window.edges | {make_edge(self.ambient, u, v) for u, v in extra_edges})
        self.edges: list[Edge] = edges
        verts = sorted({v for e in edges for v in e})
        self.vertices: list[Vertex] = verts
        self.edge_pos = {e: t for t, e in enumerate(edges)}
        self.vertex_pos = {v: t for t, v in enumerate(verts)}
        self.edge_vmask = [(1 << self.vertex_pos[u]) | (1 << self.vertex_pos[v]) for u, v in edges]
        self.incident = [0] * len(verts)
        for t, (u, v) in enumerate(edges):
            self.incident[self.vertex_pos[u]] |= 1 << t
            self.incident[self.vertex_pos[v]] |= 1 << t
        self.line_adj = [0] * len(edges)
        for t, (u, v) in enumerate(edges):
            self.line_adj[t] = (self.incident[self.vertex_pos[u]] | self.incident[self.vertex_pos[v]]) & ~(1 << t)
        self.full = (1 << len(edges)) - 1
        # vertices whose ambient degree exceeds their degree inside the window
        self.open_vertices = 0
        for t, v in enumerate(verts):
            if bin(self.incident[t]).count("1") < ambient_degree(self.ambient, v):
                self.open_vertices |= 1 << t
        self._vmask_cache: dict[int, int] = {}
        self._comp_cache: dict[int, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self.edges)

    def mask(self, F: PatternGraph | Iterable[Edge]) -> int:
        edges = F.edges if isinstance(F, PatternGraph) else F
        out = 0
        for e in edges:
            out |= 1 << self.edge_pos[make_edge(self.ambient, *e)]
        return out

    def graph(self, emask: int) -> PatternGraph:
        return PatternGraph(self.ambient, frozenset(self.iter_edges(emask)))

    def iter_edges(self, emask: int) -> Iterator[Edge]:
        while emask:
            b = emask & -emask
            emask ^= b
            yield self.edges[b.bit_length() - 1]

    def vertex_mask(self, vertices: Iterable[Vertex]) -> int:
        out = 0
        for v in vertices:
            t = self.vertex_pos.get(v)
            if t is not None:
                out |= 1 << t
        return out

    def vertex_set(self, vmask: int) -> frozenset:
        return frozenset(self.vertices[t] for t in range(len(self.vertices)) if vmask >> t & 1)

    def vmask(self, emask: int) -> int:
        hit = self._vmask_cache.get(emask)
        if hit is not None:
            return hit
        out = 0
        m = emask
        ev = self.edge_vmask
        while m:
            b = m & -m
            m ^= b
            out |= ev[b.bit_length() - 1]
        self._vmask_cache[emask] = out
        return out

    def components(self, emask: int) -> tuple[int, ...]:
        hit = self._comp_cache.get(emask)
        if hit is not None:
            return hit
        comps = []
        rest = emask
        adj = self.line_adj
        while rest:
            low = rest & -rest
            comp = low
            frontier = low
            while frontier:
                b = frontier & -frontier
                frontier ^= b
                new = adj[b.bit_length() - 1] & rest & ~comp
                comp |= new
                frontier |= new
            comps.append(comp)
            rest &= ~comp
        out = tuple(comps)
        self._comp_cache[emask] = out
        return out

    def restrict(self, emask: int, vmask: int) -> int:
        """Edge mask of the components of ``emask`` avoiding ``vmask``."""
        if not vmask or not emask:
            return emask
        if not self.vmask(emask) & vmask:
            return emask
        out = 0
        for comp in self.components(emask):
            if not self.vmask(comp) & vmask:
                out |= comp
        return out

    def is_connected(self, emask: int) -> bool:
        return len(self.components(emask)) == 1

    def boundary_size(self, emask: int) -> int:
        """Boundary size against the infinite ambient."""
        vm = self.vmask(emask)
        count = 0
        m = vm
        while m:
            b = m & -m
            m ^= b
            t = b.bit_length() - 1
            if b & self.open_vertices or self.incident[t] & ~emask:
                count += 1
        return count

    def iter_all_masks(self) -> Iterator[int]:
        if len(self.edges) > EXHAUSTIVE_EDGE_CAP:
            raise CapExceeded(f"{len(self.edges)} edges exceed the exhaustive cap {EXHAUSTIVE_EDGE_CAP}")
        return iter(range(1 << len(self.edges)))

    def iter_connected_masks(self) -> Iterator[int]:
        """Every nonempty connected edge subset, each exactly once."""
        adj = self.line_adj

        def extend(sub: int, closed: int, ext: int, above: int) -> Iterator[int]:
            yield sub
            while ext:
                w = ext & -ext
                ext ^= w
                nw = adj[w.bit_length() - 1]
                excl = nw & ~closed & above
                yield from extend(sub | w, closed | nw, ext | excl, above)

        for e in range(len(self.edges)):
            above = ~((1 << (e + 1)) - 1)
            start = 1 << e
            yield from extend(start, start | adj[e], adj[e] & above, above)


SubgraphFilter = Union[str, Callable[[PatternGraph], bool], None]


def _filter_predicate(flt: SubgraphFilter) -> Callable[[PatternGraph], bool]:
    if flt is None or flt == "all":
        return lambda F: True
    if callable(flt):
        return flt
    table = {
        "connected": lambda F: bool(F.edges) and F.is_connected(),
        "grounded": lambda F: bool(F.edges) and F.is_grounded(),
        "ungrounded": lambda F: bool(F.edges) and F.is_ungrounded(),
        "nonempty": lambda F: bool(F.edges),
    }
    try:
        return table[flt]
    except KeyError:
        raise ValueError(f"unknown subgraph filter {flt!r}") from None


def enumerate_subgraphs(
    window: PatternGraph,
    flt: SubgraphFilter = None,
    cap: int = EXHAUSTIVE_EDGE_CAP,
    *,
    samples: int | None = None,
    seed: int = 0,
    structured: bool = False,
) -> Iterator[PatternGraph]:
    """Stream subgraphs of a finite window.

    Without ``samples`` this is exhaustive over all edge subsets (refused when
    the window has more than ``cap`` edges).  With ``samples`` it yields that
    many seeded draws: uniform edge subsets, or for tree windows with
    ``structured=True`` unions of random subtrees, extended subtrees and
    downward path fragments.  The filter is applied in both modes; sampled
    mode keeps drawing until ``samples`` graphs pass it.
    """
    pred = _filter_predicate(flt)
    if samples is None:
        if len(window.edges) > cap:
            raise CapExceeded(f"{len(window.edges)} edges exceed the exhaustive cap {cap}")
        idx = EdgeIndex(window)
        connected_only = flt in ("connected", "grounded", "ungrounded")
        masks = idx.iter_connected_masks() if connected_only else range(1 << len(idx.edges))
        for m in masks:
            F = idx.graph(m)
            if pred(F):
                yield F
        return
    rng = random.Random(seed)
    edges = sorted(window.edges)
    produced = 0
    while produced < samples:
        if structured:
            F = random_structured_subgraph(window, rng)
        else:
            F = window.with_edges(e for e in edges if rng.random() < 0.5)
        if pred(F):
            produced += 1
            yield F


def random_structured_subgraph(window: PatternGraph, rng: random.Random, max_pieces: int = 3) -> PatternGraph:
    """Union of a few random subtrees, extended subtrees and path fragments."""
    window._require_tree()
    top = max(v[0] for v in window.vertices)
    root = max(window.vertices)
    edges: set[Edge] = set()
    for _ in range(rng.randint(1, max_pieces)):
        level = rng.randint(1, top)
        x = level_vertices(root, level)[rng.randrange(1 << (top - level))]
        kind = rng.choice(("tree", "tree+", "path"))
        if kind == "tree":
            edges |= subtree(x).edges
        elif kind == "tree+" and x != root:
            edges |= subtree_plus(x).edges
        else:
            v = x
            for _ in range(rng.randint(1, level)):
                c = rng.choice(tree_children(v))
                edges.add((c, v))
                v = c
    return PatternGraph(Ambient.TINF, frozenset(edges))
