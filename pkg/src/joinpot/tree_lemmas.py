"""Executable checks of the boundary / max-complete-height inequalities on
subgraphs of the infinite binary tree.

Each ``check_*`` function returns a :class:`SweepResult` whose ``violations``
list holds counterexample graphs (empty when the inequality held everywhere).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph_core import (
    Ambient,
    EdgeIndex,
    PatternGraph,
    build_complete_binary_tree,
    level_vertices,
    subtree,
    subtree_plus,
    tree_children,
)
from .threshold import MaskDelta, theta_infinity


@dataclass
class SweepResult:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def note(self, graph: PatternGraph, **info) -> None:
        if len(self.violations) < 20:
            self.violations.append({"graph": graph.to_json(), **info})
        else:
            self.extra["truncated"] = self.extra.get("truncated", 0) + 1


class TreeMasks:
    """Per-vertex subtree masks over a tree window for fast max-complete height."""

    def __init__(self, idx: EdgeIndex):
        self.idx = idx
        inner = [v for v in idx.vertices if v[0] >= 1]
        inner.sort(key=lambda v: -v[0])
        self.levels = [v[0] for v in inner]
        self.sub = []
        for v in inner:
            m = 0
            for e in subtree(v).edges:
                t = idx.edge_pos.get(e)
                if t is None:
                    break
                m |= 1 << t
            else:
                self.sub.append(m)
                continue
            self.sub.append(-1)  # subtree leaves the window; never complete

    def max_complete_height(self, emask: int) -> int:
        for lvl, sm in zip(self.levels, self.sub):
            if sm >= 0 and sm & emask == sm:
                return lvl
        return 0


def tree_window(k: int, plus: bool = True) -> PatternGraph:
    """``T_k`` rooted at ``(k, 0)``, optionally with the edge above its root."""
    return subtree_plus((k, 0)) if plus else build_complete_binary_tree(k)


def _is_grounded_mask(idx: EdgeIndex, comp: int, leaf_vmask: int) -> bool:
    return bool(idx.vmask(comp) & leaf_vmask)


def check_partial(k: int = 3) -> SweepResult:
    """``3 * deficiency >= boundary`` under the infinite-tree weighting, all subsets of ``T_k``."""
    idx = EdgeIndex(build_complete_binary_tree(k))
    md = MaskDelta(idx, theta_infinity())
    res = SweepResult("partial")
    for m in idx.iter_all_masks():
        res.checked += 1
        if 3 * md.scaled(m) < md.den * idx.boundary_size(m):
            res.note(idx.graph(m), delta=str(md(m)), boundary=idx.boundary_size(m))
    return res


def check_boundary_and_height(k: int = 4, plus: bool = True) -> SweepResult:
    """Over every connected subgraph of the window:

    * ungrounded graphs satisfy ``2 * boundary >= |E| + 3``;
    * every graph satisfies ``2 ** (height + boundary) >= |E| + 1``.
    """
    window = tree_window(k, plus)
    idx = EdgeIndex(window)
    tm = TreeMasks(idx)
    leaves = idx.vertex_mask(v for v in idx.vertices if v[0] == 0)
    res = SweepResult("boundary_height")
    ung = 0
    for m in idx.iter_connected_masks():
        res.checked += 1
        b = idx.boundary_size(m)
        ne = bin(m).count("1")
        if not idx.vmask(m) & leaves:
            ung += 1
            if 2 * b < ne + 3:
                res.note(idx.graph(m), lemma="boundarylarge", boundary=b, edges=ne)
        lam = tm.max_complete_height(m)
        if (1 << (lam + b)) < ne + 1:
            res.note(idx.graph(m), lemma="height", boundary=b, height=lam, edges=ne)
    res.extra["ungrounded"] = ung
    return res


def check_height_equality(k: int = 4) -> SweepResult:
    """``height + boundary == log2(|E| + 1)`` exactly on every extended subtree in ``T_k``."""
    from .graph_core import boundary_size, max_complete_height

    res = SweepResult("height_equality")
    for level in range(0, k + 1):
        for x in level_vertices((k, 0), level):
            F = subtree_plus(x)
            res.checked += 1
            lam, b, ne = max_complete_height(F), boundary_size(F), len(F.edges)
            if (1 << (lam + b)) != ne + 1:
                res.note(F, height=lam, boundary=b, edges=ne)
    return res


def check_no_branch(k: int = 3) -> SweepResult:
    """For connected ``H`` and ``y`` whose subtree meets ``H`` but with no path
    in ``H`` from ``y`` down to a leaf: ``2 * boundary(H) >= |E(H) in T_y| + 1``."""
    idx = EdgeIndex(tree_window(k, True))
    res = SweepResult("no_branch")
    ys = [v for v in idx.vertices if v[0] >= 1 and v[0] <= k]
    sub = {}
    for y in ys:
        sub[y] = idx.mask(subtree(y))
    for m in idx.iter_connected_masks():
        F = None
        b = idx.boundary_size(m)
        vm = idx.vmask(m)
        for y in ys:
            if not vm >> idx.vertex_pos[y] & 1:
                continue
            inside = m & sub[y]
            if not inside:
                continue
            if F is None:
                F = idx.graph(m)
            if _reaches_leaf(F, y):
                continue
            res.checked += 1
            if 2 * b < bin(inside).count("1") + 1:
                res.note(F, y=list(y), boundary=b)
    return res


def _reaches_leaf(F: PatternGraph, y) -> bool:
    stack = [y]
    while stack:
        v = stack.pop()
        if v[0] == 0:
            return True
        for c in tree_children(v):
            if (c, v) in F.edges:
                stack.append(c)
    return False


# ---------------------------------------------------------------------------
# heap-indexed windows for large trees


class HeapTree:
    """Edge-presence array over ``T_k`` in heap order.

    Vertex ``(j, i)`` of ``T_k`` has heap index ``2 ** (k - j) + i``; the edge
    above a non-root vertex shares its heap index.
    """

    def __init__(self, k: int, present: Optional[np.ndarray] = None):
        self.k = k
        self.size = 1 << (k + 1)
        self.present = np.zeros(self.size, dtype=bool) if present is None else present

    @staticmethod
    def heap(k: int, v) -> int:
        j, i = v
        return (1 << (k - j)) + i

    def vertex(self, h: int):
        d = h.bit_length() - 1
        return (self.k - d, h - (1 << d))

    def edge_count(self) -> int:
        return int(self.present[2:].sum())

    def boundary_size(self) -> int:
        E = self.present
        n_inner = 1 << self.k
        up = E.copy()
        up[:2] = False
        down = np.zeros(self.size, dtype=np.int8)
        down[1:n_inner] = E[2:2 * n_inner:2].astype(np.int8) + E[3:2 * n_inner:2].astype(np.int8)
        deg = up.astype(np.int8) + down
        amb = np.full(self.size, 3, dtype=np.int8)
        amb[n_inner:] = 1
        in_f = deg > 0
        in_f[0] = False
        return int(np.count_nonzero(in_f & (deg < amb)))

    def add_subtree(self, h: int, with_up: bool) -> None:
        d = h.bit_length() - 1
        if with_up and h >= 2:
            self.present[h] = True
        lo, hi = h, h + 1
        while d < self.k:
            lo, hi = 2 * lo, 2 * hi
            d += 1
            self.present[lo:hi] = True

    def remove_subtree(self, h: int, with_up: bool) -> None:
        d = h.bit_length() - 1
        if with_up:
            self.present[h] = False
        lo, hi = h, h + 1
        while d < self.k:
            lo, hi = 2 * lo, 2 * hi
            d += 1
            self.present[lo:hi] = False

    def add_path(self, h: int, length: int, rng: random.Random) -> None:
        for _ in range(length):
            if h >= (1 << self.k):
                break
            h = 2 * h + rng.randrange(2)
            self.present[h] = True

    def empty_extended_subtrees(self, level: int) -> np.ndarray:
        """Heap indices ``z`` at ``level`` whose extended subtree avoids every edge."""
        d = self.k - level
        width = 1 << d
        hits = self.present[width:2 * width].astype(np.int64)
        for D in range(d + 1, self.k + 1):
            hits += self.present[1 << D:1 << (D + 1)].reshape(width, -1).sum(axis=1)
        return width + np.flatnonzero(hits == 0)

    def to_graph(self) -> PatternGraph:
        edges = []
        for h in np.flatnonzero(self.present):
            if h >= 2:
                c = self.vertex(int(h))
                edges.append((c, self.vertex(int(h) // 2)))
        return PatternGraph(Ambient.TINF, frozenset(edges))


def random_structured_heap(k: int, rng: random.Random) -> HeapTree:
    """Union of one to three pieces: subtrees, extended subtrees, short
    downward paths, and extended subtrees with an extended subtree removed."""
    t = HeapTree(k)
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(("tree", "tree+", "path", "holed"))
        d = rng.randint(1, k)
        h = (1 << d) + rng.randrange(1 << d)
        if kind == "tree":
            t.add_subtree(h, False)
        elif kind == "tree+":
            t.add_subtree(h, True)
        elif kind == "path":
            t.add_path(h, rng.randint(1, 2), rng)
        else:
            t.add_subtree(h, True)
            depth = rng.randint(1, k - d) if d < k else 0
            if depth:
                hole = (h << depth) + rng.randrange(1 << depth)
                t.remove_subtree(hole, True)
    return t


def check_empty_subtree(k: int, samples: int, seed: int, max_draws: int = 10**7) -> SweepResult:
    """Seeded structured samples of ``T_k`` with ``|E| <= 2^k - 1`` and
    ``boundary <= k / 6``; each must leave some extended subtree rooted at
    level ``k - boundary`` edge-free."""
    rng = random.Random(seed)
    res = SweepResult("empty_subtree")
    draws = 0
    by_boundary: dict[int, int] = {}
    while res.checked < samples:
        draws += 1
        if draws > max_draws:
            raise RuntimeError("structured generator rarely meets the hypotheses")
        t = random_structured_heap(k, rng)
        ne = t.edge_count()
        if ne == 0 or ne > (1 << k) - 1:
            continue
        b = t.boundary_size()
        if 6 * b > k:
            continue
        res.checked += 1
        by_boundary[b] = by_boundary.get(b, 0) + 1
        if not len(t.empty_extended_subtrees(k - b)):
            res.note(t.to_graph(), boundary=b, edges=ne)
    res.extra["draws"] = draws
    res.extra["by_boundary"] = by_boundary
    return res


def empty_subtree_witness(G: PatternGraph, x) -> Optional[tuple[int, int]]:
    """Reference search on a :class:`PatternGraph` (no heap arrays)."""
    from .graph_core import boundary_size

    b = boundary_size(G)
    for z in level_vertices(x, x[0] - b):
        if G.edges.isdisjoint(subtree_plus(z).edges):
            return z
    return None
