"""Join-trees: rooted binary trees whose leaves carry an edge label or a blank.

Nodes are hash-consed, so structurally equal trees are the same object and
can key memo tables directly.  Child order is significant.
"""

from __future__ import annotations

import random
import re
from typing import Iterable, Iterator, Optional

from .graph_core import (
    Ambient,
    CapExceeded,
    Edge,
    PatternGraph,
    Vertex,
    make_edge,
    restrict_away,
    tree_children,
)


class JoinTree:
    """Immutable node.  Build with :func:`atom`, :func:`join` or :data:`EMPTY`."""

    __slots__ = ("kind", "label", "left", "right", "ambient", "edges", "vertices", "size", "_hash", "__weakref__")

    _table: dict = {}

    def __init__(self, *a, **kw):
        raise TypeError("use atom(), join() or EMPTY")

    @classmethod
    def _make(cls, kind, label, left, right, ambient):
        key = (kind, label, left, right, ambient)
        hit = cls._table.get(key)
        if hit is not None:
            return hit
        node = object.__new__(cls)
        node.kind = kind
        node.label = label
        node.left = left
        node.right = right
        node.ambient = ambient
        if kind == "join":
            node.edges = left.edges | right.edges
            node.vertices = left.vertices | right.vertices
            node.size = left.size + right.size + 1
        elif kind == "atom" and label is not None:
            node.edges = frozenset([label])
            node.vertices = frozenset(label)
            node.size = 1
        else:
            node.edges = frozenset()
            node.vertices = frozenset()
            node.size = 1 if kind == "atom" else 0
        node._hash = hash(key)
        cls._table[key] = node
        return node

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __reduce__(self):
        return (parse_sexp, (to_sexp(self), self.ambient))

    @property
    def is_leaf(self) -> bool:
        return self.kind == "atom"

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def graph(self) -> PatternGraph:
        amb = self.ambient or Ambient.PINF
        return PatternGraph(amb, self.edges)

    @property
    def interval(self) -> tuple[int, int]:
        """``(min, max)`` vertex of the graph; meaningful for path-ambient trees."""
        return (min(self.vertices), max(self.vertices))

    def children(self) -> tuple["JoinTree", ...]:
        return (self.left, self.right) if self.kind == "join" else ()

    def leaves(self) -> list["JoinTree"]:
        out, stack = [], [self]
        while stack:
            n = stack.pop()
            if n.kind == "join":
                stack.append(n.right)
                stack.append(n.left)
            elif n.kind == "atom":
                out.append(n)
        return out

    def labels(self) -> list[Optional[Edge]]:
        return [leaf.label for leaf in self.leaves()]

    def depth(self) -> int:
        if self.kind != "join":
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def __repr__(self) -> str:
        return to_sexp(self)


EMPTY = JoinTree._make("empty", None, None, None, None)


def atom(label: Optional[Edge] = None, ambient: Ambient = Ambient.PINF) -> JoinTree:
    """A leaf carrying ``label``, or a blank leaf when ``label`` is None."""
    if label is None:
        return JoinTree._make("atom", None, None, None, ambient)
    return JoinTree._make("atom", make_edge(ambient, *label), None, None, ambient)


def join(B: JoinTree, C: JoinTree) -> JoinTree:
    if B.is_empty or C.is_empty:
        raise ValueError("cannot join the empty join-tree")
    amb = B.ambient if B.ambient is not None else C.ambient
    return JoinTree._make("join", None, B, C, amb)


def relabel(A: JoinTree, keep: frozenset) -> JoinTree:
    """Same shape, with labels outside ``keep`` replaced by blanks."""
    if A.kind == "join":
        return join(relabel(A.left, keep), relabel(A.right, keep))
    if A.kind == "atom" and A.label is not None and A.label not in keep:
        return atom(None, A.ambient)
    return A


def restrict_jointree(A: JoinTree, S: Iterable[Vertex]) -> JoinTree:
    """Blank every label whose component in the graph of ``A`` meets ``S``."""
    keep = restrict_away(A.graph(), S).edges
    return relabel(A, keep)


def sub_join_trees(A: JoinTree, proper: bool = False) -> Iterator[JoinTree]:
    """The empty tree followed by every node of ``A`` in preorder, by position.

    With ``proper`` the root itself is skipped.
    """
    yield EMPTY
    if A.is_empty:
        return
    stack = [A]
    first = True
    while stack:
        n = stack.pop()
        if not (proper and first):
            yield n
        first = False
        if n.kind == "join":
            stack.append(n.right)
            stack.append(n.left)


def descendants(A: JoinTree) -> Iterator[JoinTree]:
    """Every node of ``A`` (including ``A``) in preorder."""
    stack = [A]
    while stack:
        n = stack.pop()
        yield n
        if n.kind == "join":
            stack.append(n.right)
            stack.append(n.left)


def unique_nodes(A: JoinTree) -> list[JoinTree]:
    """Distinct nodes of ``A`` with children before parents.

    Shared subtrees appear once, so this stays small for trees such as the
    maximally overlapping family whose positional size is exponential.
    """
    seen: set[int] = set()
    out: list[JoinTree] = []
    stack = [(A, False)]
    while stack:
        n, expanded = stack.pop()
        if expanded:
            out.append(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.append((n, True))
        if n.kind == "join":
            stack.append((n.right, False))
            stack.append((n.left, False))
    return out


def is_connected_jointree(A: JoinTree) -> bool:
    """Every nonempty node has a connected graph."""
    for n in unique_nodes(A):
        if n.edges and not n.graph().is_connected():
            return False
    return True


def is_minimal(A: JoinTree, F: Optional[PatternGraph] = None) -> bool:
    """Each edge labels exactly one leaf and there are no blanks."""
    labels = A.labels()
    if any(l is None for l in labels) or len(set(labels)) != len(labels):
        return False
    return F is None or set(labels) == set(F.edges)


# ---------------------------------------------------------------------------
# s-expressions


def _vtext(v) -> str:
    return f"{v[0]}:{v[1]}" if isinstance(v, tuple) else str(v)


def to_sexp(A: JoinTree) -> str:
    if A.kind == "empty":
        return "(empty)"
    if A.kind == "atom":
        if A.label is None:
            return "(atom)"
        return f"(atom {_vtext(A.label[0])} {_vtext(A.label[1])})"
    return f"(join {to_sexp(A.left)} {to_sexp(A.right)})"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_sexp(text: str, ambient: Optional[Ambient] = None) -> JoinTree:
    """Inverse of :func:`to_sexp`.  Tree vertices are written ``level:index``."""
    tokens = _TOKEN.findall(text)
    if ambient is None:
        ambient = Ambient.TINF if any(":" in t for t in tokens) else Ambient.PINF
    pos = 0

    def vertex(tok: str):
        if ambient is Ambient.TINF:
            j, i = tok.split(":")
            return (int(j), int(i))
        return int(tok)

    def node() -> JoinTree:
        nonlocal pos
        if tokens[pos] != "(":
            raise ValueError(f"expected '(' at token {pos}")
        head = tokens[pos + 1]
        pos += 2
        if head == "empty":
            out = EMPTY
        elif head == "atom":
            if tokens[pos] == ")":
                out = atom(None, ambient)
            else:
                out = atom((vertex(tokens[pos]), vertex(tokens[pos + 1])), ambient)
                pos += 2
        elif head == "join":
            left = node()
            right = node()
            out = join(left, right)
        else:
            raise ValueError(f"unknown head {head!r}")
        if tokens[pos] != ")":
            raise ValueError(f"expected ')' at token {pos}")
        pos += 1
        return out

    out = node()
    if pos != len(tokens):
        raise ValueError("trailing tokens after join-tree")
    return out


# ---------------------------------------------------------------------------
# canonical trees


def _path_atom(i: int) -> JoinTree:
    return atom((i, i + 1), Ambient.PINF)


def canonical_rd(k: int, lo: int = 0) -> JoinTree:
    """Recursive doubling over the path ``lo .. lo + k``: split at the midpoint."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return _path_atom(lo)
    h = (k + 1) // 2
    return join(canonical_rd(h, lo), canonical_rd(k - h, lo + h))


def canonical_mo(k: int, lo: int = 0) -> JoinTree:
    """Maximally overlapping joins: children cover ``[lo, lo+k-1]`` and ``[lo+1, lo+k]``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    memo: dict[tuple[int, int], JoinTree] = {}

    def build(a: int, length: int) -> JoinTree:
        key = (a, length)
        hit = memo.get(key)
        if hit is None:
            if length == 1:
                hit = _path_atom(a)
            else:
                hit = join(build(a, length - 1), build(a + 1, length - 1))
            memo[key] = hit
        return hit

    return build(lo, k)


def fib(i: int) -> int:
    """Fibonacci numbers with ``fib(1) = fib(2) = 1``."""
    a, b = 0, 1
    for _ in range(i):
        a, b = b, a + b
    return a


def fib_index(k: int) -> int:
    """Least ``l >= 2`` with ``fib(l) >= k``."""
    l = 2
    while fib(l) < k:
        l += 1
    return l


def fo_split(k: int) -> int:
    """Length of each child of the Fibonacci tree over a path of length ``k``."""
    return min(fib(fib_index(k) - 1), k - 1)


def canonical_fo(k: int, lo: int = 0) -> JoinTree:
    """Fibonacci overlapping joins: children cover ``[lo, lo+L]`` and ``[lo+k-L, lo+k]``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    memo: dict[tuple[int, int], JoinTree] = {}

    def build(a: int, length: int) -> JoinTree:
        key = (a, length)
        hit = memo.get(key)
        if hit is None:
            if length == 1:
                hit = _path_atom(a)
            else:
                L = fo_split(length)
                hit = join(build(a, L), build(a + length - L, L))
            memo[key] = hit
        return hit

    return build(lo, k)


def canonical_tk(k: int) -> JoinTree:
    """Balanced join-tree over ``T_k``: at each vertex, pair each child edge
    with the tree below that child, then join the two sides."""
    if k < 1:
        raise ValueError("k must be at least 1")

    def build(x) -> Optional[JoinTree]:
        if x[0] == 0:
            return None
        sides = []
        for c in tree_children(x):
            e = atom((c, x), Ambient.TINF)
            below = build(c)
            sides.append(e if below is None else join(e, below))
        return join(sides[0], sides[1])

    return build((k, 0))


def parse_tree_spec(spec: str) -> JoinTree:
    """``rd:k``, ``mo:k``, ``fo:k``, ``tk:k``, an s-expression, or a file."""
    spec = spec.strip()
    builders = {"rd": canonical_rd, "mo": canonical_mo, "fo": canonical_fo, "tk": canonical_tk}
    head, _, arg = spec.partition(":")
    if head in builders and arg.isdigit():
        return builders[head](int(arg))
    if spec.startswith("("):
        return parse_sexp(spec)
    with open(spec) as fh:
        return parse_sexp(fh.read())


# ---------------------------------------------------------------------------
# enumeration


MINIMAL_EDGE_CAP = 7


def double_factorial_count(q: int) -> int:
    """Number of unordered rooted binary trees with ``q`` labelled leaves."""
    out = 1
    for t in range(3, 2 * q - 2, 2):
        out *= t
    return out


def _insert_everywhere(A: JoinTree, new: JoinTree) -> Iterator[JoinTree]:
    yield join(A, new)
    if A.kind == "join":
        for L in _insert_everywhere(A.left, new):
            yield join(L, A.right)
        for R in _insert_everywhere(A.right, new):
            yield join(A.left, R)


def _orderings(A: JoinTree) -> Iterator[JoinTree]:
    if A.kind != "join":
        yield A
        return
    for L in _orderings(A.left):
        for R in _orderings(A.right):
            yield join(L, R)
            yield join(R, L)


def enumerate_minimal_jointrees(
    F: PatternGraph, cap: int = MINIMAL_EDGE_CAP, ordered: bool = False
) -> Iterator[JoinTree]:
    """Every join-tree using each edge of ``F`` exactly once.

    By default sibling order is ignored, giving ``(2q-3)!!`` trees for ``q``
    edges.  With ``ordered`` every child order is produced as well.
    """
    edges = sorted(F.edges)
    if not edges:
        return
    if len(edges) > cap:
        raise CapExceeded(f"{len(edges)} edges exceed the join-tree enumeration cap {cap}")
    leaves = [atom(e, F.ambient) for e in edges]

    def grow(A: JoinTree, t: int) -> Iterator[JoinTree]:
        if t == len(leaves):
            yield A
            return
        for B in _insert_everywhere(A, leaves[t]):
            yield from grow(B, t + 1)

    for A in grow(leaves[0], 1):
        if ordered:
            yield from _orderings(A)
        else:
            yield A


def random_jointree(F: PatternGraph, seed: int) -> JoinTree:
    """Random insertion order, random attachment point and random child order."""
    rng = random.Random(seed)
    edges = sorted(F.edges)
    if not edges:
        raise ValueError("graph has no edges")
    rng.shuffle(edges)
    A = atom(edges[0], F.ambient)
    for e in edges[1:]:
        new = atom(e, F.ambient)
        nodes = list(descendants(A))
        target = nodes[rng.randrange(len(nodes))]
        first = rng.random() < 0.5
        A = _replace(A, target, new, first)
    return A


def _replace(A: JoinTree, target: JoinTree, new: JoinTree, new_first: bool) -> JoinTree:
    # identity on the first positional occurrence of target
    done = False

    def walk(n: JoinTree) -> JoinTree:
        nonlocal done
        if not done and n is target:
            done = True
            return join(new, n) if new_first else join(n, new)
        if n.kind == "join":
            return join(walk(n.left), walk(n.right))
        return n

    return walk(A)


def connected_interval_trees(lo: int, hi: int, cap: int = 200_000) -> list[JoinTree]:
    """Every connected join-tree over the path ``lo .. hi`` built from interval splits.

    Children of an interval ``[l, r]`` cover ``[l, j]`` and ``[i, r]`` with
    ``l < i <= j < r``.
    """
    memo: dict[tuple[int, int], list[JoinTree]] = {}

    def build(l: int, r: int) -> list[JoinTree]:
        key = (l, r)
        if key in memo:
            return memo[key]
        if r - l == 1:
            out = [_path_atom(l)]
        else:
            out = []
            for i in range(l + 1, r):
                for j in range(i, r):
                    for L in build(l, j):
                        for R in build(i, r):
                            out.append(join(L, R))
                            if len(out) > cap:
                                raise CapExceeded(f"more than {cap} interval trees over [{l}, {r}]")
        memo[key] = out
        return out

    return build(lo, hi)
