"""Exact potentials of join-trees.

``phi`` is the unconditioned potential: the least function satisfying the
ordered-pair inequality (descend into one child, pay deficiency for what the
other child and the rest contribute) and the averaging inequality over two
proper sub-join-trees.  ``phi_cond`` is the conditioned potential that keeps
the excluded vertex set as a parameter instead of relabelling.

Both are evaluated by memoised recursion inside a :class:`PotentialEngine`
bound to one edge universe and one weighting.  A join-tree whose labels were
partly blanked is represented by ``(node, mask)``: the original node and the
bitmask of labels that survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

from .graph_core import Ambient, CapExceeded, EdgeIndex, PatternGraph, Vertex
from .jointree import (
    EMPTY,
    JoinTree,
    canonical_fo,
    canonical_mo,
    canonical_rd,
    canonical_tk,
    enumerate_minimal_jointrees,
    random_jointree,
    unique_nodes,
)
from .threshold import MaskDelta, ThresholdWeighting

MEMO_CAP = 10**7
HALF = Fraction(1, 2)

# rule tags recorded in traces
ATOM = "atom"
DAG_LEFT = "dagger-left"  # descend into the left child
DAG_RIGHT = "dagger-right"
DDAG = "double-dagger"
INV_LEFT = "inverted-dagger-left"  # pay for the left child, recurse on the right
INV_RIGHT = "inverted-dagger-right"
EMPTY_RULE = "empty"


@dataclass
class PotentialValue:
    value: Fraction
    trace: Optional[list] = None

    def to_json(self) -> dict:
        out = {"value": str(self.value), "value_num": self.value.numerator, "value_den": self.value.denominator}
        if self.trace is not None:
            out["rule_trace"] = self.trace
        return out


class PotentialEngine:
    """Memoised potentials over a fixed edge universe and weighting.

    The universe must contain every edge of every join-tree evaluated; pass
    the largest graph of a sweep so memo entries are shared across trees.
    """

    def __init__(self, universe: Union[PatternGraph, EdgeIndex], theta: ThresholdWeighting, memo_cap: int = MEMO_CAP):
        self.index = universe if isinstance(universe, EdgeIndex) else EdgeIndex(universe)
        self.theta = theta
        self.md = MaskDelta(self.index, theta)
        self.den = self.md.den
        self.memo_cap = memo_cap
        self._emask: dict[JoinTree, int] = {}
        self._subs: dict[JoinTree, list[JoinTree]] = {}
        self._phi: dict[tuple[JoinTree, int], Fraction] = {}
        self._phi_choice: dict[tuple[JoinTree, int], tuple] = {}
        self._cond: dict[tuple[JoinTree, int], Fraction] = {}
        self._cond_choice: dict[tuple[JoinTree, int], tuple] = {}

    # -- helpers -----------------------------------------------------------

    def emask(self, node: JoinTree) -> int:
        m = self._emask.get(node)
        if m is None:
            m = self.index.mask(node.edges) if node.edges else 0
            self._emask[node] = m
        return m

    def vmask_of_tree(self, node: JoinTree) -> int:
        return self.index.vmask(self.emask(node))

    def delta(self, emask: int) -> Fraction:
        return self.md(emask)

    def _d(self, emask: int) -> int:
        # scaled deficiency
        return self.md.scaled(emask)

    def proper_nodes(self, node: JoinTree) -> list[JoinTree]:
        """Distinct nodes strictly below ``node``."""
        subs = self._subs.get(node)
        if subs is None:
            subs = [n for n in unique_nodes(node) if n is not node]
            self._subs[node] = subs
        return subs

    def _check_cap(self, table: dict) -> None:
        if len(table) > self.memo_cap:
            raise CapExceeded(f"potential memo exceeded {self.memo_cap} states")

    # -- unconditioned potential ------------------------------------------

    def phi(self, A: JoinTree, mask: Optional[int] = None) -> Fraction:
        """Potential of ``A`` (with only the labels in ``mask`` kept)."""
        if A.is_empty:
            return Fraction(0)
        m = self.emask(A) if mask is None else mask & self.emask(A)
        return self._phi_rec(A, m) / self.den

    def _phi_rec(self, node: JoinTree, m: int) -> Fraction:
        """Scaled potential (times ``den``) of ``node`` with labels ``m``."""
        if m == 0:
            return Fraction(0)
        key = (node, m)
        hit = self._phi.get(key)
        if hit is not None:
            return hit
        if node.kind == "atom":
            val = Fraction(self._d(m))
            self._phi_choice[key] = (ATOM,)
        else:
            val, choice = self._phi_internal(node, m)
            self._phi_choice[key] = choice
        self._phi[key] = val
        self._check_cap(self._phi)
        return val

    def _side_candidates(self, node: JoinTree, m: int, proper: bool) -> dict[int, tuple[Fraction, Optional[JoinTree]]]:
        """Best potential among sub-join-trees of ``(node, m)``, keyed by vertex set.

        For a fixed vertex set every other term of either inequality is the
        same, so only the largest potential per vertex set matters.
        """
        best: dict[int, tuple[Fraction, Optional[JoinTree]]] = {0: (Fraction(0), None)}
        nodes = self.proper_nodes(node) if proper else [node] + self.proper_nodes(node)
        for d in nodes:
            md = m & self.emask(d)
            if not md:
                continue
            vd = self.index.vmask(md)
            p = self._phi_rec(d, md)
            cur = best.get(vd)
            if cur is None or p > cur[0]:
                best[vd] = (p, d)
        return best

    def _phi_internal(self, node: JoinTree, m: int) -> tuple[Fraction, tuple]:
        idx = self.index
        B, C = node.left, node.right
        mB, mC = m & self.emask(B), m & self.emask(C)
        vB, vC = idx.vmask(mB), idx.vmask(mC)
        best = Fraction(-1)
        choice: tuple = ()
        for tag, X, mX, mY, vY in ((DAG_LEFT, B, mB, mC, vC), (DAG_RIGHT, C, mC, mB, vB)):
            for vD, (pD, d) in self._side_candidates(X, mX, proper=False).items():
                val = pD + self._d(idx.restrict(mY, vD)) + self._d(idx.restrict(m, vY | vD))
                if val > best:
                    best, choice = val, (tag, d)
        dA = self._d(m)
        dcands = self._side_candidates(node, m, proper=True)
        ecands: dict[tuple[JoinTree, int], None] = {}
        for e in self.proper_nodes(node):
            me = m & self.emask(e)
            if me:
                ecands[(e, me)] = None
        ecands_list = [(None, 0)] + list(ecands)
        for vD, (pD, d) in dcands.items():
            for e, me in ecands_list:
                mED = idx.restrict(me, vD) if me else 0
                pE = self._phi_rec(e, mED) if mED else 0
                rest = self._d(idx.restrict(m, vD | idx.vmask(me)))
                val = (pD + pE + dA + rest) * HALF
                if val > best:
                    best, choice = val, (DDAG, d, e)
        return best, choice

    def phi_value(self, A: JoinTree, trace: bool = False) -> PotentialValue:
        v = self.phi(A)
        return PotentialValue(v, self.phi_trace(A) if trace else None)

    def phi_trace(self, A: JoinTree, mask: Optional[int] = None) -> list[dict]:
        """Tight rule at each node of the recursion that realises the value."""
        from .jointree import to_sexp

        m = self.emask(A) if mask is None else mask
        self._phi_rec(A, m)
        out: list[dict] = []
        seen = set()
        stack = [(A, m)]
        while stack:
            node, mm = stack.pop()
            if mm == 0 or (node, mm) in seen:
                continue
            seen.add((node, mm))
            ch = self._phi_choice[(node, mm)]
            entry = {
                "tree": to_sexp(node),
                "labels": [list(map(_vj, e)) for e in self.index.iter_edges(mm)],
                "value": str(self._phi[(node, mm)] / self.den),
                "rule": ch[0],
            }
            if ch[0] in (DAG_LEFT, DAG_RIGHT):
                d = ch[1]
                entry["D"] = to_sexp(d) if d is not None else "(empty)"
                if d is not None:
                    stack.append((d, mm & self.emask(d)))
            elif ch[0] == DDAG:
                d, e = ch[1], ch[2]
                entry["D"] = to_sexp(d) if d is not None else "(empty)"
                entry["E"] = to_sexp(e) if e is not None else "(empty)"
                md = mm & self.emask(d) if d is not None else 0
                if d is not None:
                    stack.append((d, md))
                if e is not None:
                    me = mm & self.emask(e)
                    stack.append((e, self.index.restrict(me, self.index.vmask(md))))
            out.append(entry)
        return out

    # -- coefficient decomposition ----------------------------------------

    def decompose(self, A: JoinTree, mask: Optional[int] = None) -> dict[int, Fraction]:
        """Coefficients ``c_F`` (keyed by edge mask) with ``phi = sum c_F * delta(F)``."""
        m = self.emask(A) if mask is None else mask
        self._phi_rec(A, m)
        memo: dict[tuple[JoinTree, int], dict[int, Fraction]] = {}
        return dict(self._decomp(A, m, memo))

    def _decomp(self, node: JoinTree, m: int, memo: dict) -> dict[int, Fraction]:
        if m == 0:
            return {}
        key = (node, m)
        if key in memo:
            return memo[key]
        idx = self.index
        ch = self._phi_choice[key]
        out: dict[int, Fraction] = {}

        def add(F: int, c: Fraction) -> None:
            if F:
                out[F] = out.get(F, Fraction(0)) + c

        if ch[0] == ATOM:
            add(m, Fraction(1))
        elif ch[0] in (DAG_LEFT, DAG_RIGHT):
            d = ch[1]
            X, Y = (node.left, node.right) if ch[0] == DAG_LEFT else (node.right, node.left)
            mY = m & self.emask(Y)
            md = m & self.emask(d) if d is not None else 0
            vD = idx.vmask(md)
            if d is not None:
                for F, c in self._decomp(d, md, memo).items():
                    add(F, c)
            add(idx.restrict(mY, vD), Fraction(1))
            add(idx.restrict(m, idx.vmask(mY) | vD), Fraction(1))
        else:
            d, e = ch[1], ch[2]
            md = m & self.emask(d) if d is not None else 0
            me = m & self.emask(e) if e is not None else 0
            vD = idx.vmask(md)
            if d is not None:
                for F, c in self._decomp(d, md, memo).items():
                    add(F, c * HALF)
            if e is not None:
                for F, c in self._decomp(e, idx.restrict(me, vD), memo).items():
                    add(F, c * HALF)
            add(m, HALF)
            add(idx.restrict(m, vD | idx.vmask(me)), HALF)
        memo[key] = out
        return out

    def check_decomposition(self, A: JoinTree, mask: Optional[int] = None) -> tuple[bool, bool]:
        """(reconstruction identity holds, per-vertex mass is at most one)."""
        m = self.emask(A) if mask is None else mask
        coeffs = self.decompose(A, m)
        total = sum((c * self.delta(F) for F, c in coeffs.items()), Fraction(0))
        ok_sum = total == self.phi(A, m)
        mass = [Fraction(0)] * len(self.index.vertices)
        for F, c in coeffs.items():
            vm = self.index.vmask(F)
            t = 0
            while vm:
                if vm & 1:
                    mass[t] += c
                vm >>= 1
                t += 1
        return ok_sum, all(x <= 1 for x in mass)

    # -- conditioned potential --------------------------------------------

    def phi_cond(self, A: JoinTree, S: Iterable[Vertex] = ()) -> Fraction:
        """Conditioned potential of ``A`` given the excluded vertex set ``S``."""
        if A.is_empty:
            return Fraction(0)
        return self._cond_rec(A, self.index.vertex_mask(S)) / self.den

    def phi_cond_mask(self, A: JoinTree, smask: int) -> Fraction:
        if A.is_empty:
            return Fraction(0)
        return self._cond_rec(A, smask) / self.den

    def _cond_rec(self, node: JoinTree, s: int) -> Fraction:
        vA = self.vmask_of_tree(node)
        s &= vA
        key = (node, s)
        hit = self._cond.get(key)
        if hit is not None:
            return hit
        idx = self.index
        eA = self.emask(node)
        dAS = self._d(idx.restrict(eA, s))
        if node.kind == "atom":
            val, choice = Fraction(dAS), (ATOM,)
        else:
            B, C = node.left, node.right
            eB, eC = self.emask(B), self.emask(C)
            vB, vC = idx.vmask(eB), idx.vmask(eC)
            cands = [
                (self._cond_rec(B, s) + self._d(idx.restrict(eC, s | vB)), (DAG_LEFT,)),
                (self._cond_rec(C, s) + self._d(idx.restrict(eB, s | vC)), (DAG_RIGHT,)),
                (self._d(idx.restrict(eB, s)) + self._cond_rec(C, s | vB), (INV_LEFT,)),
                (self._d(idx.restrict(eC, s)) + self._cond_rec(B, s | vC), (INV_RIGHT,)),
            ]
            val, choice = max(cands, key=lambda t: t[0])
            for d in self.proper_nodes(node):
                vD = self.vmask_of_tree(d)
                if not vD & ~s:
                    continue
                cand = (self._cond_rec(d, s) + self._cond_rec(node, s | vD) + dAS) * HALF
                if cand > val:
                    val, choice = cand, (DDAG, d)
        self._cond[key] = val
        self._cond_choice[key] = choice
        self._check_cap(self._cond)
        return val

    def phi_cond_trace(self, A: JoinTree, S: Iterable[Vertex] = ()) -> list[dict]:
        from .jointree import to_sexp

        s0 = self.index.vertex_mask(S)
        self._cond_rec(A, s0)
        out, seen = [], set()
        stack = [(A, s0 & self.vmask_of_tree(A))]
        while stack:
            node, s = stack.pop()
            s &= self.vmask_of_tree(node)
            if (node, s) in seen:
                continue
            seen.add((node, s))
            ch = self._cond_choice[(node, s)]
            entry = {
                "tree": to_sexp(node),
                "S": sorted(_vj(v) for v in self.index.vertex_set(s)),
                "value": str(self._cond[(node, s)] / self.den),
                "rule": ch[0],
            }
            if node.kind == "join":
                B, C = node.left, node.right
                vB, vC = self.vmask_of_tree(B), self.vmask_of_tree(C)
                nxt = {
                    DAG_LEFT: [(B, s)],
                    DAG_RIGHT: [(C, s)],
                    INV_LEFT: [(C, s | vB)],
                    INV_RIGHT: [(B, s | vC)],
                }.get(ch[0])
                if ch[0] == DDAG:
                    d = ch[1]
                    entry["D"] = to_sexp(d)
                    nxt = [(d, s), (node, s | self.vmask_of_tree(d))]
                stack.extend(nxt or [])
            out.append(entry)
        return out


def _vj(v):
    return list(v) if isinstance(v, tuple) else v


# ---------------------------------------------------------------------------
# convenience wrappers


def phi(A: JoinTree, theta: ThresholdWeighting, trace: bool = False) -> PotentialValue:
    eng = PotentialEngine(A.graph(), theta)
    return eng.phi_value(A, trace)


def phi_cond(A: JoinTree, S: Iterable[Vertex], theta: ThresholdWeighting, trace: bool = False) -> PotentialValue:
    eng = PotentialEngine(A.graph(), theta)
    S = list(S)
    val = eng.phi_cond(A, S)
    return PotentialValue(val, eng.phi_cond_trace(A, S) if trace else None)


def phi_decompose(A: JoinTree, theta: ThresholdWeighting) -> dict[frozenset, Fraction]:
    """Coefficients keyed by edge sets; asserts the identity and the mass bound."""
    eng = PotentialEngine(A.graph(), theta)
    ok_sum, ok_mass = eng.check_decomposition(A)
    if not (ok_sum and ok_mass):
        raise AssertionError("coefficient decomposition failed its identity or mass bound")
    return {frozenset(eng.index.iter_edges(F)): c for F, c in eng.decompose(A).items()}


def jointree_family(F: PatternGraph, mode: str, samples: int = 32, seed: int = 0, cap: int = 7) -> Iterator[JoinTree]:
    """Join-trees with graph ``F``: ``exhaustive`` minimal trees, ``canonical``
    constructions (paths and complete trees from the origin), or ``sampled``."""
    if mode == "exhaustive":
        yield from enumerate_minimal_jointrees(F, cap)
    elif mode == "canonical":
        if F.ambient is Ambient.PINF:
            lo, hi = min(F.vertices), max(F.vertices)
            if len(F.edges) != hi - lo:
                raise ValueError("canonical path trees need a connected path")
            for build in (canonical_rd, canonical_mo, canonical_fo):
                yield build(hi - lo, lo)
        else:
            root = max(F.vertices)
            A = canonical_tk(root[0])
            if A.edges != F.edges:
                raise ValueError("canonical tree join-tree needs a complete binary tree at the origin")
            yield A
    elif mode == "sampled":
        for t in range(samples):
            yield random_jointree(F, seed + t)
    else:
        raise ValueError(f"unknown join-tree mode {mode!r}")


def min_phi_over_jointrees(
    F: PatternGraph,
    theta: ThresholdWeighting,
    mode: str = "exhaustive",
    cond: bool = False,
    samples: int = 32,
    seed: int = 0,
    cap: int = 7,
) -> tuple[Fraction, JoinTree]:
    eng = PotentialEngine(F, theta)
    best: Optional[tuple[Fraction, JoinTree]] = None
    for A in jointree_family(F, mode, samples, seed, cap):
        v = eng.phi_cond(A, ()) if cond else eng.phi(A)
        if best is None or v < best[0]:
            best = (v, A)
    if best is None:
        return Fraction(0), EMPTY
    return best


def kappa_fixed_theta(G: PatternGraph, theta: ThresholdWeighting, cap: int = 7) -> tuple[Fraction, JoinTree]:
    """Least over minimal join-trees of the largest deficiency of a node's graph."""
    idx = EdgeIndex(G)
    md = MaskDelta(idx, theta)
    best: Optional[tuple[Fraction, JoinTree]] = None
    for A in enumerate_minimal_jointrees(G, cap):
        worst = max(md(idx.mask(n.edges)) for n in unique_nodes(A))
        if best is None or worst < best[0]:
            best = (worst, A)
    if best is None:
        return Fraction(0), EMPTY
    return best
