"""Sweeps asserting lower bounds on potentials over families of join-trees."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Optional

import mpmath

from .graph_core import (
    Ambient,
    EdgeIndex,
    PatternGraph,
    build_complete_binary_tree,
    build_path,
    decompose_components,
    max_complete_height,
)
from .jointree import canonical_rd, enumerate_minimal_jointrees, to_sexp
from .potential import PotentialEngine
from .threshold import constant_theta, delta_cond, theta_infinity, uniform_walk_tree_theta
from .tree_lemmas import SweepResult

# path bound constants
PATH_BASE = math.sqrt(5) + 5
PATH_DELTA = (PATH_BASE - 3) / PATH_BASE
PATH_EPS = 0.5
APPENDIX_C = 2 * math.log2(math.sqrt(13) + 1)

MARGIN = 1e-9


def _mp_bound(kind: str, m: int, prec: int = 200):
    """Interval enclosure of the log bound for a component of length ``m``."""
    iv = mpmath.iv
    iv.prec = prec
    c = iv.sqrt(5) + 5
    if kind == "closed":
        x = iv.mpf(m)
    elif kind == "half-open":
        x = (c - 3) / c * m
    else:
        x = (c - 3) / c * m / 2
    return iv.log(x) / iv.log(c)


def compare_log_bound(lhs: Fraction, kind: str, m: int) -> tuple[bool, bool]:
    """Is ``lhs >= bound(kind, m)``?  Returns (holds, escalated)."""
    if kind == "closed":
        x = m
    elif kind == "half-open":
        x = PATH_DELTA * m
    else:
        x = PATH_EPS * PATH_DELTA * m
    gap = float(lhs) - math.log(x) / math.log(PATH_BASE)
    if gap > MARGIN:
        return True, False
    if gap < -MARGIN:
        return False, False
    enc = _mp_bound(kind, m)
    q = mpmath.iv.mpf(lhs.numerator) / lhs.denominator
    if q.a >= enc.b:
        return True, True
    if q.b < enc.a:
        return False, True
    raise ArithmeticError("interval enclosure could not decide a tight comparison")


def all_subsets(items: list) -> Iterable[tuple]:
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def check_path_component_bound(kmax: int = 6, trees: Optional[dict] = None) -> SweepResult:
    """For every minimal join-tree over ``P_k`` (``k <= kmax``), every vertex set
    ``S`` and every component ``K`` of the remaining graph, the conditioned
    potential exceeds the log bound for ``K``'s kind plus the deficiency left
    after removing ``K`` as well."""
    res = SweepResult("path_component_bound")
    one = constant_theta(Ambient.PINF, 1)
    escalations = 0
    for k in range(1, kmax + 1):
        P = build_path(k)
        eng = PotentialEngine(P, one)
        verts = sorted(P.vertices)
        idx = eng.index
        full = idx.full
        family = trees[k] if trees else enumerate_minimal_jointrees(P)
        for A in family:
            for S in all_subsets(verts):
                smask = idx.vertex_mask(S)
                val = eng.phi_cond_mask(A, smask)
                for K in decompose_components(P, S):
                    rest = eng.delta(idx.restrict(full, smask | idx.vertex_mask(K.vertex_set)))
                    ok, esc = compare_log_bound(val - rest, K.kind, K.length)
                    escalations += esc
                    res.checked += 1
                    if not ok:
                        res.violations.append(
                            {"tree": to_sexp(A), "S": list(S), "component": K.notation(), "phi": str(val)}
                        )
            if k >= 1:
                empty_ok, _ = compare_log_bound(eng.phi_cond_mask(A, 0), "closed", k)
                if not empty_ok:
                    res.violations.append({"tree": to_sexp(A), "S": [], "phi": str(eng.phi_cond_mask(A, 0))})
    res.extra["escalations"] = escalations
    return res


def check_appendix_bound(kmax: int = 6, subgraphs: bool = False) -> SweepResult:
    """Unconditioned potential at least ``log2(longest component) / c + deficiency``.

    By default every minimal join-tree of ``P_k`` for ``1 <= k <= kmax`` is
    checked; with ``subgraphs`` every nonempty subgraph of ``P_kmax`` is swept.
    """
    res = SweepResult("appendix_bound")
    one = constant_theta(Ambient.PINF, 1)
    P = build_path(kmax)
    eng = PotentialEngine(P, one)
    idx = eng.index
    if subgraphs:
        masks = range(1, 1 << len(idx.edges))
    else:
        masks = [idx.mask(build_path(k)) for k in range(1, kmax + 1)]
    for m in masks:
        F = idx.graph(m)
        longest = max(len(c.edges) for c in F.components())
        d = eng.delta(m)
        bound = math.log2(longest) / APPENDIX_C
        for A in enumerate_minimal_jointrees(F):
            v = eng.phi(A)
            res.checked += 1
            gap = float(v - d) - bound
            if gap < -MARGIN or (gap <= MARGIN and not _appendix_exact(v - d, longest)):
                res.violations.append({"tree": to_sexp(A), "phi": str(v), "longest": longest, "bound": bound + float(d)})
    return res


def _appendix_exact(lhs: Fraction, longest: int) -> bool:
    iv = mpmath.iv
    iv.prec = 200
    c = 2 * iv.log(iv.sqrt(13) + 1) / iv.log(2)
    bound = iv.log(longest) / iv.log(2) / c
    q = iv.mpf(lhs.numerator) / lhs.denominator
    if q.a >= bound.b:
        return True
    if q.b < bound.a:
        return False
    raise ArithmeticError("interval enclosure could not decide a tight comparison")


def check_rd_half_log(ks: Iterable[int] = (4, 8, 16)) -> SweepResult:
    res = SweepResult("rd_half_log")
    one = constant_theta(Ambient.PINF, 1)
    for k in ks:
        A = canonical_rd(k)
        v = PotentialEngine(A.graph(), one).phi(A)
        res.checked += 1
        res.extra[k] = str(v)
        # 2 * phi >= log2 k  <=>  4 ** phi >= k; phi is dyadic so compare via floats with margin
        if float(v) + MARGIN < 0.5 * math.log2(k):
            res.violations.append({"k": k, "phi": str(v)})
    return res


def _connected_masks(G: PatternGraph) -> tuple[EdgeIndex, list[int]]:
    idx = EdgeIndex(G)
    return idx, list(idx.iter_connected_masks())


def check_tree_bound(k: int = 2) -> SweepResult:
    """Potential under the infinite-tree weighting is at least
    ``height / 30 + 2 * deficiency / 5`` for every minimal join-tree over every
    connected subgraph of ``T_k``."""
    res = SweepResult("tree_bound")
    T = build_complete_binary_tree(k)
    tinf = theta_infinity()
    eng = PotentialEngine(T, tinf)
    idx, masks = _connected_masks(T)
    for m in masks:
        F = idx.graph(m)
        lam = max_complete_height(F)
        bound = Fraction(lam, 30) + Fraction(2, 5) * eng.delta(m)
        for A in enumerate_minimal_jointrees(F):
            v = eng.phi(A)
            res.checked += 1
            if v < bound:
                res.violations.append({"tree": to_sexp(A), "phi": str(v), "bound": str(bound)})
    return res


def check_weight_transfer(k: int = 2) -> SweepResult:
    """Walk weighting potential is at least the infinite-tree potential minus the
    total weight difference, for all minimal join-trees of ``T_k``."""
    res = SweepResult("weight_transfer")
    T = build_complete_binary_tree(k)
    tinf, walk = theta_infinity(), uniform_walk_tree_theta(k)
    gap = sum((walk(e) - tinf(e) for e in T.edges), Fraction(0))
    res.extra["gap"] = str(gap)
    e_inf, e_walk = PotentialEngine(T, tinf), PotentialEngine(T, walk)
    worst = None
    for A in enumerate_minimal_jointrees(T):
        a, b = e_walk.phi(A), e_inf.phi(A)
        res.checked += 1
        slack = a - (b - gap)
        worst = slack if worst is None else min(worst, slack)
        if slack < 0:
            res.violations.append({"tree": to_sexp(A), "walk": str(a), "tinf": str(b)})
    res.extra["min_slack"] = str(worst)
    return res


def check_component_removal(kmax: int = 5) -> SweepResult:
    """``phi(A) >= phi(A relabelled away from S) + t`` where ``S`` meets ``t``
    components, for minimal join-trees of every subgraph of ``P_kmax``."""
    res = SweepResult("component_removal")
    one = constant_theta(Ambient.PINF, 1)
    P = build_path(kmax)
    eng = PotentialEngine(P, one)
    idx = eng.index
    verts = sorted(P.vertices)
    for m in range(1, 1 << len(idx.edges)):
        F = idx.graph(m)
        comps = F.components()
        for A in enumerate_minimal_jointrees(F):
            full = eng.phi(A)
            for S in all_subsets(verts):
                t = sum(1 for c in comps if not c.vertices.isdisjoint(S))
                kept = idx.restrict(m, idx.vertex_mask(S))
                res.checked += 1
                if full < eng.phi(A, kept) + t:
                    res.violations.append({"tree": to_sexp(A), "S": list(S)})
    return res


def check_zoom(kmax: int = 5) -> SweepResult:
    """``phi(A|S) >= phi(A|S + T) + deficiency(A[T] | S)`` whenever ``T`` is a
    union of component vertex sets of ``A|S``."""
    res = SweepResult("zoom")
    one = constant_theta(Ambient.PINF, 1)
    for k in range(1, kmax + 1):
        P = build_path(k)
        eng = PotentialEngine(P, one)
        verts = sorted(P.vertices)
        for A in enumerate_minimal_jointrees(P):
            for S in all_subsets(verts):
                comps = decompose_components(P, S)
                base = eng.phi_cond(A, S)
                for chosen in all_subsets(comps):
                    T = set().union(*(K.vertex_set for K in chosen)) if chosen else set()
                    # deficiency of the chosen part counts its closed components
                    gain = sum(1 for K in chosen if K.kind == "closed")
                    res.checked += 1
                    if base < eng.phi_cond(A, set(S) | T) + gain:
                        res.violations.append({"tree": to_sexp(A), "S": list(S), "T": sorted(T)})
    return res


def check_delta_closed(k: int = 8) -> SweepResult:
    """Conditioned deficiency under unit weights equals the number of closed
    components, for every subgraph of ``P_k`` and every vertex set."""
    res = SweepResult("delta_closed")
    one = constant_theta(Ambient.PINF, 1)
    P = build_path(k)
    idx = EdgeIndex(P)
    verts = sorted(P.vertices)
    for m in range(1 << len(idx.edges)):
        F = idx.graph(m)
        for S in all_subsets(verts):
            closed = sum(1 for K in decompose_components(F, S) if K.kind == "closed")
            res.checked += 1
            if delta_cond(F, S, one) != closed:
                res.violations.append({"graph": F.to_json(), "S": list(S)})
    return res
