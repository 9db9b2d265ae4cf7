"""Relations over ``[n]^V``, pathsets, and brute-force pathset complexity.

Everything here is exponential and meant for ``n`` in ``{2, 3}`` and at most
three or four free vertices.  Densities are compared exactly: a rational
exponent ``p / q`` turns ``|R| / n^d <= n^(-p/q)`` into the integer inequality
``|R|^q * n^p <= n^(q*d)``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .graph_core import CapExceeded, PatternGraph, Vertex, restrict_away
from .jointree import JoinTree, sub_join_trees
from .threshold import ThresholdWeighting, delta

UNIVERSE_CAP = 16  # tuples in [n]^(free vertices)


@dataclass(frozen=True)
class Relation:
    """A set of tuples over the sorted coordinate set ``vars``."""

    vars: tuple
    tuples: frozenset
    n: int

    def __post_init__(self) -> None:
        order = sorted(range(len(self.vars)), key=lambda i: _vkey(self.vars[i]))
        if order != list(range(len(self.vars))):
            object.__setattr__(self, "vars", tuple(self.vars[i] for i in order))
            object.__setattr__(self, "tuples", frozenset(tuple(t[i] for i in order) for t in self.tuples))
        for t in self.tuples:
            if len(t) != len(self.vars) or any(not 0 <= x < self.n for x in t):
                raise ValueError(f"tuple {t} does not fit {self.vars} over [{self.n}]")

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.tuples)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.tuples), self.n ** len(self.vars))

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.vars, t)) for t in sorted(self.tuples)]

    def issubset(self, other: "Relation") -> bool:
        _same_space(self, other)
        return self.tuples <= other.tuples

    def union(self, other: "Relation") -> "Relation":
        _same_space(self, other)
        return Relation(self.vars, self.tuples | other.tuples, self.n)


def _vkey(v: Vertex):
    return (0, v) if isinstance(v, int) else (1, v)


def _same_space(a: Relation, b: Relation) -> None:
    if a.vars != b.vars or a.n != b.n:
        raise ValueError("relations live over different coordinates")


def full_relation(vars: Iterable, n: int) -> Relation:
    vs = tuple(sorted(set(vars), key=_vkey))
    return Relation(vs, frozenset(itertools.product(range(n), repeat=len(vs))), n)


def empty_relation(vars: Iterable, n: int) -> Relation:
    return Relation(tuple(sorted(set(vars), key=_vkey)), frozenset(), n)


def relation_from_dicts(vars: Iterable, rows: Iterable[Mapping], n: int) -> Relation:
    vs = tuple(sorted(set(vars), key=_vkey))
    return Relation(vs, frozenset(tuple(r[v] for v in vs) for r in rows), n)


def join(A: Relation, B: Relation) -> Relation:
    """Tuples over ``V u W`` whose restrictions lie in ``A`` and ``B``."""
    if A.n != B.n:
        raise ValueError("relations over different n")
    out_vars = tuple(sorted(set(A.vars) | set(B.vars), key=_vkey))
    shared = [v for v in A.vars if v in set(B.vars)]
    b_index: dict[tuple, list[dict]] = {}
    for t in B.tuples:
        row = dict(zip(B.vars, t))
        b_index.setdefault(tuple(row[v] for v in shared), []).append(row)
    out = set()
    for t in A.tuples:
        row = dict(zip(A.vars, t))
        for other in b_index.get(tuple(row[v] for v in shared), ()):
            merged = {**row, **other}
            out.add(tuple(merged[v] for v in out_vars))
    return Relation(out_vars, frozenset(out), A.n)


def project(A: Relation, U: Iterable) -> Relation:
    U = set(U)
    if not U <= set(A.vars):
        raise ValueError("projection onto coordinates outside the relation")
    pos = [i for i, v in enumerate(A.vars) if v in U]
    return Relation(tuple(A.vars[i] for i in pos), frozenset(tuple(t[i] for i in pos) for t in A.tuples), A.n)


def restrict(A: Relation, z: Mapping) -> Relation:
    """Tuples over ``V \\ T`` extended by ``z`` on ``V n T`` to a member of ``A``."""
    fixed = [(i, z[v]) for i, v in enumerate(A.vars) if v in z]
    keep = [i for i, v in enumerate(A.vars) if v not in z]
    out = frozenset(
        tuple(t[i] for i in keep) for t in A.tuples if all(t[i] == val for i, val in fixed)
    )
    return Relation(tuple(A.vars[i] for i in keep), out, A.n)


def random_relation(vars: Iterable, n: int, rng: random.Random, p: float = 0.5) -> Relation:
    full = full_relation(vars, n)
    return Relation(full.vars, frozenset(t for t in full.tuples if rng.random() < p), n)


# ---------------------------------------------------------------------------
# density comparisons


def density_at_most(count: int, free: int, n: int, exponent: Fraction) -> bool:
    """``count / n^free <= n^(-exponent)`` in integers."""
    exponent = Fraction(exponent)
    p, q = exponent.numerator, exponent.denominator
    if p >= 0:
        return count**q * n**p <= n ** (q * free)
    return count**q <= n ** (q * free - p)


def assignments(vars: Sequence, n: int) -> Iterator[dict]:
    for vals in itertools.product(range(n), repeat=len(vars)):
        yield dict(zip(vars, vals))


def is_pathset(
    A: Relation, F: PatternGraph, S: Iterable, theta: ThresholdWeighting, n: Optional[int] = None, cap: int = 4
) -> bool:
    """Every restriction to ``T >= S`` has density at most ``n^(-Delta(F|T))``.

    ``A`` lives over ``V(F) \\ S``.  Vertices of ``T`` outside ``V(F)`` change
    neither side, so ``T`` ranges over ``S`` plus subsets of the free vertices.
    """
    n = A.n if n is None else n
    S = set(S)
    free = sorted(set(F.vertices) - S, key=_vkey)
    if set(A.vars) != set(free):
        raise ValueError(f"relation coordinates {A.vars} differ from free vertices {free}")
    if len(free) > cap:
        raise CapExceeded(f"{len(free)} free vertices exceed the cap {cap}")
    for r in range(len(free) + 1):
        for U in itertools.combinations(free, r):
            bound = delta(restrict_away(F, S | set(U)), theta)
            rest = len(free) - r
            for z in assignments(U, n):
                if not density_at_most(len(restrict(A, z)), rest, n, bound):
                    return False
    return True


def rectangle_pathset(profile: Sequence, sets: Sequence[Iterable[int]], n: int) -> Relation:
    """Product relation ``S_0 x ... x S_k`` over the path vertices ``0..k``.

    Requires ``|S_h| <= n^(1 - a_h)`` and a profile summing to at least one.
    """
    profile = [Fraction(v) for v in profile]
    if len(profile) != len(sets):
        raise ValueError("one set per profile entry")
    if sum(profile, Fraction(0)) < 1 or any(not 0 <= v <= 1 for v in profile):
        raise ValueError("profile must have entries in [0, 1] summing to at least one")
    sets = [sorted(set(s)) for s in sets]
    for a, s in zip(profile, sets):
        if any(not 0 <= x < n for x in s):
            raise ValueError("set element outside [n]")
        # |S| <= n^(1-a)
        if not density_at_most(len(s), 1, n, a):
            raise ValueError(f"set of size {len(s)} exceeds n^(1-{a})")
    vs = tuple(range(len(sets)))
    return Relation(vs, frozenset(itertools.product(*sets)), n)


# ---------------------------------------------------------------------------
# pathset complexity, main route


@dataclass
class PathsetCertificate:
    """``value`` with a witnessing family: pathsets for an atomic tree,
    ``(A_i, B_i, C_i)`` triples otherwise."""

    value: int
    family: list = field(default_factory=list)

    def to_json(self) -> dict:
        def rel(r: Relation) -> list:
            return [list(t) for t in sorted(r.tuples)]

        fam = []
        for item in self.family:
            fam.append([rel(x) for x in item] if isinstance(item, tuple) else rel(item))
        return {"value": self.value, "family": fam}


class _Space:
    """Tuples of ``[n]^free`` numbered for bitmask subsets."""

    def __init__(self, free: Sequence, n: int):
        self.vars = tuple(sorted(free, key=_vkey))
        self.n = n
        self.tuples = list(itertools.product(range(n), repeat=len(self.vars)))
        if len(self.tuples) > UNIVERSE_CAP:
            raise CapExceeded(f"{len(self.tuples)} tuples exceed the cap {UNIVERSE_CAP}")
        self.pos = {t: i for i, t in enumerate(self.tuples)}
        self.full = (1 << len(self.tuples)) - 1

    def mask(self, R: Relation) -> int:
        if R.vars != self.vars:
            raise ValueError(f"relation over {R.vars}, expected {self.vars}")
        m = 0
        for t in R.tuples:
            m |= 1 << self.pos[t]
        return m

    def relation(self, m: int) -> Relation:
        return Relation(self.vars, frozenset(t for i, t in enumerate(self.tuples) if m >> i & 1), self.n)


class PathsetComplexity:
    """Exact pathset complexity for one ``(A, S, theta, n)``.

    Pathsets are closed under subsets, so an optimal witnessing family can
    take each ``A_i`` inside the target and each ``B_i``, ``C_i`` equal to the
    projections of ``A_i``; the minimum is then over partitions of the target
    into blocks whose projections are pathsets, each block costing the larger
    child complexity.  Atomic trees reduce to partitions into pathsets.
    """

    def __init__(self, A: JoinTree, S: Iterable, theta: ThresholdWeighting, n: int):
        if A.is_empty:
            raise ValueError("empty join-tree")
        self.tree = A
        self.S = frozenset(S)
        self.theta = theta
        self.n = n
        self.graph = A.graph()
        self.space = _Space(set(A.vertices) - self.S, n)
        self._pathset: dict[int, bool] = {}
        self._memo: dict[int, tuple[int, list[int]]] = {}
        self.children: Optional[tuple[PathsetComplexity, PathsetComplexity]] = None
        if A.kind == "join":
            self.children = (PathsetComplexity(A.left, S, theta, n), PathsetComplexity(A.right, S, theta, n))

    def is_pathset_mask(self, m: int) -> bool:
        hit = self._pathset.get(m)
        if hit is None:
            hit = is_pathset(self.space.relation(m), self.graph, self.S, self.theta, self.n, cap=len(self.space.vars))
            self._pathset[m] = hit
        return hit

    def _block_cost(self, m: int) -> Optional[int]:
        """Cost of one block, or None when no triple can carry it."""
        if not self.is_pathset_mask(m):
            return None
        if self.children is None:
            return 1
        R = self.space.relation(m)
        costs = []
        for ch in self.children:
            sub = ch.space.mask(project(R, ch.space.vars))
            if not ch.is_pathset_mask(sub):
                return None
            costs.append(ch.value_mask(sub))
        return max(costs)

    def value_mask(self, m: int) -> int:
        return self._solve(m)[0]

    def _solve(self, m: int) -> tuple[int, list[int]]:
        hit = self._memo.get(m)
        if hit is not None:
            return hit
        if m == 0:
            out = (0, [])
        else:
            low = m & -m
            rest = m ^ low
            best: Optional[tuple[int, list[int]]] = None
            sub = rest
            while True:
                block = sub | low
                cost = self._block_cost(block)
                if cost is not None and (best is None or cost < best[0]):
                    tail = self._solve(m ^ block)
                    if best is None or cost + tail[0] < best[0]:
                        best = (cost + tail[0], [block] + tail[1])
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            if best is None:
                raise AssertionError("singletons must always form pathsets")
            out = best
        self._memo[m] = out
        return out

    def value(self, R: Relation) -> int:
        return self.value_mask(self.space.mask(R))

    def certificate(self, R: Relation) -> PathsetCertificate:
        value, blocks = self._solve(self.space.mask(R))
        family = []
        for b in blocks:
            rel = self.space.relation(b)
            if self.children is None:
                family.append(rel)
            else:
                family.append((rel,) + tuple(project(rel, ch.space.vars) for ch in self.children))
        return PathsetCertificate(value, family)


def pathset_complexity_bruteforce(
    A: JoinTree, S: Iterable, R: Relation, theta: ThresholdWeighting, n: Optional[int] = None
) -> PathsetCertificate:
    n = R.n if n is None else n
    return PathsetComplexity(A, S, theta, n).certificate(R)


# ---------------------------------------------------------------------------
# pathset complexity, oracle route


class DirectCoverOracle:
    """Pathset complexity straight from the definition, for cross-checking.

    It enumerates every pathset triple ``(A_i, B_i, C_i)`` with
    ``A_i`` inside ``B_i`` joined with ``C_i`` (children priced by recursion),
    and solves the resulting weighted set cover over subsets of the target
    universe.  It never uses closure under subsets or projections.
    """

    def __init__(self, A: JoinTree, S: Iterable, theta: ThresholdWeighting, n: int):
        self.tree = A
        self.S = frozenset(S)
        self.space = _Space(set(A.vertices) - self.S, n)
        graph = A.graph()
        all_masks = range(self.space.full + 1)
        self.pathsets = [
            m for m in all_masks if is_pathset(self.space.relation(m), graph, self.S, theta, n, cap=len(self.space.vars))
        ]
        # candidate sets with the cheapest triple that yields them
        self.offers: dict[int, int] = {}
        if A.kind != "join":
            for m in self.pathsets:
                if m:
                    self.offers[m] = 1
        else:
            left = DirectCoverOracle(A.left, S, theta, n)
            right = DirectCoverOracle(A.right, S, theta, n)
            left_vals = {m: left.value_mask(m) for m in left.pathsets}
            right_vals = {m: right.value_mask(m) for m in right.pathsets}
            pathset_set = set(self.pathsets)
            for lm, lv in left_vals.items():
                for rm, rv in right_vals.items():
                    joined = self.space.mask(join(left.space.relation(lm), right.space.relation(rm)))
                    cost = max(lv, rv)
                    # every pathset inside the join is an admissible A_i
                    sub = joined
                    while sub:
                        if sub in pathset_set and cost < self.offers.get(sub, cost + 1):
                            self.offers[sub] = cost
                        sub = (sub - 1) & joined
        self._cover: dict[int, int] = {0: 0}

    def value_mask(self, m: int) -> int:
        if m in self._cover:
            return self._cover[m]
        best = None
        low = m & -m
        for offer, cost in self.offers.items():
            if offer & low:
                v = cost + self.value_mask(m & ~offer)
                if best is None or v < best:
                    best = v
        if best is None:
            raise ArithmeticError("target cannot be covered")
        self._cover[m] = best
        return best

    def value(self, R: Relation) -> int:
        return self.value_mask(self.space.mask(R))


# ---------------------------------------------------------------------------
# lemma sweeps


@dataclass
class MicroReport:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def phi_bound_holds(count: int, free: int, n: int, phi_value: Fraction, chi_value: int) -> bool:
    """``count / n^free <= n^(-phi) * chi`` in integers."""
    p, q = phi_value.numerator, phi_value.denominator
    lhs = count**q * (n**p if p >= 0 else 1)
    rhs = chi_value**q * n ** (q * free) * (n ** (-p) if p < 0 else 1)
    return lhs <= rhs


def all_relations(space_vars: Sequence, n: int) -> Iterator[Relation]:
    sp = _Space(space_vars, n)
    for m in range(sp.full + 1):
        yield sp.relation(m)


def check_chi_phi(trees: Sequence[JoinTree], theta: ThresholdWeighting, n: int, phi_of) -> MicroReport:
    """Density bound against brute-forced complexity for every relation.

    ``phi_of(tree)`` supplies the conditioned potential with ``S`` empty.
    """
    rep = MicroReport("chi_phi")
    for t_id, A in enumerate(trees):
        main = PathsetComplexity(A, (), theta, n)
        oracle = DirectCoverOracle(A, (), theta, n)
        ph = Fraction(phi_of(A))
        free = len(main.space.vars)
        for m in range(main.space.full + 1):
            chi = main.value_mask(m)
            count = bin(m).count("1")
            ok = phi_bound_holds(count, free, n, ph, chi)
            agree = chi == oracle.value_mask(m)
            rep.checked += 1
            rep.rows.append(
                {
                    "tree": t_id,
                    "relation": m,
                    "mu": str(Fraction(count, n**free)),
                    "chi": chi,
                    "phi_bound": str(ph),
                    "pass": ok and agree,
                }
            )
            if not ok or not agree:
                rep.violations.append({"tree": t_id, "relation": m, "chi": chi, "oracle": oracle.value_mask(m)})
    return rep


def check_projection(trees: Sequence[JoinTree], theta: ThresholdWeighting, n: int) -> MicroReport:
    rep = MicroReport("projection")
    for A in trees:
        main = PathsetComplexity(A, (), theta, n)
        subs = [PathsetComplexity(B, (), theta, n) for B in sub_join_trees(A, proper=True) if not B.is_empty]
        for m in range(main.space.full + 1):
            R = main.space.relation(m)
            top = main.value_mask(m)
            for sub in subs:
                rep.checked += 1
                if sub.value(project(R, sub.space.vars)) > top:
                    rep.violations.append({"relation": m, "sub": sub.space.vars})
    return rep


def check_restriction(trees: Sequence[JoinTree], theta: ThresholdWeighting, n: int) -> MicroReport:
    rep = MicroReport("restriction")
    for A in trees:
        main = PathsetComplexity(A, (), theta, n)
        verts = main.space.vars
        conditioned = {}
        for r in range(len(verts) + 1):
            for T in itertools.combinations(verts, r):
                conditioned[T] = PathsetComplexity(A, T, theta, n)
        for m in range(main.space.full + 1):
            R = main.space.relation(m)
            top = main.value_mask(m)
            for T, engine in conditioned.items():
                for z in assignments(T, n):
                    Rz = restrict(R, z)
                    rep.checked += 1
                    if engine.value(Rz) > top:
                        rep.violations.append({"relation": m, "T": T, "z": z})
    return rep


def check_chi_properties(trees: Sequence[JoinTree], theta: ThresholdWeighting, n: int) -> MicroReport:
    """Subadditivity and monotonicity over all pairs, and the join bound over
    all pathset pairs of the two children."""
    rep = MicroReport("chi_properties")
    for A in trees:
        main = PathsetComplexity(A, (), theta, n)
        full = main.space.full
        vals = [main.value_mask(m) for m in range(full + 1)]
        for m1 in range(full + 1):
            for m2 in range(full + 1):
                rep.checked += 1
                if vals[m1 | m2] > vals[m1] + vals[m2]:
                    rep.violations.append({"kind": "subadditive", "pair": (m1, m2)})
                if m1 & ~m2 == 0 and vals[m1] > vals[m2]:
                    rep.violations.append({"kind": "monotone", "pair": (m1, m2)})
        if main.children is None:
            continue
        left, right = main.children
        for lm in range(left.space.full + 1):
            if not left.is_pathset_mask(lm):
                continue
            for rm in range(right.space.full + 1):
                if not right.is_pathset_mask(rm):
                    continue
                joined = join(left.space.relation(lm), right.space.relation(rm))
                rep.checked += 1
                if main.value(joined) > max(left.value_mask(lm), right.value_mask(rm)):
                    rep.violations.append({"kind": "join", "pair": (lm, rm)})
    return rep


def check_pathset_restriction_closure(F: PatternGraph, theta: ThresholdWeighting, n: int) -> MicroReport:
    """Restricting a pathset to any larger conditioning set leaves a pathset."""
    rep = MicroReport("pathset_restriction_closure")
    verts = sorted(F.vertices, key=_vkey)
    sp = _Space(verts, n)
    for m in range(sp.full + 1):
        R = sp.relation(m)
        if not is_pathset(R, F, (), theta, n):
            continue
        for r in range(1, len(verts) + 1):
            for T in itertools.combinations(verts, r):
                for z in assignments(T, n):
                    rep.checked += 1
                    if not is_pathset(restrict(R, z), F, T, theta, n):
                        rep.violations.append({"relation": m, "T": T, "z": z})
    return rep


def check_split_lemmas(relations: Iterable[Relation], rng: random.Random) -> MicroReport:
    """Density of a relation against its projection and restrictions, and of a
    join against one side and the other side's restrictions."""
    rep = MicroReport("split_lemmas")
    for R in relations:
        vs = list(R.vars)
        U = [v for v in vs if rng.random() < 0.5]
        rest = max(
            (restrict(R, z).density for z in assignments(U, R.n)),
            default=Fraction(0),
        )
        rep.checked += 1
        if R.density > project(R, U).density * rest:
            rep.violations.append({"kind": "split", "relation": sorted(R.tuples), "U": U})
        W = [v for v in vs if rng.random() < 0.5] + ["extra"]
        other = random_relation(W, R.n, rng)
        joined = join(R, other)
        worst = max(restrict(other, z).density for z in assignments(vs, R.n))
        rep.checked += 1
        if joined.density > R.density * worst:
            rep.violations.append({"kind": "split2", "relation": sorted(R.tuples)})
    return rep
