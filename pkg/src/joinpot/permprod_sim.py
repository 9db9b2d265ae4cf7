"""Simulation of randomized small-depth formulas that list every path of a
permutation product.

The formulas are evaluated at the level of their outputs.  ``f`` is one when
the join candidates it collects agree on every bit of every coordinate.  The
``g`` bits are then the binary digits of the single path they describe.  Two
facts keep this cheap without changing any output:

* every element at coordinate ``h`` lies on exactly one full path, so a
  rectangle is stored as one bit per (coordinate, path) and a path segment
  lies in the rectangle when all of its bits are set;
* a join can only fire for a sub-rectangle that keeps a whole segment of the
  parent rectangle.  Sub-rectangles are therefore drawn conditionally on
  which segments survive, and only those with survivors are evaluated.
  Evaluation stops once the outputs are decided.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .chi_opt import as_profile, chi_lp, in_profile_set
from .jointree import JoinTree
from .threshold import instance_rng

NOT_ISOLATED = "not-isolated"
ISOLATED = "isolated"
INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class PermSequence:
    """Permutations ``pi_1 .. pi_k`` of ``range(n)``; ``pi_h`` maps coordinate ``h-1`` to ``h``."""

    n: int
    perms: tuple

    def __post_init__(self) -> None:
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        for p in perms:
            if sorted(p) != list(range(self.n)):
                raise ValueError("every entry must be a permutation of range(n)")
        object.__setattr__(self, "perms", perms)

    @property
    def k(self) -> int:
        return len(self.perms)

    def path_matrix(self) -> np.ndarray:
        """Row ``h`` holds coordinate ``h`` of the path starting at each ``x_0``."""
        X = np.empty((self.k + 1, self.n), dtype=np.int64)
        X[0] = np.arange(self.n)
        for h, p in enumerate(self.perms, start=1):
            X[h] = np.asarray(p)[X[h - 1]]
        return X

    def is_path(self, x: Sequence[int]) -> bool:
        return len(x) == self.k + 1 and all(self.perms[h - 1][x[h - 1]] == x[h] for h in range(1, self.k + 1))

    def to_json(self) -> list:
        return [list(p) for p in self.perms]


def random_permutations(n: int, k: int, seed: int, trial: int = 0) -> PermSequence:
    rng = instance_rng(seed, trial)
    return PermSequence(n, tuple(tuple(rng.permutation(n).tolist()) for _ in range(k)))


def compose_direct(seq: PermSequence) -> tuple[int, ...]:
    """``pi_k o ... o pi_1`` by pointwise application."""
    out = []
    for x in range(seq.n):
        for p in seq.perms:
            x = p[x]
        out.append(x)
    return tuple(out)


def true_paths(seq: PermSequence) -> set[tuple[int, ...]]:
    X = seq.path_matrix()
    return {tuple(int(v) for v in X[:, p]) for p in range(seq.n)}


@dataclass
class SimParams:
    c: float = 2.0  # exponent of the log factor in the number of samples
    equal_rule: str = "half"  # "half" or "shift" for coordinates the profile does not raise
    shift: Fraction = Fraction(1, 4)  # total extra raise per node under "shift"

    def __post_init__(self) -> None:
        if self.c <= 1:
            raise ValueError("the log exponent must exceed one")
        if self.equal_rule not in ("half", "shift"):
            raise ValueError("equal_rule is 'half' or 'shift'")


@dataclass
class PlanNode:
    lo: int
    hi: int
    rates: Optional[np.ndarray] = None  # keep probability per coordinate
    samples: int = 0
    left: Optional["PlanNode"] = None
    right: Optional["PlanNode"] = None

    @property
    def is_base(self) -> bool:
        return self.hi - self.lo == 1


def log_factor(n: int, c: float) -> float:
    return math.log2(n) ** c if n > 1 else 1.0


def build_plan(tree: JoinTree, profile: Sequence, n: int, params: SimParams) -> PlanNode:
    """Raised profiles from the LP at ``profile``, turned into sampling rates.

    A coordinate raised by ``d > 0`` keeps elements with probability ``n^-d``.
    An unraised coordinate keeps them with probability one half under
    ``"half"``; under ``"shift"`` every coordinate is raised by a further
    ``shift / k``.  The sample count is the inverse survival probability of a
    whole segment times the log factor.
    """
    a = as_profile(profile)
    sol = chi_lp(tree, a)
    nodes = sol.node_profiles
    lo0, hi0 = tree.interval
    k = hi0 - lo0
    counter = [0]

    def walk(node: JoinTree, inp: tuple) -> PlanNode:
        t = counter[0]
        counter[0] += 1
        lo, hi = node.interval
        plan = PlanNode(lo, hi)
        if plan.is_base:
            return plan
        b = nodes[t].values
        if nodes[t].interval != (lo, hi):
            raise AssertionError("LP node order does not match the tree")
        exps = []
        for bh, ah in zip(b, inp):
            d = float(bh - ah)
            if params.equal_rule == "shift":
                exps.append(d + float(params.shift) / k)
            else:
                exps.append(d if d > 0 else None)
        if n == 1:
            rates = np.ones(len(exps))
        else:
            rates = np.array([0.5 if e is None else n ** (-e) for e in exps])
        plan.rates = rates
        plan.samples = max(1, math.ceil(float(np.prod(1 / rates)) * log_factor(n, params.c)))
        plan.left = walk(node.left, b[node.left.interval[0] - lo : node.left.interval[1] - lo + 1])
        plan.right = walk(node.right, b[node.right.interval[0] - lo : node.right.interval[1] - lo + 1])
        return plan

    return walk(tree, a)


@dataclass
class IsolationOutcome:
    status: str
    path: Optional[int] = None  # index of the isolated path (its x_0)
    levels: dict = field(default_factory=dict)  # depth -> [sub-rectangles evaluated, joins fired]

    @property
    def isolated(self) -> bool:
        return self.status == ISOLATED


def _survivor_index(rng: np.random.Generator, m: int, prob: float, paths: np.ndarray) -> dict[int, list[int]]:
    """Which of the ``m`` sub-rectangles keep each whole segment."""
    index: dict[int, list[int]] = {}
    for q in paths:
        count = int(rng.binomial(m, prob))
        if count == 0:
            continue
        for pos in rng.choice(m, size=count, replace=False):
            index.setdefault(int(pos), []).append(int(q))
    return index


def _conditioned_subrectangle(
    rng: np.random.Generator, rect: np.ndarray, rates: np.ndarray, whole: np.ndarray, kept: list[int]
) -> np.ndarray:
    """Thin ``rect`` by ``rates`` given that, of the whole segments, exactly ``kept`` survive."""
    T = rect & (rng.random(rect.shape) < rates[:, None])
    if kept:
        T[:, kept] = True
    dropped = np.setdiff1d(whole, kept, assume_unique=True)
    while dropped.size:
        bad = dropped[T[:, dropped].all(axis=0)]
        if not bad.size:
            break
        T[:, bad] = rng.random((rect.shape[0], bad.size)) < rates[:, None]
        dropped = bad
    return T


def _isolate(plan: PlanNode, rect: np.ndarray, rng: np.random.Generator, levels: dict, depth: int) -> tuple[str, Optional[int]]:
    whole = np.flatnonzero(rect.all(axis=0))
    if whole.size == 0:
        return NOT_ISOLATED, None
    if plan.is_base:
        return (ISOLATED, int(whole[0])) if whole.size == 1 else (INCONSISTENT, None)
    prob = float(np.prod(plan.rates))
    index = _survivor_index(rng, plan.samples, prob, whole)
    stats = levels.setdefault(depth, [0, 0])
    found: set[int] = set()
    left, right = plan.left, plan.right
    for pos in sorted(index):
        T = _conditioned_subrectangle(rng, rect, plan.rates, whole, index[pos])
        stats[0] += 1
        ls, lp = _isolate(left, T[left.lo - plan.lo : left.hi - plan.lo + 1], rng, levels, depth + 1)
        if ls != ISOLATED:
            continue
        rs, rp = _isolate(right, T[right.lo - plan.lo : right.hi - plan.lo + 1], rng, levels, depth + 1)
        # the overlap is nonempty and a path is fixed by any one coordinate
        if rs != ISOLATED or rp != lp:
            continue
        stats[1] += 1
        found.add(lp)
        if len(found) > 1:
            return INCONSISTENT, None
        if whole.size == 1:
            break
    if not found:
        return NOT_ISOLATED, None
    return ISOLATED, found.pop()


def _as_rectangle(seq: PermSequence, sets: Sequence, lo: int = 0) -> np.ndarray:
    X = seq.path_matrix()
    rect = np.zeros((len(sets), seq.n), dtype=bool)
    for h, s in enumerate(sets):
        member = np.zeros(seq.n, dtype=bool)
        member[list(s)] = True
        rect[h] = member[X[lo + h]]
    return rect


def isolate(
    tree: JoinTree,
    profile: Sequence,
    seq: PermSequence,
    sets: Sequence,
    params: Optional[SimParams] = None,
    seed: int = 0,
    trial: int = 0,
    plan: Optional[PlanNode] = None,
) -> IsolationOutcome:
    """Outputs of ``f`` and ``g`` for the rectangle ``sets`` over the tree's interval."""
    params = params or SimParams()
    lo, hi = tree.interval
    if len(sets) != hi - lo + 1:
        raise ValueError("one set per coordinate of the tree's interval")
    if hi > seq.k:
        raise ValueError("tree interval exceeds the permutation sequence")
    plan = plan or build_plan(tree, profile, seq.n, params)
    rng = instance_rng(seed, trial)
    levels: dict = {}
    status, path = _isolate(plan, _as_rectangle(seq, sets, lo), rng, levels, 0)
    return IsolationOutcome(status, path, levels)


@dataclass
class EnumerationResult:
    paths: set
    complete: bool
    sound: bool
    rectangles: int  # outer rectangles that were evaluated
    outer_samples: int
    wallclock: float


def enumerate_paths(
    tree: JoinTree,
    profile: Sequence,
    seq: PermSequence,
    params: Optional[SimParams] = None,
    seed: int = 0,
    trial: int = 0,
    exhaustive: bool = False,
    plan: Optional[PlanNode] = None,
) -> EnumerationResult:
    """Run the isolation formulas on random outer rectangles and collect rows.

    Outer rectangles keep each element of coordinate ``h`` with probability
    ``n^-a_h``; there are ``n^|a|`` times the log factor of them.  Rectangles
    holding no whole path output nothing and are skipped.  By default each
    path is checked against its rectangles in order until one isolates it,
    which decides completeness exactly; ``exhaustive`` evaluates every
    rectangle that holds a path and so returns the full union of rows.
    """
    params = params or SimParams()
    a = as_profile(profile)
    if not in_profile_set(a):
        raise ValueError("profile sums to less than one")
    lo, hi = tree.interval
    if (lo, hi) != (0, seq.k):
        raise ValueError("tree must span the whole permutation sequence")
    start = time.perf_counter()
    n = seq.n
    plan = plan or build_plan(tree, a, n, params)
    rng = instance_rng(seed, trial)
    rates = np.array([n ** (-float(v)) for v in a])
    m = max(1, math.ceil(n ** float(sum(a)) * log_factor(n, params.c)))
    index = _survivor_index(rng, m, float(np.prod(rates)), np.arange(n))
    by_path: dict[int, list[int]] = {}
    for pos, ps in index.items():
        for p in ps:
            by_path.setdefault(p, []).append(pos)
    full = np.ones((seq.k + 1, n), dtype=bool)
    everything = np.arange(n)
    cache: dict[int, tuple[str, Optional[int]]] = {}

    def run(pos: int) -> tuple[str, Optional[int]]:
        hit = cache.get(pos)
        if hit is None:
            S = _conditioned_subrectangle(rng, full, rates, everything, index[pos])
            hit = _isolate(plan, S, rng, {}, 0)
            cache[pos] = hit
        return hit

    found: set[int] = set()
    if exhaustive:
        for pos in sorted(index):
            status, p = run(pos)
            if status == ISOLATED:
                found.add(p)
    else:
        for p in range(n):
            for pos in sorted(by_path.get(p, ())):
                status, q = run(pos)
                if status == ISOLATED:
                    found.add(q)
                    if q == p:
                        break
    X = seq.path_matrix()
    paths = {tuple(int(v) for v in X[:, p]) for p in found}
    sound = all(seq.is_path(x) for x in paths)
    return EnumerationResult(paths, len(found) == n, sound, len(cache), m, time.perf_counter() - start)


def count_paths_in_random_rectangle(seq: PermSequence, profile: Sequence, rng: np.random.Generator) -> int:
    """Sample ``S_h`` elementwise in value space and count the paths inside."""
    n = seq.n
    keep = [rng.random(n) < n ** (-float(v)) for v in profile]
    X = seq.path_matrix()
    inside = np.ones(n, dtype=bool)
    for h in range(seq.k + 1):
        inside &= keep[h][X[h]]
    return int(inside.sum())


# ---------------------------------------------------------------------------
# size accounting


@dataclass
class SizeEstimate:
    gates: float
    depth: int
    log_n_gates: float
    main_exponent: float  # log_n of the recurrence without log factors
    outputs_base: int

    def to_json(self) -> dict:
        return {
            "gates": self.gates,
            "depth": self.depth,
            "log_n_gates": self.log_n_gates,
            "main_exponent": self.main_exponent,
            "outputs_base": self.outputs_base,
        }


BASE_DEPTH = 4
DEPTH_STEP = 6


def symbolic_size(tree: JoinTree, profile: Sequence, n: int, params: Optional[SimParams] = None, outer: bool = True) -> SizeEstimate:
    """Gate count and depth from the size recurrence.

    ``z = m * (k * L)^2 * (z' + z'')`` with ``L = ceil(log2(n + 1))``, base
    ``3L + 1`` gates, and depth growing by a constant per level.  With
    ``outer`` the count covers the whole family of outer rectangles.  The
    main exponent keeps only the ``n^|b - a|`` factors.
    """
    params = params or SimParams()
    a = as_profile(profile)
    sol = chi_lp(tree, a)
    nodes = sol.node_profiles
    L = math.ceil(math.log2(n + 1))
    counter = [0]

    def walk(node: JoinTree, inp: tuple) -> tuple[float, int, float]:
        t = counter[0]
        counter[0] += 1
        lo, hi = node.interval
        if hi - lo == 1:
            return 3 * L + 1, BASE_DEPTH, 1.0
        b = nodes[t].values
        raise_sum = float(sum(b, Fraction(0)) - sum(inp, Fraction(0)))
        m = math.ceil(n**raise_sum * log_factor(n, params.c))
        (zl, dl, ml), (zr, dr, mr) = (
            walk(ch, b[ch.interval[0] - lo : ch.interval[1] - lo + 1]) for ch in (node.left, node.right)
        )
        k = hi - lo
        return m * (k * L) ** 2 * (zl + zr), max(dl, dr) + DEPTH_STEP, n**raise_sum * (ml + mr)

    z, d, main = walk(tree, a)
    if outer:
        m_outer = math.ceil(n ** float(sum(a)) * log_factor(n, params.c))
        z *= m_outer
        main *= n ** float(sum(a))
    return SizeEstimate(z, d, math.log(z, n), math.log(main, n), 2 * L + 1)
