"""The profile measure on path join-trees, evaluated as a linear program.

A profile over ``0..k`` is a vector of rationals in ``[0, 1]`` summing to at
least one.  For a connected join-tree over the path, each internal node takes
an input profile on its interval, raises it coordinatewise at unit cost per
unit of increase, and hands the raised profile's restrictions to its
children; every child input must again sum to at least one.  A node pays its
raise plus the larger of its children's costs, and length-one intervals cost
nothing.  The measure of a tree at a fixed profile is the least root cost;
the free version also pays the root profile's sum and optimises it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .graph_core import CapExceeded
from .jointree import JoinTree, connected_interval_trees, fib, fib_index, is_connected_jointree, unique_nodes
from .simplex import solve_exact_lp

ProfileVector = tuple  # tuple of Fractions indexed 0..k


def as_profile(values: Sequence) -> ProfileVector:
    out = tuple(Fraction(v) for v in values)
    if any(v < 0 or v > 1 for v in out):
        raise ValueError("profile entries must lie in [0, 1]")
    return out


def in_profile_set(a: Sequence) -> bool:
    return all(0 <= v <= 1 for v in a) and sum(a, Fraction(0)) >= 1


def parse_profile(spec: str, k: int) -> Optional[ProfileVector]:
    """``rd``, ``mo``, ``fib``, ``free`` (returns None) or comma-separated rationals."""
    spec = spec.strip()
    table = {"rd": rd_profile, "mo": mo_profile, "fib": fib_profile}
    if spec == "free":
        return None
    if spec in table:
        return table[spec](k)
    return as_profile(Fraction(x) for x in spec.split(","))


# ---------------------------------------------------------------------------
# explicit profiles


def rd_profile(k: int) -> ProfileVector:
    """One half at both ends and at ``ceil(k / 2)``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    a = [Fraction(0)] * (k + 1)
    for h in (0, (k + 1) // 2, k):
        a[h] = Fraction(1, 2)
    return tuple(a)


def mo_profile(k: int) -> ProfileVector:
    """For ``k = 2^l + t``: ``t`` entries of ``2^-(l+1)``, then ``2^l - t + 1``
    entries of ``2^-l``, then ``t`` entries of ``2^-(l+1)``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    l = k.bit_length() - 1
    t = k - (1 << l)
    small, big = Fraction(1, 1 << (l + 1)), Fraction(1, 1 << l)
    return tuple([small] * t + [big] * ((1 << l) - t + 1) + [small] * t)


def fib_profile(k: int) -> ProfileVector:
    """One third at four positions whose zero runs are at most
    ``Fib(l-2) - 1``, ``Fib(l-3) - 1``, ``Fib(l-2) - 1`` where ``Fib(l-1) < k <= Fib(l)``.

    For Fibonacci ``k`` the runs are exactly those lengths; otherwise the
    middle run absorbs what it can and the outer runs share the rest evenly.
    ``k = 2`` has room for only three positions and gets one third at each.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    third = Fraction(1, 3)
    if k == 2:
        return (third, third, third)
    l = max(fib_index(k), 4)
    outer_cap, mid_cap = fib(l - 2) - 1, fib(l - 3) - 1
    zeros = k - 3
    mid = max(0, zeros - 2 * outer_cap)
    mid = min(mid, mid_cap)
    left = (zeros - mid + 1) // 2
    right = zeros - mid - left
    if left > outer_cap or right > outer_cap:
        raise AssertionError("zero runs exceed their caps")
    a = [Fraction(0)] * (k + 1)
    for h in (0, left + 1, left + mid + 2, k):
        a[h] = third
    return tuple(a)


# ---------------------------------------------------------------------------
# LP construction


@dataclass
class _Node:
    lo: int
    hi: int
    parent: Optional[int]
    children: list[int] = field(default_factory=list)
    parents: list[int] = field(default_factory=list)
    b_start: int = -1  # first column of the raised profile (internal nodes)
    cost: int = -1  # cost column (internal nodes)

    @property
    def internal(self) -> bool:
        return self.hi - self.lo >= 2


def _positional_nodes(A: JoinTree, cap: int) -> list[_Node]:
    nodes: list[_Node] = []
    stack = [(A, None)]
    while stack:
        n, parent = stack.pop()
        lo, hi = n.interval
        nodes.append(_Node(lo, hi, parent))
        me = len(nodes) - 1
        if len(nodes) > cap:
            raise CapExceeded(f"join-tree has more than {cap} positional nodes")
        if parent is not None:
            nodes[parent].children.append(me)
            nodes[me].parents.append(parent)
        if n.kind == "join":
            stack.append((n.right, me))
            stack.append((n.left, me))
    return nodes


@dataclass
class LinearProgram:
    """``min c.x`` s.t. ``A_ub x <= b_ub``, ``lo <= x <= hi`` (``hi`` may be inf)."""

    c: list[Fraction]
    rows: list[dict[int, Fraction]]
    rhs: list[Fraction]
    lo: list[Fraction]
    hi: list[Optional[Fraction]]
    root_cols: list[int]
    nodes: list[_Node]
    offset: Fraction = Fraction(0)

    @property
    def n(self) -> int:
        return len(self.c)


def build_lp(A: JoinTree, a: Optional[Sequence], cap: int = 200_000) -> LinearProgram:
    """LP for the measure of ``A`` at profile ``a`` (free profile when None)."""
    if A.is_empty or not A.edges:
        raise ValueError("join-tree has no edges")
    if not is_connected_jointree(A):
        raise ValueError("the profile measure needs a connected join-tree")
    lo0, hi0 = A.interval
    k = hi0 - lo0
    if a is not None:
        a = as_profile(a)
        if len(a) != k + 1:
            raise ValueError(f"profile has {len(a)} entries, tree needs {k + 1}")
        if not in_profile_set(a):
            raise ValueError("profile sums to less than one")
    nodes = _positional_nodes(A, cap)
    c: list[Fraction] = []
    lo: list[Fraction] = []
    hi: list[Optional[Fraction]] = []

    def new_col(l, h, cost=Fraction(0)) -> int:
        c.append(cost)
        lo.append(l)
        hi.append(h)
        return len(c) - 1

    root_cols = []
    for h in range(k + 1):
        if a is None:
            root_cols.append(new_col(Fraction(0), Fraction(1), Fraction(1)))
        else:
            root_cols.append(new_col(a[h], a[h]))
    for node in nodes:
        if node.internal:
            node.b_start = len(c)
            for _ in range(node.hi - node.lo + 1):
                new_col(Fraction(0), Fraction(1))
            node.cost = new_col(Fraction(0), None)
    if nodes[0].internal:
        c[nodes[0].cost] = Fraction(1)

    def input_cols(t: int) -> list[int]:
        node = nodes[t]
        if node.parent is None:
            return [root_cols[h - lo0] for h in range(node.lo, node.hi + 1)]
        par = nodes[node.parent]
        return [par.b_start + (h - par.lo) for h in range(node.lo, node.hi + 1)]

    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for t, node in enumerate(nodes):
        p = input_cols(t)
        if node.parent is not None or a is None:
            rows.append({j: Fraction(-1) for j in p})
            rhs.append(Fraction(-1))
        if not node.internal:
            continue
        b = list(range(node.b_start, node.b_start + len(p)))
        for pj, bj in zip(p, b):
            rows.append({pj: Fraction(1), bj: Fraction(-1)})
            rhs.append(Fraction(0))
        for ch in node.children:
            row: dict[int, Fraction] = {}
            for pj, bj in zip(p, b):
                row[bj] = row.get(bj, 0) + 1
                row[pj] = row.get(pj, 0) - 1
            row[node.cost] = Fraction(-1)
            if nodes[ch].internal:
                row[nodes[ch].cost] = Fraction(1)
            rows.append(row)
            rhs.append(Fraction(0))
    return LinearProgram(c, rows, rhs, lo, hi, root_cols, nodes)


def build_shared_lp(A: JoinTree, a: Optional[Sequence]) -> LinearProgram:
    """LP with one set of variables per distinct subtree rather than per position.

    A repeated subtree must then serve every parent with a single raised
    profile and a single cost bounded below by each parent's requirement, so
    the optimum is an upper bound on the positional optimum.  It keeps the
    maximally overlapping family polynomial in size.
    """
    if A.is_empty or not A.edges:
        raise ValueError("join-tree has no edges")
    if not is_connected_jointree(A):
        raise ValueError("the profile measure needs a connected join-tree")
    lo0, hi0 = A.interval
    k = hi0 - lo0
    if a is not None:
        a = as_profile(a)
        if len(a) != k + 1 or not in_profile_set(a):
            raise ValueError("profile does not fit the tree or sums to less than one")
    order = list(reversed(unique_nodes(A)))  # parents first
    pos = {id(n): t for t, n in enumerate(order)}
    nodes = [_Node(*n.interval, None) for n in order]
    parents: list[list[int]] = [[] for _ in order]
    for t, n in enumerate(order):
        if n.kind == "join":
            for ch in (n.left, n.right):
                nodes[t].children.append(pos[id(ch)])
                parents[pos[id(ch)]].append(t)
                nodes[pos[id(ch)]].parents.append(t)
    c: list[Fraction] = []
    lo: list[Fraction] = []
    hi: list[Optional[Fraction]] = []

    def new_col(l, h, cost=Fraction(0)) -> int:
        c.append(cost)
        lo.append(l)
        hi.append(h)
        return len(c) - 1

    root_cols = []
    for h in range(k + 1):
        if a is None:
            root_cols.append(new_col(Fraction(0), Fraction(1), Fraction(1)))
        else:
            root_cols.append(new_col(a[h], a[h]))
    for node in nodes:
        if node.internal:
            node.b_start = len(c)
            for _ in range(node.hi - node.lo + 1):
                new_col(Fraction(0), Fraction(1))
            node.cost = new_col(Fraction(0), None)
    if nodes[0].internal:
        c[nodes[0].cost] = Fraction(1)

    def inputs(t: int) -> list[list[int]]:
        node = nodes[t]
        if not parents[t]:
            return [[root_cols[h - lo0] for h in range(node.lo, node.hi + 1)]]
        out = []
        for par_t in parents[t]:
            par = nodes[par_t]
            out.append([par.b_start + (h - par.lo) for h in range(node.lo, node.hi + 1)])
        return out

    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for t, node in enumerate(nodes):
        for p in inputs(t):
            if parents[t] or a is None:
                rows.append({j: Fraction(-1) for j in p})
                rhs.append(Fraction(-1))
            if not node.internal:
                continue
            b = list(range(node.b_start, node.b_start + len(p)))
            for pj, bj in zip(p, b):
                rows.append({pj: Fraction(1), bj: Fraction(-1)})
                rhs.append(Fraction(0))
            for ch in node.children:
                row: dict[int, Fraction] = {}
                for pj, bj in zip(p, b):
                    row[bj] = row.get(bj, 0) + 1
                    row[pj] = row.get(pj, 0) - 1
                row[node.cost] = Fraction(-1)
                if nodes[ch].internal:
                    row[nodes[ch].cost] = Fraction(1)
                rows.append(row)
                rhs.append(Fraction(0))
    return LinearProgram(c, rows, rhs, lo, hi, root_cols, nodes)


@dataclass
class LpSolution:
    objective: Fraction
    status: str
    profile: ProfileVector
    node_profiles: list[tuple[tuple[int, int], ProfileVector]]
    lower: Optional[Fraction] = None
    exact: bool = False
    raw_objective: float = float("nan")

    def to_json(self) -> dict:
        return {
            "value": str(self.objective),
            "value_float": float(self.objective),
            "certified_lower": None if self.lower is None else str(self.lower),
            "exact": self.exact,
            "status": self.status,
            "profile": [str(v) for v in self.profile],
        }


def _lp_arrays(lp: LinearProgram):
    from scipy.sparse import csr_matrix

    data, ri, ci = [], [], []
    for i, row in enumerate(lp.rows):
        for j, v in row.items():
            if v:
                ri.append(i)
                ci.append(j)
                data.append(float(v))
    A = csr_matrix((data, (ri, ci)), shape=(len(lp.rows), lp.n))
    bounds = [(float(l), None if h is None else float(h)) for l, h in zip(lp.lo, lp.hi)]
    return np.array([float(v) for v in lp.c]), A, np.array([float(v) for v in lp.rhs]), bounds


def _rationalise(x: float, den: int = 1 << 20) -> Fraction:
    return Fraction(x).limit_denominator(den)


def _exact_feasible(lp: LinearProgram, x: list[Fraction]) -> bool:
    for l, h, v in zip(lp.lo, lp.hi, x):
        if v < l or (h is not None and v > h):
            return False
    for row, r in zip(lp.rows, lp.rhs):
        if sum((v * x[j] for j, v in row.items()), Fraction(0)) > r:
            return False
    return True


def _raise_to_one(x: list[Fraction], cols: list[int]) -> None:
    deficit = 1 - sum((x[j] for j in cols), Fraction(0))
    for j in cols:
        if deficit <= 0:
            break
        step = min(deficit, 1 - x[j])
        x[j] += step
        deficit -= step


def _repair(lp: LinearProgram, x: list[Fraction]) -> list[Fraction]:
    """Turn a rounded solver point into an exactly feasible one.

    Profiles are pushed up parent-first until they dominate their inputs and
    every child slice sums to one; costs are then recomputed child-first as
    the least values the cost rows allow.
    """
    x = list(x)
    for j, (l, h) in enumerate(zip(lp.lo, lp.hi)):
        x[j] = max(x[j], l)
        if h is not None:
            x[j] = min(x[j], h)
    nodes = lp.nodes
    lo0 = nodes[0].lo

    def input_cols(t: int) -> list[list[int]]:
        node = nodes[t]
        if not node.parents:
            return [[lp.root_cols[h - lo0] for h in range(node.lo, node.hi + 1)]]
        return [
            [nodes[p].b_start + h - nodes[p].lo for h in range(node.lo, node.hi + 1)] for p in node.parents
        ]

    if lp.lo[lp.root_cols[0]] != lp.hi[lp.root_cols[0]]:
        _raise_to_one(x, lp.root_cols)
    for t, node in enumerate(nodes):
        if not node.internal:
            continue
        b = list(range(node.b_start, node.b_start + node.hi - node.lo + 1))
        for p in input_cols(t):
            for pj, bj in zip(p, b):
                x[bj] = max(x[bj], x[pj])
        for ch in node.children:
            chn = nodes[ch]
            _raise_to_one(x, b[chn.lo - node.lo : chn.hi - node.lo + 1])
    for t in reversed(range(len(nodes))):
        node = nodes[t]
        if not node.internal:
            continue
        b = range(node.b_start, node.b_start + node.hi - node.lo + 1)
        raise_cost = max(sum((x[bj] - x[pj] for pj, bj in zip(p, b)), Fraction(0)) for p in input_cols(t))
        child = max((x[nodes[ch].cost] for ch in node.children if nodes[ch].internal), default=Fraction(0))
        x[node.cost] = raise_cost + child
    return x


def _dual_lower_bound(lp: LinearProgram, y: np.ndarray, cost_cap: Fraction) -> Optional[Fraction]:
    """Exact lower bound ``min over the box of (c + A^T y) x - b.y`` for ``y >= 0``.

    Cost columns have no upper bound, but some optimum has every cost at most
    the root cost, hence at most ``cost_cap`` (any feasible objective).
    """
    yq = [max(Fraction(0), _rationalise(float(v))) for v in y]
    red = list(lp.c)
    for yi, row in zip(yq, lp.rows):
        if yi:
            for j, v in row.items():
                red[j] += yi * v
    total = -sum((yi * r for yi, r in zip(yq, lp.rhs)), Fraction(0))
    for rj, l, h in zip(red, lp.lo, lp.hi):
        if rj >= 0:
            total += rj * l
        elif h is None:
            total += rj * cost_cap
        else:
            total += rj * h
    return total


@dataclass(frozen=True)
class NodeProfile:
    """Raised profile of one join-tree node; ``parents`` index into the same
    list and are empty for the root, whose input is the solution's profile."""

    interval: tuple[int, int]
    parents: tuple[int, ...]
    values: Optional[ProfileVector]  # None for length-one intervals


def _solution_from_x(lp: LinearProgram, x: Sequence) -> tuple[ProfileVector, list[NodeProfile]]:
    x = [Fraction(v) for v in x]
    profile = tuple(x[j] for j in lp.root_cols)
    per_node = []
    for node in lp.nodes:
        vals = None
        if node.internal:
            vals = tuple(x[node.b_start : node.b_start + node.hi - node.lo + 1])
        per_node.append(NodeProfile((node.lo, node.hi), tuple(node.parents), vals))
    return profile, per_node


def chi_lp(
    A: JoinTree,
    a: Optional[Sequence] = None,
    exact: bool = False,
    cap: int = 200_000,
    shared: bool = False,
) -> LpSolution:
    """Measure of ``A`` at profile ``a``; with ``a=None`` optimise measure plus sum.

    Floating mode solves with HiGHS, rationalises the primal point, repairs
    the cost columns so the point is exactly feasible, and reports its exact
    objective together with an exact dual lower bound.  Exact mode runs the
    rational simplex.  ``shared`` selects the per-subtree formulation, whose
    value is an upper bound.
    """
    lp = build_shared_lp(A, a) if shared else build_lp(A, a, cap)
    if exact:
        return _solve_exact(lp, A)
    c, Aub, bub, bounds = _lp_arrays(lp)
    res = linprog(c, A_ub=Aub, b_ub=bub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    xq = _repair(lp, [_rationalise(v) for v in res.x])
    if not _exact_feasible(lp, xq):
        raise RuntimeError("rationalised LP point is not exactly feasible")
    obj = sum((ci * xi for ci, xi in zip(lp.c, xq)), Fraction(0))
    lower = _dual_lower_bound(lp, -res.ineqlin.marginals, obj)
    profile, per_node = _solution_from_x(lp, xq)
    return LpSolution(obj, "optimal", profile, per_node, lower, False, float(res.fun))


def _solve_exact(lp: LinearProgram, A: JoinTree) -> LpSolution:
    # shift x = lo + y with y >= 0; finite upper bounds become rows
    n = lp.n
    rows, rhs = [], []
    for row, r in zip(lp.rows, lp.rhs):
        dense = [Fraction(0)] * n
        shift = Fraction(0)
        for j, v in row.items():
            dense[j] = v
            shift += v * lp.lo[j]
        rows.append(dense)
        rhs.append(r - shift)
    for j, (l, h) in enumerate(zip(lp.lo, lp.hi)):
        if h is not None and h != l:
            dense = [Fraction(0)] * n
            dense[j] = Fraction(1)
            rows.append(dense)
            rhs.append(h - l)
    fixed = [j for j, (l, h) in enumerate(zip(lp.lo, lp.hi)) if h is not None and h == l]
    for j in fixed:
        dense = [Fraction(0)] * n
        dense[j] = Fraction(1)
        rows.append(dense)
        rhs.append(Fraction(0))
    res = solve_exact_lp(lp.c, rows, rhs)
    if res.status != "optimal":
        raise RuntimeError(f"exact LP status {res.status}")
    x = [l + y for l, y in zip(lp.lo, res.x)]
    obj = sum((ci * xi for ci, xi in zip(lp.c, x)), Fraction(0))
    profile, per_node = _solution_from_x(lp, x)
    return LpSolution(obj, "optimal", profile, per_node, obj, True, float(obj))


def verify_solution(sol: LpSolution, free: bool) -> bool:
    """Re-evaluate the returned profiles in exact arithmetic.

    Every node input lies in the profile set, raised profiles dominate their
    inputs and stay in ``[0, 1]``, and the recursive cost they imply (plus the
    profile sum when ``free``) does not exceed the reported objective.
    """
    nodes = sol.node_profiles
    if not in_profile_set(sol.profile):
        return False
    lo0 = nodes[0].interval[0]

    def node_inputs(t: int) -> list[tuple]:
        lo, hi = nodes[t].interval
        if not nodes[t].parents:
            return [sol.profile[lo - lo0 : hi - lo0 + 1]]
        out = []
        for par in nodes[t].parents:
            plo = nodes[par].interval[0]
            out.append(nodes[par].values[lo - plo : hi - plo + 1])
        return out

    children: list[list[int]] = [[] for _ in nodes]
    for t, n in enumerate(nodes):
        for par in n.parents:
            children[par].append(t)
    cost: dict[int, Fraction] = {}
    for t in sorted(range(len(nodes)), key=lambda t: nodes[t].interval[1] - nodes[t].interval[0]):
        n = nodes[t]
        raise_cost = Fraction(0)
        for p in node_inputs(t):
            if not in_profile_set(p):
                return False
            if n.values is None:
                continue
            if any(bv < pv or bv > 1 for bv, pv in zip(n.values, p)):
                return False
            raise_cost = max(raise_cost, sum(n.values, Fraction(0)) - sum(p, Fraction(0)))
        cost[t] = Fraction(0) if n.values is None else raise_cost + max(cost[ch] for ch in children[t])
    total = cost[0] + (sum(sol.profile, Fraction(0)) if free else 0)
    return total <= sol.objective


# ---------------------------------------------------------------------------
# global minimum over interval-split trees


def chi_global(k: int, a: Sequence, cap: int = 5) -> tuple[Fraction, JoinTree]:
    """Least measure over every connected interval-split join-tree over ``P_k``."""
    if k > cap:
        raise CapExceeded(f"k={k} exceeds the exhaustive tree cap {cap}")
    best = None
    for A in connected_interval_trees(0, k):
        v = chi_lp(A, a).objective
        if best is None or v < best[0]:
            best = (v, A)
    return best


# ---------------------------------------------------------------------------
# grid oracle


GRID_CELL_CAP = 20_000_000


def grid_value(A: JoinTree, a: Sequence, resolution: Optional[int] = None) -> tuple[float, int]:
    """Direct dynamic programme over a per-coordinate grid ``a_h + t / R``.

    Each node's value table is computed from its children's by a suffix
    minimum along every axis.  Returns ``(value, R)``; the value is an upper
    bound on the exact measure that tightens as ``R`` grows.
    """
    a = [float(v) for v in as_profile(a)]
    lo0, hi0 = A.interval
    k = hi0 - lo0
    if resolution is None:
        for R in (64, 32, 16, 8):
            if _grid_cells(a, R) <= GRID_CELL_CAP:
                resolution = R
                break
        else:
            raise CapExceeded("grid too large even at resolution 1/8")
    R = resolution
    if _grid_cells(a, R) > GRID_CELL_CAP:
        raise CapExceeded("grid exceeds the cell cap")
    axes = [a[h] + np.arange(int(math.floor((1 - a[h]) * R + 1e-9)) + 1) / R for h in range(k + 1)]
    eps = 1e-12

    def table(node: JoinTree) -> np.ndarray:
        lo, hi = node.interval
        coords = [axes[h - lo0] for h in range(lo, hi + 1)]
        grids = np.meshgrid(*coords, indexing="ij")
        psum = sum(grids)
        if hi - lo == 1:
            return np.where(psum >= 1 - eps, 0.0, np.inf)
        vals = []
        for ch in (node.left, node.right):
            clo, chi_ = ch.interval
            sub = table(ch)
            shape = [1] * (hi - lo + 1)
            for h in range(clo, chi_ + 1):
                shape[h - lo] = len(coords[h - lo])
            vals.append(sub.reshape(shape))
        W = np.maximum(vals[0], vals[1])
        U = psum + W
        for ax in range(U.ndim):
            U = np.flip(np.minimum.accumulate(np.flip(U, ax), axis=ax), ax)
        V = U - psum
        V[psum < 1 - eps] = np.inf
        return V

    T = table(A)
    return float(T[(0,) * T.ndim]), R


def _grid_cells(a: Sequence[float], R: int) -> int:
    out = 1
    for v in a:
        out *= int(math.floor((1 - v) * R + 1e-9)) + 1
    return out
