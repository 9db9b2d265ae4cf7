import random
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.graph_core import Ambient, build_complete_binary_tree, build_path, restrict_away
from joinpot.jointree import (
    EMPTY,
    canonical_rd,
    enumerate_minimal_jointrees,
    join,
    random_jointree,
    restrict_jointree,
    sub_join_trees,
)
from joinpot.potential import (
    PotentialEngine,
    kappa_fixed_theta,
    min_phi_over_jointrees,
    phi,
    phi_cond,
    phi_decompose,
)
from joinpot.threshold import constant_theta, theta_infinity, uniform_walk_tree_theta


def graph_delta(G, theta) -> Fraction:
    return len(G.vertices) - sum((theta(e) for e in G.edges), Fraction(0))


def naive_phi(theta):
    """Direct transcription of the recursive characterisation on join-tree objects."""

    def dl(G, S=()):
        return graph_delta(restrict_away(G, S), theta)

    @lru_cache(maxsize=None)
    def rec(A) -> Fraction:
        if A is EMPTY or not A.edges:
            return Fraction(0)
        G = A.graph()
        if A.kind == "atom":
            return dl(G)
        best = Fraction(0)
        for X, Y in ((A.left, A.right), (A.right, A.left)):
            for D in sub_join_trees(X):
                val = rec(D) + dl(Y.graph(), D.vertices) + dl(G, Y.vertices | D.vertices)
                best = max(best, val)
        subs = list(sub_join_trees(A, proper=True))
        for D in subs:
            for E in subs:
                ED = restrict_jointree(E, D.vertices) if E is not EMPTY else EMPTY
                val = (rec(D) + rec(ED) + dl(G) + dl(G, D.vertices | E.vertices)) / 2
                best = max(best, val)
        return best

    return rec


def naive_phi_cond(theta):
    def dl(A, S):
        return graph_delta(restrict_away(A.graph(), S), theta)

    @lru_cache(maxsize=None)
    def rec(A, S: frozenset) -> Fraction:
        S = S & A.vertices
        if A.kind == "atom":
            return dl(A, S)
        B, C = A.left, A.right
        best = max(
            rec(B, S) + dl(C, S | B.vertices),
            rec(C, S) + dl(B, S | C.vertices),
            dl(B, S) + rec(C, S | B.vertices),
            dl(C, S) + rec(B, S | C.vertices),
        )
        for D in sub_join_trees(A, proper=True):
            if D is EMPTY or D.vertices <= S:
                continue
            best = max(best, (rec(D, S) + rec(A, S | D.vertices) + dl(A, S)) / 2)
        return best

    return rec


ONE = constant_theta(Ambient.PINF, 1)
P4_TREES = list(enumerate_minimal_jointrees(build_path(4)))


def test_engine_matches_naive_on_all_minimal_trees_of_p4():
    eng = PotentialEngine(build_path(4), ONE)
    ref = naive_phi(ONE)
    for A in P4_TREES:
        assert eng.phi(A) == ref(A)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_engine_matches_naive_on_t2_under_tinf(seed):
    T2 = build_complete_binary_tree(2)
    A = random_jointree(T2, seed)
    assert PotentialEngine(T2, theta_infinity()).phi(A) == naive_phi(theta_infinity())(A)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sets(st.integers(0, 5)))
def test_conditioned_engine_matches_naive(seed, S):
    P5 = build_path(5)
    A = random_jointree(P5, seed)
    assert PotentialEngine(P5, ONE).phi_cond(A, S) == naive_phi_cond(ONE)(A, frozenset(S))


def test_frozen_values():
    assert phi(canonical_rd(2), ONE).value == 1
    assert phi(canonical_rd(4), ONE).value == 2
    assert phi_cond(canonical_rd(2), [1], ONE).value == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_potential_dominates_deficiency_and_subtrees(seed):
    P6 = build_path(6)
    A = random_jointree(P6, seed)
    eng = PotentialEngine(P6, ONE)
    val = eng.phi(A)
    assert val >= graph_delta(A.graph(), ONE)
    for D in sub_join_trees(A):
        assert eng.phi(D) <= val


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_potential_ignores_child_order(seed):
    A = random_jointree(build_path(5), seed)
    eng = PotentialEngine(build_path(5), ONE)
    assert eng.phi(join(A.right, A.left)) == eng.phi(A)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_decomposition_identity_and_mass(seed):
    A = random_jointree(build_complete_binary_tree(2), seed)
    coeffs = phi_decompose(A, uniform_walk_tree_theta(2))
    assert all(c > 0 for c in coeffs.values())


def test_decomposition_on_p4_trees():
    eng = PotentialEngine(build_path(4), ONE)
    for A in P4_TREES:
        assert eng.check_decomposition(A) == (True, True)


def test_min_phi_modes():
    v_ex, A = min_phi_over_jointrees(build_path(4), ONE, "exhaustive")
    v_can, _ = min_phi_over_jointrees(build_path(4), ONE, "canonical")
    assert A.graph() == build_path(4)
    # the canonical family contains the minimal RD tree and overlapping trees
    rd = phi(canonical_rd(4), ONE).value
    assert v_ex <= rd and v_can <= rd
    v_s, _ = min_phi_over_jointrees(build_path(4), ONE, "sampled", samples=8, seed=1)
    assert v_ex <= v_s
    with pytest.raises(ValueError):
        min_phi_over_jointrees(build_path(2), ONE, "bogus")


def test_kappa_on_paths():
    # under unit weights a connected piece of a path has deficiency 1
    for k in range(1, 5):
        v, A = kappa_fixed_theta(build_path(k), ONE)
        assert v == 1
        assert A.graph() == build_path(k)


def test_trace_reports_rules():
    pv = phi(canonical_rd(4), ONE, trace=True)
    assert pv.trace and all("rule" in step for step in pv.trace)


def test_engine_is_deterministic_across_instances():
    rng = random.Random(3)
    trees = [random_jointree(build_path(6), rng.randrange(10**6)) for _ in range(5)]
    a = [PotentialEngine(build_path(6), ONE).phi(A) for A in trees]
    b = [PotentialEngine(build_path(6), ONE).phi(A) for A in trees]
    assert a == b
