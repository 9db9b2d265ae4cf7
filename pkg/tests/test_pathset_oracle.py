import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.graph_core import Ambient, CapExceeded, build_path
from joinpot.jointree import atom, canonical_rd, enumerate_minimal_jointrees
from joinpot.pathset_oracle import (
    DirectCoverOracle,
    PathsetComplexity,
    Relation,
    all_relations,
    check_chi_phi,
    check_split_lemmas,
    density_at_most,
    empty_relation,
    full_relation,
    is_pathset,
    join,
    pathset_complexity_bruteforce,
    phi_bound_holds,
    project,
    random_relation,
    rectangle_pathset,
    relation_from_dicts,
    restrict,
)
from joinpot.potential import PotentialEngine
from joinpot.threshold import constant_theta

ONE = constant_theta(Ambient.PINF, 1)
P1, P2 = build_path(1), build_path(2)


def relations(vars, n=2):
    return st.integers(0, 10**9).map(lambda s: random_relation(vars, n, random.Random(s)))


def test_unsorted_coordinates_are_normalised_with_their_values():
    R = Relation((2, 0), frozenset({(1, 0)}), 2)
    assert R.vars == (0, 2)
    assert R.as_dicts() == [{0: 0, 2: 1}]
    assert R == relation_from_dicts([0, 2], [{0: 0, 2: 1}], 2)


def test_values_outside_range_rejected():
    with pytest.raises(ValueError):
        Relation((0,), frozenset({(3,)}), 2)


@settings(max_examples=80, deadline=None)
@given(relations([0, 1]), relations([1, 2]))
def test_join_is_largest_relation_with_both_projections_inside(A, B):
    J = join(A, B)
    assert J.vars == (0, 1, 2)
    assert project(J, A.vars).issubset(A)
    assert project(J, B.vars).issubset(B)
    for t in full_relation([0, 1, 2], 2):
        row = dict(zip(J.vars, t))
        inside = (row[0], row[1]) in A.tuples and (row[1], row[2]) in B.tuples
        assert (t in J.tuples) == inside
    assert join(B, A) == J


@settings(max_examples=80, deadline=None)
@given(relations([0, 1, 2]), st.integers(0, 1))
def test_restrict_matches_definition(A, value):
    R = restrict(A, {1: value})
    assert R.vars == (0, 2)
    assert R.tuples == frozenset((a, c) for a, b, c in A.tuples if b == value)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 64), st.integers(0, 3), st.integers(2, 4), st.fractions(-2, 3, max_denominator=6))
def test_density_comparison_matches_exact_powers(count, free, n, exponent):
    # compare count/n^free <= n^-exponent by raising both sides to the denominator
    q = exponent.denominator
    lhs = Fraction(count, n**free) ** q
    rhs = Fraction(n) ** -exponent.numerator
    assert density_at_most(count, free, n, exponent) == (lhs <= rhs)


def test_pathsets_are_downward_closed():
    pathsets = [R for R in all_relations([0, 1, 2], 2) if is_pathset(R, P2, (), ONE)]
    masks = {R.tuples for R in pathsets}
    for R in pathsets:
        for t in R.tuples:
            assert R.tuples - {t} in masks


def test_single_edge_pathsets():
    # unit weight: the whole edge relation may have density 1/2, each restriction 1/2
    full = full_relation([0, 1], 2)
    assert not is_pathset(full, P1, (), ONE)
    diag = Relation((0, 1), frozenset({(0, 0), (1, 1)}), 2)
    assert is_pathset(diag, P1, (), ONE)
    assert is_pathset(empty_relation([0, 1], 2), P1, (), ONE)


def test_rectangle_from_profile_is_a_pathset():
    R = rectangle_pathset([Fraction(1, 2)] * 3, [{0, 1}, {1, 2}, {0, 3}], 4)
    assert len(R) == 8
    assert is_pathset(R, P2, (), ONE, cap=3)
    with pytest.raises(ValueError):
        rectangle_pathset([Fraction(1, 2)] * 3, [{0, 1, 2}, {1}, {0}], 4)


def test_universe_cap():
    with pytest.raises(CapExceeded):
        PathsetComplexity(canonical_rd(4), (), ONE, 2)


@pytest.mark.parametrize("tree", list(enumerate_minimal_jointrees(P2, ordered=True)) + [atom((0, 1))])
def test_main_route_matches_direct_cover(tree):
    main = PathsetComplexity(tree, (), ONE, 2)
    oracle = DirectCoverOracle(tree, (), ONE, 2)
    for m in range(main.space.full + 1):
        assert main.value_mask(m) == oracle.value_mask(m)


def test_conditioned_space_drops_excluded_vertices():
    tree = canonical_rd(2)
    main = PathsetComplexity(tree, {1}, ONE, 2)
    oracle = DirectCoverOracle(tree, {1}, ONE, 2)
    assert main.space.vars == (0, 2)
    for m in range(main.space.full + 1):
        assert main.value_mask(m) == oracle.value_mask(m)


@settings(max_examples=30, deadline=None)
@given(relations([0, 1, 2]))
def test_certificate_witnesses_value(R):
    tree = canonical_rd(2)
    cert = pathset_complexity_bruteforce(tree, (), R, ONE)
    covered = frozenset().union(*(triple[0].tuples for triple in cert.family)) if cert.family else frozenset()
    assert covered == R.tuples
    for whole, left, right in cert.family:
        assert whole.tuples <= join(left, right).tuples
    assert cert.value == PathsetComplexity(tree, (), ONE, 2).value(R)


def test_atomic_complexity_counts_blocks():
    leaf = atom((0, 1))
    main = PathsetComplexity(leaf, (), ONE, 2)
    assert main.value(empty_relation([0, 1], 2)) == 0
    assert main.value(full_relation([0, 1], 2)) == 2


def test_phi_bound_on_two_edge_path():
    trees = list(enumerate_minimal_jointrees(P2, ordered=True))
    eng = PotentialEngine(P2, ONE)
    rep = check_chi_phi(trees, ONE, 2, lambda A: eng.phi_cond(A, ()))
    assert rep.passed
    assert rep.checked == 2 * 256


def test_phi_bound_integer_form():
    assert phi_bound_holds(4, 2, 2, Fraction(0), 1)
    assert not phi_bound_holds(4, 2, 2, Fraction(1), 1)
    assert phi_bound_holds(4, 2, 2, Fraction(1), 2)
    assert phi_bound_holds(1, 0, 2, Fraction(-1), 1)


def test_split_lemmas_on_random_relations():
    rng = random.Random(5)
    rels = [random_relation(range(3), 2, rng) for _ in range(30)]
    assert check_split_lemmas(rels, rng).passed
