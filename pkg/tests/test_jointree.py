import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.graph_core import Ambient, CapExceeded, PatternGraph, build_complete_binary_tree, build_path
from joinpot.jointree import (
    EMPTY,
    atom,
    canonical_fo,
    canonical_mo,
    canonical_rd,
    canonical_tk,
    connected_interval_trees,
    double_factorial_count,
    enumerate_minimal_jointrees,
    fib,
    fib_index,
    is_connected_jointree,
    is_minimal,
    join,
    parse_sexp,
    parse_tree_spec,
    random_jointree,
    restrict_jointree,
    sub_join_trees,
    to_sexp,
    unique_nodes,
)


def odd_double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@pytest.mark.parametrize("q", range(1, 7))
def test_minimal_jointree_count(q):
    trees = list(enumerate_minimal_jointrees(build_path(q)))
    assert len(trees) == odd_double_factorial(2 * q - 3) == double_factorial_count(q)
    assert len(set(trees)) == len(trees)
    assert all(is_minimal(A, build_path(q)) for A in trees)


def test_ordered_enumeration_counts_every_child_order():
    for q in range(1, 5):
        n = sum(1 for _ in enumerate_minimal_jointrees(build_path(q), ordered=True))
        assert n == double_factorial_count(q) * 2 ** (q - 1)
    assert sum(1 for _ in enumerate_minimal_jointrees(build_path(2), ordered=True)) == 2


def test_t2_has_945_minimal_jointrees():
    assert sum(1 for _ in enumerate_minimal_jointrees(build_complete_binary_tree(2))) == 945


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        next(enumerate_minimal_jointrees(build_path(8)))


def test_hash_consing_shares_nodes():
    a = join(atom((0, 1)), atom((1, 2)))
    b = join(atom((0, 1)), atom((1, 2)))
    assert a is b
    with pytest.raises(TypeError):
        type(a)()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 7))
def test_sexp_round_trip(seed, q):
    A = random_jointree(build_path(q), seed)
    assert parse_sexp(to_sexp(A)) is A
    assert A.graph() == build_path(q)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_sexp_round_trip_on_tree_ambient(seed):
    A = random_jointree(build_complete_binary_tree(2), seed)
    assert parse_sexp(to_sexp(A), Ambient.TINF) is A


@pytest.mark.parametrize("k", [1, 2, 3, 4, 7, 8, 16])
def test_canonical_rd_covers_path(k):
    A = canonical_rd(k)
    assert A.graph() == build_path(k)
    assert is_connected_jointree(A)
    assert is_minimal(A, build_path(k))


def test_canonical_rd_split_is_balanced():
    A = canonical_rd(6)
    assert (A.left.interval, A.right.interval) == ((0, 3), (3, 6))


@pytest.mark.parametrize("k", range(2, 12))
def test_canonical_mo_children_and_sharing(k):
    A = canonical_mo(k)
    assert (A.left.interval, A.right.interval) == ((0, k - 1), (1, k))
    # one node per sub-interval of positive length
    assert len(unique_nodes(A)) == k * (k + 1) // 2


def test_canonical_fo_splits_on_fibonacci_overlap():
    for ell in range(4, 10):
        k = fib(ell)
        A = canonical_fo(k)
        L = fib(ell - 1)
        assert (A.left.interval, A.right.interval) == ((0, L), (k - L, k))
        assert fib_index(k) == ell
    A = canonical_fo(13)
    assert (A.left.interval, A.right.interval) == ((0, 8), (5, 13))
    assert A.graph() == build_path(13)


def test_canonical_tk_matches_tree():
    for k in range(1, 4):
        A = canonical_tk(k)
        assert A.graph() == build_complete_binary_tree(k)
        assert is_minimal(A, build_complete_binary_tree(k))


def test_tree_spec_parsing():
    assert parse_tree_spec("rd:4") is canonical_rd(4)
    assert parse_tree_spec("(join (atom 0 1) (atom 1 2))") is join(atom((0, 1)), atom((1, 2)))


def test_connected_interval_tree_counts():
    counts = [len(connected_interval_trees(0, k)) for k in range(1, 6)]
    assert counts == [1, 1, 3, 22, 719]
    assert all(is_connected_jointree(A) for A in connected_interval_trees(0, 4))
    with pytest.raises(CapExceeded):
        connected_interval_trees(0, 6, cap=1000)


def test_sub_join_trees_enumerates_positions():
    A = canonical_rd(4)
    subs = list(sub_join_trees(A))
    assert subs[0] is EMPTY and subs[1] is A
    assert len(subs) == 1 + 7
    assert len(list(sub_join_trees(A, proper=True))) == 1 + 6


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sets(st.integers(0, 6)))
def test_restrict_jointree_blanks_touched_components(seed, S):
    A = random_jointree(build_path(6), seed)
    R = restrict_jointree(A, S)
    assert R.size == A.size
    G = R.graph()
    assert all(v not in S for v in G.vertices)
    kept = PatternGraph(Ambient.PINF, G.edges)
    assert kept.issubgraph(A.graph())
