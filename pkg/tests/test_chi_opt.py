from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.chi_opt import (
    as_profile,
    chi_global,
    chi_lp,
    fib_profile,
    grid_value,
    in_profile_set,
    mo_profile,
    parse_profile,
    rd_profile,
    verify_solution,
)
from joinpot.graph_core import CapExceeded
from joinpot.jointree import atom, canonical_fo, canonical_mo, canonical_rd, connected_interval_trees, fib, join

EIGHTHS = st.integers(0, 8).map(lambda t: Fraction(t, 8))


def profiles(k: int):
    return st.lists(EIGHTHS, min_size=k + 1, max_size=k + 1).filter(lambda a: sum(a) >= 1)


def two_edge_measure(a) -> Fraction:
    # raising the shared middle coordinate serves both children at once
    left = max(Fraction(0), 1 - a[0] - a[1])
    right = max(Fraction(0), 1 - a[1] - a[2])
    return max(left, right)


@settings(max_examples=60, deadline=None)
@given(profiles(2))
def test_two_edge_tree_matches_closed_form(a):
    sol = chi_lp(canonical_rd(2), a)
    assert sol.objective == two_edge_measure(a)
    assert sol.lower <= sol.objective


def test_even_profile_costs_nothing():
    half = (Fraction(1, 2),) * 3
    assert chi_lp(canonical_rd(2), half).objective == 0
    assert chi_lp(canonical_rd(2), half, exact=True).objective == 0


@pytest.mark.parametrize("k", range(2, 30))
def test_explicit_profiles_are_valid(k):
    for build in (rd_profile, mo_profile, fib_profile):
        a = build(k)
        assert len(a) == k + 1
        assert in_profile_set(a)
    assert sum(rd_profile(k)) == Fraction(3, 2)
    assert sum(fib_profile(k)) == (1 if k == 2 else Fraction(4, 3))


def test_fib_profile_on_fibonacci_lengths():
    assert [h for h, v in enumerate(fib_profile(13)) if v] == [0, 5, 8, 13]
    for ell in range(5, 12):
        k = fib(ell)
        pos = [h for h, v in enumerate(fib_profile(k)) if v]
        gaps = [q - p - 1 for p, q in zip(pos, pos[1:])]
        assert gaps == [fib(ell - 2) - 1, fib(ell - 3) - 1, fib(ell - 2) - 1]


def test_mo_profile_shape():
    assert mo_profile(6) == tuple(Fraction(x, 8) for x in (1, 1, 2, 2, 2, 1, 1))
    assert mo_profile(4) == (Fraction(1, 4),) * 5


def test_parse_profile():
    assert parse_profile("free", 4) is None
    assert parse_profile("rd", 4) == rd_profile(4)
    assert parse_profile("1/2,0,1/2", 2) == (Fraction(1, 2), 0, Fraction(1, 2))
    with pytest.raises(ValueError):
        as_profile([2, 0])


@settings(max_examples=25, deadline=None)
@given(profiles(5), st.lists(EIGHTHS, min_size=6, max_size=6))
def test_more_input_mass_never_costs_more(a, extra):
    raised = [min(Fraction(1), x + y) for x, y in zip(a, extra)]
    A = canonical_fo(5)
    assert chi_lp(A, raised).objective <= chi_lp(A, a).objective


@settings(max_examples=10, deadline=None)
@given(profiles(4))
def test_float_and_exact_modes_agree(a):
    A = canonical_rd(4)
    f = chi_lp(A, a)
    e = chi_lp(A, a, exact=True)
    assert e.exact and f.lower <= e.objective <= f.objective
    assert e.objective == f.objective


@pytest.mark.parametrize("k", range(2, 8))
def test_free_profile_exact_matches_float(k):
    A = canonical_fo(k)
    assert chi_lp(A, exact=True).objective == chi_lp(A).objective


@pytest.mark.parametrize("k", range(2, 10))
def test_shared_formulation_bounds_positional_from_above(k):
    pos = chi_lp(canonical_mo(k))
    shared = chi_lp(canonical_mo(k), shared=True)
    assert shared.objective >= pos.lower
    assert verify_solution(pos, free=True)


def test_shared_formulation_gap_at_eight():
    assert chi_lp(canonical_mo(8)).objective == Fraction(13, 6)
    assert chi_lp(canonical_mo(8), shared=True).objective == Fraction(37, 17)


def test_frozen_free_values():
    assert chi_lp(canonical_rd(16)).objective == 3
    assert chi_lp(canonical_fo(13)).objective <= Fraction(8, 3)
    assert chi_lp(canonical_fo(5), fib_profile(5)).objective == Fraction(2, 3)


@settings(max_examples=15, deadline=None)
@given(profiles(3))
def test_lp_matches_grid_oracle(a):
    for A in connected_interval_trees(0, 3):
        grid, R = grid_value(A, a)
        value = chi_lp(A, a).objective
        assert value - Fraction(1, 10**9) <= grid <= float(value) + 1 / 32


def test_global_minimum_over_trees():
    a = rd_profile(3)
    v, best = chi_global(3, a)
    assert v == Fraction(1, 2)
    assert all(chi_lp(A, a).objective >= v for A in connected_interval_trees(0, 3))
    with pytest.raises(CapExceeded):
        chi_global(6, rd_profile(6))


def test_rejects_disconnected_trees():
    disconnected = join(atom((0, 1)), atom((2, 3)))
    with pytest.raises(ValueError):
        chi_lp(disconnected, (Fraction(1),) * 4)


def test_solution_json():
    data = chi_lp(canonical_fo(13), fib_profile(13)).to_json()
    assert data["status"] == "optimal"
    assert Fraction(data["certified_lower"]) <= Fraction(data["value"])
