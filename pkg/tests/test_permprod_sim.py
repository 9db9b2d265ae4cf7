import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.chi_opt import fib_profile, rd_profile
from joinpot.jointree import atom, canonical_fo, canonical_rd
from joinpot.permprod_sim import (
    BASE_DEPTH,
    DEPTH_STEP,
    INCONSISTENT,
    ISOLATED,
    NOT_ISOLATED,
    PermSequence,
    SimParams,
    build_plan,
    compose_direct,
    count_paths_in_random_rectangle,
    enumerate_paths,
    isolate,
    random_permutations,
    symbolic_size,
    true_paths,
)
from joinpot.threshold import instance_rng


def fold_apply(seq: PermSequence, x: int) -> int:
    for p in seq.perms:
        x = p[x]
    return x


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return centre - half, centre + half


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(1, 6), st.integers(0, 10**6))
def test_composition_matches_pointwise_application(n, k, seed):
    seq = random_permutations(n, k, seed)
    comp = compose_direct(seq)
    assert comp == tuple(fold_apply(seq, x) for x in range(n))
    assert tuple(seq.path_matrix()[-1]) == comp


def test_inverse_pair_composes_to_identity():
    sigma = (2, 0, 3, 1)
    inverse = tuple(sorted(range(4), key=lambda x: sigma[x]))
    assert compose_direct(PermSequence(4, (sigma, inverse))) == (0, 1, 2, 3)
    assert compose_direct(PermSequence(4, (sigma,))) == sigma


def test_rejects_non_permutations():
    with pytest.raises(ValueError):
        PermSequence(3, ((0, 0, 1),))


def test_path_check():
    seq = random_permutations(8, 3, seed=1)
    for x in true_paths(seq):
        assert seq.is_path(x)
        bad = (x[0], (x[1] + 1) % 8) + x[2:]
        assert not seq.is_path(bad)


def test_single_element_universe():
    seq = PermSequence(1, ((0,), (0,)))
    for t in range(20):
        out = isolate(canonical_rd(2), rd_profile(2), seq, [{0}, {0}, {0}], seed=t)
        assert out.status == ISOLATED and out.path == 0
    res = enumerate_paths(canonical_rd(2), rd_profile(2), seq)
    assert res.paths == {(0, 0, 0)} and res.complete and res.sound


def test_empty_set_never_isolates():
    seq = random_permutations(16, 2, seed=3)
    for t in range(20):
        out = isolate(canonical_rd(2), rd_profile(2), seq, [set(range(16)), set(), set(range(16))], seed=t)
        assert out.status == NOT_ISOLATED


def test_singleton_rectangle_on_a_path_isolates():
    n = 64
    seq = random_permutations(n, 2, seed=9)
    X = seq.path_matrix()
    A, a = canonical_rd(2), rd_profile(2)
    plan = build_plan(A, a, n, SimParams())
    hits = 0
    trials = 1000
    for t in range(trials):
        p = t % n
        out = isolate(A, a, seq, [{int(X[h, p])} for h in range(3)], seed=t, plan=plan)
        hits += out.status == ISOLATED and out.path == p
    assert hits / trials >= 0.99


def two_path_rectangle(seq: PermSequence, p: int, q: int) -> list[set]:
    X = seq.path_matrix()
    return [{int(X[h, p]), int(X[h, q])} for h in range(seq.k + 1)]


def paths_inside(seq: PermSequence, sets) -> set[int]:
    X = seq.path_matrix()
    return {p for p in range(seq.n) if all(int(X[h, p]) in s for h, s in enumerate(sets))}


def test_base_level_reports_conflict_deterministically():
    seq = random_permutations(16, 1, seed=4)
    sets = two_path_rectangle(seq, 2, 7)
    for t in range(20):
        assert isolate(atom((0, 1)), (1, 1), seq, sets, seed=t).status == INCONSISTENT


def test_two_path_rectangles_never_emit_an_outside_path():
    n, k = 32, 5
    seq = random_permutations(n, k, seed=8)
    A, a = canonical_fo(k), fib_profile(k)
    plan = build_plan(A, a, n, SimParams())
    conflicts = 0
    for t in range(60):
        sets = two_path_rectangle(seq, t % n, (t + 5) % n)
        inside = paths_inside(seq, sets)
        out = isolate(A, a, seq, sets, seed=t, plan=plan)
        if out.status == ISOLATED:
            assert out.path in inside
        conflicts += out.status == INCONSISTENT
    # both paths are isolated by some sub-rectangle with high probability
    assert conflicts >= 54


def test_isolated_output_is_a_path_in_the_rectangle():
    n, k = 16, 3
    seq = random_permutations(n, k, seed=2)
    A, a = canonical_fo(k), fib_profile(k)
    rng = np.random.default_rng(0)
    plan = build_plan(A, a, n, SimParams())
    for t in range(100):
        sets = [set(np.flatnonzero(rng.random(n) < 0.4).tolist()) for _ in range(k + 1)]
        out = isolate(A, a, seq, sets, seed=t, plan=plan)
        if out.status == ISOLATED:
            assert out.path in paths_inside(seq, sets)


@pytest.mark.parametrize("seed", range(5))
def test_enumeration_is_sound_against_the_raw_permutations(seed):
    seq = random_permutations(32, 5, seed)
    res = enumerate_paths(canonical_fo(5), fib_profile(5), seq, seed=seed, exhaustive=True)
    for x in res.paths:
        assert all(seq.perms[h - 1][x[h - 1]] == x[h] for h in range(1, 6))
    assert res.sound


def test_lazy_and_exhaustive_agree_on_completeness():
    seq = random_permutations(16, 2, 1)
    for t in range(10):
        lazy = enumerate_paths(canonical_rd(2), rd_profile(2), seq, seed=1, trial=t)
        full = enumerate_paths(canonical_rd(2), rd_profile(2), seq, seed=1, trial=t, exhaustive=True)
        assert lazy.paths <= full.paths
        assert lazy.complete == (full.paths == true_paths(seq))


def test_expected_paths_per_outer_rectangle():
    n, k = 16, 2
    a = rd_profile(k)
    seq = random_permutations(n, k, seed=6)
    rng = instance_rng(6, 0)
    samples = [count_paths_in_random_rectangle(seq, a, rng) for _ in range(4000)]
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1)) / math.sqrt(len(samples))
    expected = n ** (1 - float(sum(a)))
    assert abs(mean - expected) <= 3 * se


def completeness_rate(c: float, trials: int) -> int:
    hits = 0
    for t in range(trials):
        seq = random_permutations(16, 2, 100, t)
        hits += enumerate_paths(canonical_rd(2), rd_profile(2), seq, SimParams(c=c), seed=100, trial=t).complete
    return hits


def test_completeness_monotone_in_log_exponent():
    trials = 300
    rates = [completeness_rate(c, trials) for c in (1.5, 2.0, 3.0)]
    for lo, hi in zip(rates, rates[1:]):
        if hi < lo:
            # a drop is only tolerated inside overlapping confidence intervals
            assert wilson_interval(hi, trials)[1] >= wilson_interval(lo, trials)[0]


def test_sample_counts_grow_with_log_exponent():
    A, a = canonical_fo(8), fib_profile(8)
    small = build_plan(A, a, 256, SimParams(c=1.5)).samples
    large = build_plan(A, a, 256, SimParams(c=3.0)).samples
    assert large > small


def test_shift_rule_raises_every_coordinate():
    plan = build_plan(canonical_rd(2), (Fraction(1, 2),) * 3, 16, SimParams(equal_rule="shift"))
    assert all(r < 1 for r in plan.rates)
    half = build_plan(canonical_rd(2), (Fraction(1, 2),) * 3, 16, SimParams())
    assert list(half.rates) == [0.5, 0.5, 0.5]


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(c=1.0)
    with pytest.raises(ValueError):
        SimParams(equal_rule="other")


def test_base_size_and_outputs():
    n = 2**10
    L = math.ceil(math.log2(n + 1))
    s = symbolic_size(atom((0, 1)), (1, 1), n, outer=False)
    assert s.gates == 3 * L + 1
    assert s.outputs_base == 2 * L + 1
    assert s.depth == BASE_DEPTH


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_depth_grows_by_a_constant_per_level(k):
    s = symbolic_size(canonical_rd(k), rd_profile(k), 64)
    assert s.depth == BASE_DEPTH + DEPTH_STEP * int(math.log2(k))


def test_main_exponent_tracks_measure_for_rd16():
    s = symbolic_size(canonical_rd(16), rd_profile(16), 2**10)
    # measure 3/2 at the profile, plus the profile's sum 3/2
    assert abs(s.main_exponent - 3) <= 1.5
    assert s.log_n_gates > s.main_exponent
