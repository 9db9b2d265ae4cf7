import json
from fractions import Fraction
from pathlib import Path

import pytest

from joinpot.jointree import parse_sexp
from joinpot.suites import CRITERIA, SUITES, at_least_half_log2, run_suite

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_every_suite_maps_to_criteria():
    assert set(CRITERIA) == set(SUITES)
    covered = sorted(c for cs in CRITERIA.values() for c in cs)
    assert covered == list(range(1, 14))


def test_checked_in_configs_are_versioned():
    names = {p.stem for p in CONFIG_DIR.glob("*.json")}
    assert names == set(SUITES)
    for p in CONFIG_DIR.glob("*.json"):
        assert json.loads(p.read_text())["version"] == 1


def test_empty_permprod_grid_passes():
    rep = run_suite("permprod_bench", {"trials": 0})
    assert rep.passed and rep.cases == []


def test_unknown_suite_and_bad_version():
    with pytest.raises(KeyError):
        run_suite("nope")
    with pytest.raises(ValueError):
        run_suite("td_delta", {"version": 2})


def test_reports_are_byte_identical_across_runs(tmp_path):
    cfg = {"tree_kmax": 2, "path_kmax": 4, "delta_k": 4}
    run_suite("td_delta", cfg, out=tmp_path / "a", seed=5)
    run_suite("td_delta", cfg, out=tmp_path / "b", seed=5)
    assert (tmp_path / "a" / "td_delta.csv").read_bytes() == (tmp_path / "b" / "td_delta.csv").read_bytes()
    run_suite("distribution_check", {"samples": 50}, out=tmp_path / "c", seed=1)
    run_suite("distribution_check", {"samples": 50}, out=tmp_path / "d", seed=1)
    assert (tmp_path / "c" / "distribution_check.csv").read_bytes() == (tmp_path / "d" / "distribution_check.csv").read_bytes()


def test_failing_case_carries_parseable_witness():
    rep = run_suite("canonical_tightness", {"rd_sizes": [4], "kmax": 2})
    failing = [c for c in rep.cases if not c["pass"]]
    assert [c["case"] for c in failing] == ["appendix_bound"]
    tree = parse_sexp(failing[0]["witness"][0]["tree"])
    assert len(tree.edges) == 2


def test_small_sweeps_pass():
    assert run_suite("lemmas_t3", {"walk_heights": [2], "partial_height": 2}).passed
    assert run_suite("phipk_sweep", {"kmax": 4}).passed
    assert run_suite("empty_subtree", {"heights": [12], "samples": 200}).passed


def test_exact_half_log_comparison():
    assert at_least_half_log2(Fraction(2), 16)
    assert not at_least_half_log2(Fraction(2) - Fraction(1, 10**6), 16)
    assert at_least_half_log2(Fraction(3, 2), 8)
    assert not at_least_half_log2(Fraction(79, 100), 3)
    assert at_least_half_log2(Fraction(80, 100), 3)
