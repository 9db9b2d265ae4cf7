"""Acceptance criteria 1-13, run from the checked-in configs at their stated tolerances."""
import json
from pathlib import Path

import pytest

from joinpot.suites import run_suite

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
_REPORTS: dict = {}


def suite(name: str):
    if name not in _REPORTS:
        cfg = json.loads((CONFIG_DIR / f"{name}.json").read_text())
        _REPORTS[name] = run_suite(name, cfg)
    return _REPORTS[name]


def cases(rep, prefix: str = "") -> list[dict]:
    return [c for c in rep.cases if c["case"].startswith(prefix)]


def all_pass(cs: list[dict]) -> bool:
    return bool(cs) and all(c["pass"] for c in cs)


def summary(cs: list[dict]) -> str:
    return ", ".join(f"{c['case']} checked={c['checked']}{'' if c['pass'] else ' FAILED'}" for c in cs)


def check(report_criterion, number: int, cs: list[dict], seconds: float, limit: float = None) -> None:
    within = limit is None or seconds < limit
    detail = summary(cs) + f", {seconds:.1f}s" + ("" if within else f" over the {limit:.0f}s limit")
    report_criterion(number, all_pass(cs) and within, detail)
    assert all_pass(cs), [c for c in cs if not c["pass"]]
    assert within


pytestmark = pytest.mark.slow


def test_criterion_1_walk_threshold(report_criterion):
    rep = suite("lemmas_t3")
    check(report_criterion, 1, cases(rep, "walk_threshold"), rep.wallclock, 60)


def test_criterion_2_partial_boundary(report_criterion):
    rep = suite("lemmas_t3")
    cs = cases(rep, "partial_T")
    assert cs[0]["checked"] == 2**14
    check(report_criterion, 2, cs, rep.wallclock, 60)


def test_criterion_3_boundary_and_height(report_criterion):
    rep = suite("lemmas_t4")
    check(report_criterion, 3, rep.cases, rep.wallclock, 300)


def test_criterion_4_empty_subtree(report_criterion):
    rep = suite("empty_subtree")
    cs = rep.cases
    assert [c["checked"] for c in cs] == [10_000, 10_000]
    check(report_criterion, 4, cs, rep.wallclock)


def test_criterion_5_tree_bound(report_criterion):
    rep = suite("philb_sweep")
    check(report_criterion, 5, cases(rep, "tree_bound"), rep.wallclock, 600)


def test_criterion_6_weight_transfer(report_criterion):
    rep = suite("philb_sweep")
    check(report_criterion, 6, cases(rep, "weight_transfer"), rep.wallclock)


def test_criterion_7_path_component_bound(report_criterion):
    rep = suite("phipk_sweep")
    check(report_criterion, 7, rep.cases, rep.wallclock, 1800)


def test_criterion_8_rd_half_log_clause():
    rep = suite("canonical_tightness")
    assert all_pass(cases(rep, "rd_half_log"))


@pytest.mark.xfail(
    strict=True,
    reason="the appendix bound fails on the two-edge path: Phi=1 is below 1+1/c (about 1.227); see README",
)
def test_criterion_8_canonical_tightness(report_criterion):
    rep = suite("canonical_tightness")
    check(report_criterion, 8, rep.cases, rep.wallclock)


def test_criterion_9_chi_sandwich(report_criterion):
    rep = suite("chi_sandwich")
    check(report_criterion, 9, rep.cases, rep.wallclock, 300)


def test_criterion_10_pathset_micro(report_criterion):
    rep = suite("pathset_micro")
    assert cases(rep, "chi_phi")[0]["checked"] == 2 * 256
    check(report_criterion, 10, rep.cases, rep.wallclock, 600)


def test_criterion_11_permprod(report_criterion):
    rep = suite("permprod_bench")
    assert [c["checked"] for c in rep.cases] == [100, 1000]
    check(report_criterion, 11, rep.cases, rep.wallclock, 600)


def test_criterion_12_distribution(report_criterion):
    rep = suite("distribution_check")
    check(report_criterion, 12, rep.cases, rep.wallclock)


def test_criterion_13_td_and_closed_components(report_criterion):
    rep = suite("td_delta")
    check(report_criterion, 13, rep.cases, rep.wallclock)
