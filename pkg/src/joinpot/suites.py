"""Named verification suites with JSON and CSV reports.

Each suite runs the sweeps of one acceptance criterion with configurable caps
and seeds.  Detail CSV files carry no timings, so identical configurations
give byte-identical CSV output.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import scipy

from . import __version__
from .chi_opt import chi_global, chi_lp, fib_profile, grid_value, mo_profile, rd_profile, verify_solution
from .graph_core import Ambient, build_complete_binary_tree, build_path, tree_depth, tree_depth_bruteforce
from .jointree import (
    canonical_fo,
    canonical_rd,
    connected_interval_trees,
    enumerate_minimal_jointrees,
    fib,
    parse_tree_spec,
    to_sexp,
)
from .pathset_oracle import (
    check_chi_phi,
    check_chi_properties,
    check_pathset_restriction_closure,
    check_projection,
    check_restriction,
    check_split_lemmas,
    random_relation,
)
from .permprod_sim import SimParams, enumerate_paths, random_permutations
from .phi_checks import (
    check_appendix_bound,
    check_delta_closed,
    check_path_component_bound,
    check_rd_half_log,
    check_tree_bound,
    check_weight_transfer,
)
from .potential import PotentialEngine
from .threshold import constant_theta, uniform_walk_tree_theta, validate_threshold, yes_rate
from .tree_lemmas import (
    check_boundary_and_height,
    check_empty_subtree,
    check_height_equality,
    check_no_branch,
    check_partial,
)


@dataclass
class SuiteReport:
    suite: str
    params: dict
    cases: list = field(default_factory=list)  # {"case", "pass", "checked", "witness", ...}
    rows: list = field(default_factory=list)  # CSV detail rows
    wallclock: float = 0.0
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.cases)

    def add(self, case: str, passed: bool, checked: int = 0, witness: Any = None, **info) -> None:
        entry = {"case": case, "pass": bool(passed), "checked": checked, **info}
        if not passed:
            entry["witness"] = witness
        self.cases.append(entry)

    def add_sweep(self, case: str, res, **info) -> None:
        self.add(case, res.passed, res.checked, res.violations[:20], **{**jsonable(res.extra), **info})

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "pass": self.passed,
            "params": jsonable(self.params),
            "seed": self.seed,
            "wallclock": round(self.wallclock, 3),
            "versions": {
                "joinpot": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "cases": jsonable(self.cases),
        }

    def write(self, out: Path) -> tuple[Path, Path]:
        out.mkdir(parents=True, exist_ok=True)
        jpath = out / f"{self.suite}.json"
        cpath = out / f"{self.suite}.csv"
        jpath.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        rows = self.rows or [{k: v for k, v in c.items() if k != "witness"} for c in self.cases]
        fields: list[str] = []
        for r in rows:
            for k in r:
                if k not in fields:
                    fields.append(k)
        with cpath.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _cell(r.get(k)) for k in fields})
        return jpath, cpath


def _cell(v):
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(jsonable(v), sort_keys=True)
    if isinstance(v, Fraction):
        return str(v)
    return v


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# suites


def suite_lemmas_t3(rep: SuiteReport, cfg: dict) -> None:
    for k in cfg.get("walk_heights", (2, 3)):
        T = build_complete_binary_tree(k)
        r = validate_threshold(T, uniform_walk_tree_theta(k))
        rep.add(f"walk_threshold_T{k}", r.valid and r.total_delta == 0, r.checked, r.to_json(), total_delta=str(r.total_delta))
    h = cfg.get("partial_height", 3)
    rep.add_sweep(f"partial_T{h}", check_partial(h))


def suite_lemmas_t4(rep: SuiteReport, cfg: dict) -> None:
    k = cfg.get("height", 4)
    rep.add_sweep(f"boundary_and_height_T{k}", check_boundary_and_height(k, plus=True))
    rep.add_sweep(f"height_equality_T{k}", check_height_equality(k))
    h = cfg.get("no_branch_height", 3)
    rep.add_sweep(f"no_branch_T{h}", check_no_branch(h))


def suite_empty_subtree(rep: SuiteReport, cfg: dict) -> None:
    seed = cfg.get("seed", 0)
    for k in cfg.get("heights", (12, 18)):
        rep.add_sweep(f"empty_subtree_T{k}", check_empty_subtree(k, cfg.get("samples", 10_000), seed + k))


def suite_philb_sweep(rep: SuiteReport, cfg: dict) -> None:
    k = cfg.get("height", 2)
    rep.add_sweep(f"tree_bound_T{k}", check_tree_bound(k))
    rep.add_sweep(f"weight_transfer_T{k}", check_weight_transfer(k))


def suite_phipk_sweep(rep: SuiteReport, cfg: dict) -> None:
    rep.add_sweep("path_component_bound", check_path_component_bound(cfg.get("kmax", 6)))


def suite_canonical_tightness(rep: SuiteReport, cfg: dict) -> None:
    rep.add_sweep("rd_half_log", check_rd_half_log(cfg.get("rd_sizes", (4, 8, 16))))
    rep.add_sweep("appendix_bound", check_appendix_bound(cfg.get("kmax", 6)))


def at_least_half_log2(x: Fraction, k: int) -> bool:
    """``x >= log2(k) / 2`` exactly, as ``2^(2p) >= k^q`` for ``x = p/q``."""
    if x < 0:
        return False
    return 2 ** (2 * x.numerator) >= k**x.denominator


def grid_profiles(k: int) -> list[tuple]:
    out = [rd_profile(k), fib_profile(k), mo_profile(k)]
    if k == 2:
        out.append((Fraction(0), Fraction(0), Fraction(1)))
    uniq = []
    for a in out:
        if a not in uniq:
            uniq.append(a)
    return uniq


def suite_chi_sandwich(rep: SuiteReport, cfg: dict) -> None:
    rd_k = cfg.get("rd_size", 16)
    sol = chi_lp(canonical_rd(rd_k))
    hi = Fraction(1, 2) * math.ceil(math.log2(rd_k)) + 1
    ok = sol.lower is not None and at_least_half_log2(sol.lower, rd_k) and sol.objective <= hi and verify_solution(sol, True)
    rep.add(f"rd{rd_k}_free", ok, 1, sol.to_json(), value=str(sol.objective), certified_lower=str(sol.lower))
    rep.rows.append({"case": f"rd{rd_k}_free", "value": str(sol.objective), "lower": f"log2({rd_k})/2", "upper": str(hi), "pass": ok})

    level = cfg.get("fib_level", 7)
    fk = fib(level)
    sol = chi_lp(canonical_fo(fk))
    bound = Fraction(level + 1, 3)
    ok = sol.objective <= bound and verify_solution(sol, True)
    rep.add(f"fo{fk}_free", ok, 1, sol.to_json(), value=str(sol.objective))
    rep.rows.append({"case": f"fo{fk}_free", "value": str(sol.objective), "lower": "", "upper": str(bound), "pass": ok})

    half = (Fraction(1, 2),) * 3
    v = chi_lp(canonical_rd(2), half, exact=True).objective
    g, _ = chi_global(2, half)
    ok = v == 0 and g == 0
    rep.add("half_profile_k2", ok, 2, {"lp": str(v), "global": str(g)})
    rep.rows.append({"case": "half_profile_k2", "value": str(v), "lower": "0", "upper": "0", "pass": ok})

    tol = Fraction(1, 32)
    worst = Fraction(0)
    checked = 0
    bad = []
    for k in range(2, cfg.get("grid_kmax", 4) + 1):
        for A in connected_interval_trees(0, k):
            for a in grid_profiles(k):
                lp = chi_lp(A, a).objective
                gv, R = grid_value(A, a)
                diff = abs(Fraction(gv).limit_denominator(1 << 20) - lp)
                worst = max(worst, diff)
                checked += 1
                ok = diff <= tol
                rep.rows.append({"case": f"grid_k{k}", "tree": to_sexp(A), "profile": ",".join(map(str, a)),
                                 "value": str(lp), "lower": "", "upper": repr(gv), "pass": ok})
                if not ok:
                    bad.append({"tree": to_sexp(A), "profile": [str(x) for x in a], "lp": str(lp), "grid": gv})
    rep.add("lp_vs_grid", not bad, checked, bad, worst_gap=str(worst))


def suite_pathset_micro(rep: SuiteReport, cfg: dict) -> None:
    n = cfg.get("n", 2)
    k = cfg.get("k", 2)
    P = build_path(k)
    theta = constant_theta(Ambient.PINF, 1)
    trees = list(enumerate_minimal_jointrees(P, ordered=True))
    eng = PotentialEngine(P, theta)
    r = check_chi_phi(trees, theta, n, lambda A: eng.phi_cond(A, ()))
    rep.rows.extend(
        {"relation_id": f"{row['tree']}:{row['relation']}", "mu": row["mu"], "chi": row["chi"],
         "phi_bound": row["phi_bound"], "pass": row["pass"]}
        for row in r.rows
    )
    rep.add("chi_phi", r.passed, r.checked, r.violations[:20])
    for check in (check_projection, check_restriction, check_chi_properties):
        r = check(trees, theta, n)
        rep.add(r.name, r.passed, r.checked, r.violations[:20])
    r = check_pathset_restriction_closure(P, theta, n)
    rep.add(r.name, r.passed, r.checked, r.violations[:20])
    rng = random.Random(cfg.get("seed", 0))
    rels = [random_relation(range(k + 1), n, rng) for _ in range(cfg.get("split_samples", 100))]
    r = check_split_lemmas(rels, rng)
    rep.add(r.name, r.passed, r.checked, r.violations[:20])


def _permprod_trial(args) -> dict:
    tree_spec, profile, n, k, seed, trial, c, rule = args
    tree = parse_tree_spec(tree_spec)
    params = SimParams(c=c, equal_rule=rule)
    seq = random_permutations(n, k, seed, trial)
    res = enumerate_paths(tree, profile, seq, params, seed=seed, trial=trial)
    return {"trial": trial, "isolated_count": len(res.paths), "complete": res.complete, "sound": res.sound}


PROFILE_BUILDERS: dict[str, Callable] = {"fib": fib_profile, "rd": rd_profile, "mo": mo_profile}


def run_permprod(n: int, k: int, tree: str, profile: str, trials: int, seed: int, c: float = 2.0,
                 rule: str = "half", jobs: int = 1) -> list[dict]:
    spec = f"{tree}:{k}" if ":" not in tree and not tree.startswith("(") else tree
    a = PROFILE_BUILDERS[profile](k)
    jobs_args = [(spec, a, n, k, seed, t, c, rule) for t in range(trials)]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_permprod_trial, jobs_args))
    else:
        rows = [_permprod_trial(x) for x in jobs_args]
    return sorted(rows, key=lambda r: r["trial"])


def suite_permprod_bench(rep: SuiteReport, cfg: dict) -> None:
    jobs = cfg.get("jobs", 1)
    for case in cfg.get("grid", DEFAULT_PERMPROD_GRID):
        if "trials" in cfg:
            case = {**case, "trials": cfg["trials"]}
        if case["trials"] == 0:
            continue
        rows = run_permprod(case["n"], case["k"], case["tree"], case["profile"], case["trials"],
                            case.get("seed", rep.seed or 0), case.get("c", 2.0), case.get("rule", "half"), jobs)
        complete = sum(r["complete"] for r in rows)
        sound = sum(r["sound"] for r in rows)
        need = math.ceil(case["min_complete_rate"] * case["trials"])
        name = f"n{case['n']}_k{case['k']}"
        for r in rows:
            rep.rows.append({"case": name, **r})
        rep.add(name, sound == len(rows) and complete >= need, len(rows),
                [r for r in rows if not (r["complete"] and r["sound"])][:20],
                complete=complete, sound=sound, required=need)


DEFAULT_PERMPROD_GRID = [
    {"n": 256, "k": 13, "tree": "fo", "profile": "fib", "trials": 100, "min_complete_rate": 0.95},
    {"n": 16, "k": 2, "tree": "rd", "profile": "rd", "trials": 1000, "min_complete_rate": 0.99},
]


def suite_distribution_check(rep: SuiteReport, cfg: dict) -> None:
    k = cfg.get("k", 3)
    n = cfg.get("n", 32)
    samples = cfg.get("samples", 500)
    weight = Fraction(cfg.get("weight", "4/3"))
    G = build_path(k)
    yes, outcomes = yes_rate(G, constant_theta(Ambient.PINF, weight), n, samples, cfg.get("seed", rep.seed or 0))
    rate = Fraction(yes, samples)
    lo, hi = Fraction(cfg.get("low", "1/20")), Fraction(cfg.get("high", "19/20"))
    rep.add("yes_rate", lo <= rate <= hi, samples, {"yes": yes}, yes=yes, rate=float(rate))
    rep.rows.extend({"trial": t, "yes": o} for t, o in enumerate(outcomes))


def suite_td_delta(rep: SuiteReport, cfg: dict) -> None:
    for k in range(1, cfg.get("tree_kmax", 4) + 1):
        T = build_complete_binary_tree(k)
        d = tree_depth(T, cap=len(T.vertices))
        rep.add(f"td_T{k}", d == k, 1, {"td": d}, td=d)
    for k in range(1, cfg.get("path_kmax", 8) + 1):
        P = build_path(k)
        d, o = tree_depth(P), tree_depth_bruteforce(P)
        rep.add(f"td_P{k}", d == o, 1, {"td": d, "oracle": o}, td=d)
    rep.add_sweep("delta_closed_P8", check_delta_closed(cfg.get("delta_k", 8)))


SUITES: dict[str, Callable[[SuiteReport, dict], None]] = {
    "lemmas_t3": suite_lemmas_t3,
    "lemmas_t4": suite_lemmas_t4,
    "empty_subtree": suite_empty_subtree,
    "philb_sweep": suite_philb_sweep,
    "phipk_sweep": suite_phipk_sweep,
    "canonical_tightness": suite_canonical_tightness,
    "chi_sandwich": suite_chi_sandwich,
    "pathset_micro": suite_pathset_micro,
    "permprod_bench": suite_permprod_bench,
    "distribution_check": suite_distribution_check,
    "td_delta": suite_td_delta,
}

# acceptance criterion number for each suite
CRITERIA = {
    "lemmas_t3": (1, 2),
    "lemmas_t4": (3,),
    "empty_subtree": (4,),
    "philb_sweep": (5, 6),
    "phipk_sweep": (7,),
    "canonical_tightness": (8,),
    "chi_sandwich": (9,),
    "pathset_micro": (10,),
    "permprod_bench": (11,),
    "distribution_check": (12,),
    "td_delta": (13,),
}


CONFIG_VERSION = 1


def run_suite(name: str, config: Optional[dict] = None, out: Optional[Path] = None, seed: Optional[int] = None) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    cfg = dict(config or {})
    version = cfg.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ValueError(f"config version {version} is not supported (expected {CONFIG_VERSION})")
    if seed is not None:
        cfg.setdefault("seed", seed)
    rep = SuiteReport(name, cfg, seed=cfg.get("seed"))
    start = time.perf_counter()
    SUITES[name](rep, cfg)
    rep.wallclock = time.perf_counter() - start
    if out is not None:
        rep.write(Path(out))
    return rep
