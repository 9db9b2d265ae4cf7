"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on errors.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click

from .chi_opt import chi_lp, fib_profile, mo_profile, parse_profile, rd_profile
from .graph_core import CapExceeded, parse_graph_spec, tree_depth
from .jointree import canonical_fo, canonical_mo, canonical_rd, fib, fib_index, parse_tree_spec, to_sexp
from .permprod_sim import PermSequence, SimParams, enumerate_paths, random_permutations
from .potential import kappa_fixed_theta, min_phi_over_jointrees, phi, phi_cond
from .suites import SUITES, at_least_half_log2, jsonable, run_suite
from .threshold import parse_theta, sample_instance, solve_sub


class Ctx:
    def __init__(self, seed: int, cap: Optional[int], jobs: int, out: Optional[Path]):
        self.seed = seed
        self.cap = cap
        self.jobs = jobs
        self.out = out


def emit_json(ctx: Ctx, name: str, data: dict) -> None:
    text = json.dumps(jsonable(data), indent=2, sort_keys=True)
    click.echo(text)
    if ctx.out is not None:
        ctx.out.mkdir(parents=True, exist_ok=True)
        (ctx.out / f"{name}.json").write_text(text + "\n")


def emit_csv(ctx: Ctx, name: str, rows: list[dict], fields: list[str]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k) for k in fields})
    click.echo(buf.getvalue(), nl=False)
    if ctx.out is not None:
        ctx.out.mkdir(parents=True, exist_ok=True)
        (ctx.out / f"{name}.csv").write_text(buf.getvalue())


def _graph_and_theta(graph: str, theta: str):
    G = parse_graph_spec(graph)
    return G, parse_theta(theta, G.ambient, G)


def _parse_set(text: str) -> list:
    if not text.strip():
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            j, i = part.split(":")
            out.append((int(j), int(i)))
        else:
            out.append(int(part))
    return out


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed", default=0, show_default=True, help="Base seed for every random choice.")
@click.option("--cap", default=None, type=int, help="Override the size cap of exhaustive searches.")
@click.option("--jobs", default=1, show_default=True, help="Worker processes for independent trials.")
@click.option("--out", default=None, type=click.Path(file_okay=False, path_type=Path), help="Directory for reports.")
@click.pass_context
def main(ctx: click.Context, seed: int, cap: Optional[int], jobs: int, out: Optional[Path]) -> None:
    """Potential functions, profile LPs and simulations for path and tree patterns."""
    ctx.obj = Ctx(seed, cap, jobs, out)


@main.command("phi")
@click.option("--tree", required=True, help="rd:k, mo:k, fo:k, tk:k, an s-expression or a file.")
@click.option("--theta", default="const:1", show_default=True, help="const:p/q, tinf, walk or a JSON file.")
@click.option("--trace", is_flag=True, help="Include the winning rule at every state.")
@click.pass_obj
def cmd_phi(ctx: Ctx, tree: str, theta: str, trace: bool) -> None:
    """Unconditioned potential of a join-tree."""
    A = parse_tree_spec(tree)
    th = parse_theta(theta, A.ambient, A.graph())
    emit_json(ctx, "phi", {"tree": to_sexp(A), **phi(A, th, trace).to_json()})


@main.command("phi-cond")
@click.option("--tree", required=True)
@click.option("--S", "S", default="", help="Comma-separated vertices; tree vertices as level:index.")
@click.option("--theta", default="const:1", show_default=True)
@click.option("--trace", is_flag=True)
@click.pass_obj
def cmd_phi_cond(ctx: Ctx, tree: str, S: str, theta: str, trace: bool) -> None:
    """Potential conditioned on a vertex set."""
    A = parse_tree_spec(tree)
    th = parse_theta(theta, A.ambient, A.graph())
    emit_json(ctx, "phi_cond", {"tree": to_sexp(A), "S": _parse_set(S), **phi_cond(A, _parse_set(S), th, trace).to_json()})


@main.command("min-phi")
@click.option("--graph", required=True, help="T:k, P:k, JSON text or a JSON file.")
@click.option("--theta", default="const:1", show_default=True)
@click.option("--mode", type=click.Choice(["exhaustive", "canonical", "sampled"]), default="exhaustive", show_default=True)
@click.option("--samples", default=32, show_default=True)
@click.option("--cond", is_flag=True, help="Use the potential conditioned on the empty set.")
@click.pass_obj
def cmd_min_phi(ctx: Ctx, graph: str, theta: str, mode: str, samples: int, cond: bool) -> None:
    """Least potential over a family of join-trees for a graph."""
    G, th = _graph_and_theta(graph, theta)
    kw = {"cap": ctx.cap} if ctx.cap else {}
    v, A = min_phi_over_jointrees(G, th, mode, cond, samples, ctx.seed, **kw)
    emit_json(ctx, "min_phi", {"value": str(v), "value_float": float(v), "tree": to_sexp(A), "mode": mode})


@main.command("kappa")
@click.option("--graph", required=True)
@click.option("--theta", default="const:1", show_default=True)
@click.pass_obj
def cmd_kappa(ctx: Ctx, graph: str, theta: str) -> None:
    """Least over minimal join-trees of the largest node deficiency, for one weighting."""
    G, th = _graph_and_theta(graph, theta)
    kw = {"cap": ctx.cap} if ctx.cap else {}
    v, A = kappa_fixed_theta(G, th, **kw)
    emit_json(ctx, "kappa", {"value": str(v), "tree": to_sexp(A)})


@main.command("chi-lp")
@click.option("--tree", required=True)
@click.option("--profile", default="free", show_default=True, help="fib, rd, mo, free or comma-separated rationals.")
@click.option("--exact", is_flag=True, help="Solve with the rational simplex.")
@click.option("--shared", is_flag=True, help="One set of variables per distinct subtree (upper bound).")
@click.pass_obj
def cmd_chi_lp(ctx: Ctx, tree: str, profile: str, exact: bool, shared: bool) -> None:
    """Profile measure of a connected path join-tree."""
    A = parse_tree_spec(tree)
    lo, hi = A.interval
    a = parse_profile(profile, hi - lo)
    sol = chi_lp(A, a, exact=exact, shared=shared)
    emit_json(ctx, "chi_lp", sol.to_json())


def _family_bounds(family: str, k: int) -> tuple[Optional[float], Optional[Fraction | float]]:
    if family == "rd":
        return 0.5 * math.log2(k), Fraction(1, 2) * math.ceil(math.log2(k)) + 1
    if family == "fo":
        golden = (1 + math.sqrt(5)) / 2
        upper = Fraction(fib_index(k) + 1, 3) if fib(fib_index(k)) == k else None
        return math.log(k, golden) / 3 - 2, upper
    return 0.5 * math.log2(k) - 2, 0.5 * math.log2(k) + 2


@main.command("chi-sweep")
@click.option("--family", type=click.Choice(["rd", "mo", "fo"]), required=True)
@click.option("--kmin", default=2, show_default=True)
@click.option("--kmax", default=16, show_default=True)
@click.pass_obj
def cmd_chi_sweep(ctx: Ctx, family: str, kmin: int, kmax: int) -> None:
    """Free-profile optimum per k against the family's analytic bounds.

    The maximally overlapping family uses the per-subtree LP, whose value is an
    upper bound; its lower-bound column is then advisory.
    """
    build = {"rd": canonical_rd, "mo": canonical_mo, "fo": canonical_fo}[family]
    rows = []
    ok_all = True
    for k in range(kmin, kmax + 1):
        sol = chi_lp(build(k), shared=family == "mo")
        lower, upper = _family_bounds(family, k)
        if family == "rd":
            lower_ok = sol.lower is not None and at_least_half_log2(sol.lower, k)
        elif family == "fo":
            lower_ok = sol.lower is not None and float(sol.lower) >= lower - 1e-9
        else:
            lower_ok = True
        ok = (upper is None or sol.objective <= upper) and lower_ok
        ok_all &= ok
        rows.append({"k": k, "value": str(sol.objective), "lower_bound": lower,
                     "upper_bound": "" if upper is None else str(upper), "pass": ok})
    emit_csv(ctx, f"chi_sweep_{family}", rows, ["k", "value", "lower_bound", "upper_bound", "pass"])
    sys.exit(0 if ok_all else 1)


@main.command("pathset-verify")
@click.option("--n", "n", default=2, show_default=True)
@click.option("--pattern", default="P:2", show_default=True)
@click.pass_obj
def cmd_pathset_verify(ctx: Ctx, n: int, pattern: str) -> None:
    """Micro-scale pathset suite; CSV of every relation and join-tree."""
    if not pattern.upper().startswith("P:"):
        raise click.UsageError("only path patterns P:k are supported")
    rep = run_suite("pathset_micro", {"n": n, "k": int(pattern[2:]), "seed": ctx.seed})
    emit_csv(ctx, "pathset_verify", rep.rows, ["relation_id", "mu", "chi", "phi_bound", "pass"])
    for c in rep.cases:
        click.echo(f"# {c['case']}: {'PASS' if c['pass'] else 'FAIL'} ({c['checked']} checks)", err=True)
    sys.exit(0 if rep.passed else 1)


@main.command("permprod")
@click.option("--n", "n", default=256, show_default=True)
@click.option("--k", "k", default=13, show_default=True)
@click.option("--tree", default="fo", show_default=True, help="rd, mo, fo, or a tree spec spanning 0..k.")
@click.option("--profile", default="fib", show_default=True, type=click.Choice(["fib", "rd", "mo"]))
@click.option("--trials", default=10, show_default=True)
@click.option("--c", "c", default=2.0, show_default=True, help="Exponent of the log factor.")
@click.option("--equal-rule", type=click.Choice(["half", "shift"]), default="half", show_default=True)
@click.option("--perms", default=None, type=click.Path(exists=True, dir_okay=False), help="JSON list of permutations.")
@click.pass_obj
def cmd_permprod(ctx: Ctx, n: int, k: int, tree: str, profile: str, trials: int, c: float, equal_rule: str, perms) -> None:
    """Enumerate permutation-product paths with the simulated formulas."""
    rows = []
    spec = f"{tree}:{k}" if tree in ("rd", "mo", "fo") else tree
    A = parse_tree_spec(spec)
    a = {"fib": fib_profile, "rd": rd_profile, "mo": mo_profile}[profile](k)
    params = SimParams(c=c, equal_rule=equal_rule)
    fixed = None
    if perms is not None:
        data = json.loads(Path(perms).read_text())
        fixed = PermSequence(len(data[0]), tuple(data))
        if fixed.k != k:
            raise click.UsageError(f"file holds {fixed.k} permutations, expected {k}")
    for t in range(trials):
        seq = fixed or random_permutations(n, k, ctx.seed, t)
        start = time.perf_counter()
        res = enumerate_paths(A, a, seq, params, seed=ctx.seed, trial=t)
        rows.append({"trial": t, "isolated_count": len(res.paths), "complete": res.complete,
                     "sound": res.sound, "wallclock": round(time.perf_counter() - start, 3)})
    emit_csv(ctx, "permprod", rows, ["trial", "isolated_count", "complete", "sound", "wallclock"])
    sys.exit(0 if all(r["sound"] for r in rows) else 1)


@main.command("sample-x")
@click.option("--graph", required=True)
@click.option("--theta", required=True)
@click.option("--n", "n", required=True, type=int)
@click.option("--samples", default=1, show_default=True)
@click.option("--dump", is_flag=True, help="Include the first sampled instance in the report.")
@click.pass_obj
def cmd_sample_x(ctx: Ctx, graph: str, theta: str, n: int, samples: int, dump: bool) -> None:
    """Sample colored random instances and report how many contain the pattern."""
    G, th = _graph_and_theta(graph, theta)
    outcomes = []
    first = None
    for t in range(samples):
        inst = sample_instance(G, th, n, ctx.seed, t)
        if first is None:
            first = inst
        outcomes.append(solve_sub(inst))
    data = {"samples": samples, "yes": sum(outcomes), "rate": sum(outcomes) / max(samples, 1)}
    if dump and first is not None:
        data["instance"] = first.to_json()
    emit_json(ctx, "sample_x", data)


@main.command("td")
@click.option("--graph", required=True)
@click.pass_obj
def cmd_td(ctx: Ctx, graph: str) -> None:
    """Tree-depth (edge-height convention: a single edge has depth 1)."""
    G = parse_graph_spec(graph)
    cap = ctx.cap or max(25, len(G.vertices))
    d = tree_depth(G, cap=cap)
    emit_json(ctx, "td", {"td": d, "vertex_count_convention": d + 1 if G.vertices else 0})


@main.command("verify")
@click.argument("suite", type=click.Choice(sorted(SUITES)))
@click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False), help="JSON config for the suite.")
@click.pass_obj
def cmd_verify(ctx: Ctx, suite: str, config: Optional[str]) -> None:
    """Run a verification suite and write its JSON and CSV reports."""
    cfg = json.loads(Path(config).read_text()) if config else {}
    if ctx.jobs > 1:
        cfg.setdefault("jobs", ctx.jobs)
    rep = run_suite(suite, cfg, out=ctx.out, seed=ctx.seed)
    for c in rep.cases:
        click.echo(f"{c['case']}: {'PASS' if c['pass'] else 'FAIL'} ({c['checked']} checks)")
    click.echo(f"{suite}: {'PASS' if rep.passed else 'FAIL'} in {rep.wallclock:.1f}s")
    sys.exit(0 if rep.passed else 1)


def run() -> None:
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.ClickException as e:
        e.show()
        sys.exit(2)
    except SystemExit:
        raise
    except (CapExceeded, ValueError, KeyError, OSError, RuntimeError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
