"""Command-line entry point.

Exit codes: 0 success, 1 assertion or oracle failure, 2 input error,
3 guard refusal.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__, combinat, harness
from .engine import load_trace

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


def _scenario(path: str | None) -> harness.Scenario:
    if path is None:
        raise InputError("--scenario is required")
    try:
        return harness.load_scenario(path)
    except harness.ScenarioError as exc:
        raise InputError(str(exc)) from None


def _run_one(args):
    scenario, seed = args
    out = harness.run_scenario(scenario, seed)
    return out.row, out.trace.dumps(), out.network


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__)
def main():
    """Simulate and verify distributed protocols on SINR networks."""


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(), help="Scenario JSON file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out",
              show_default=True, help="Output directory.")
@click.option("--seeds", type=click.IntRange(min=1), default=None,
              help="Run seeds 0..K-1 instead of the scenario's list.")
@click.option("--parallel", type=click.IntRange(min=1), default=1, show_default=True,
              help="Number of worker processes.")
@click.option("--round-limit", type=click.IntRange(min=1), default=None,
              help="Override the scenario's round limit.")
@click.option("--record", type=click.Choice(["full", "summary"]), default=None,
              help="Override the scenario's trace detail.")
def run(scenario_path, out_dir, seeds, parallel, round_limit, record):
    """Run a scenario; write a trace and a network file per seed plus a metrics CSV."""
    scenario = _scenario(scenario_path)
    changes = {}
    if seeds is not None:
        changes["seeds"] = tuple(range(seeds))
    if round_limit is not None:
        changes["round_limit"] = round_limit
    if record is not None:
        changes["record"] = record
    scenario = scenario.replace(**changes)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from None
    jobs = [(scenario, s) for s in scenario.seeds]
    try:
        if parallel > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            results = [_run_one(j) for j in jobs]
    except harness.ScenarioError as exc:
        raise InputError(str(exc)) from None
    rows = []
    for row, trace_text, net in results:
        stem = f"{scenario.name}-seed{row.seed}"
        (out / f"{stem}.trace.jsonl").write_text(trace_text)
        harness.write_network(net, out / f"{stem}.net")
        rows.append(row)
    harness.write_metrics(rows, out / f"{scenario.name}-metrics.csv")
    ok = sum(r.success for r in rows)
    incomplete = [r.seed for r in rows if not r.complete]
    click.echo(f"{scenario.name}: {len(rows)} runs, {ok} successful, "
               f"{len(incomplete)} hit the round limit; metrics in "
               f"{out / (scenario.name + '-metrics.csv')}")
    sys.exit(EXIT_FAIL if incomplete else EXIT_OK)


@main.command("verify-family")
@click.option("--N", "name_space", type=click.IntRange(min=1), required=True, help="Name space size.")
@click.option("--ssf", "ssf_x", type=click.IntRange(min=1), default=None, help="Check an (N, x)-ssf.")
@click.option("--selector", "sel", type=(click.IntRange(min=1), click.IntRange(min=1)),
              default=None, help="Check an (N, x, y)-selector.")
@click.option("--seed", type=int, default=0, show_default=True, help="Construction seed.")
@click.option("--c", "c", type=float, default=None, help="Length constant.")
@click.option("--family", "family_path", type=click.Path(), default=None,
              help="Verify this JSON family instead of building one.")
def verify_family(name_space, ssf_x, sel, seed, c, family_path):
    """Build (or load) a selection family and verify it exhaustively."""
    if (ssf_x is None) == (sel is None):
        raise InputError("give exactly one of --ssf X or --selector X Y")
    x = ssf_x if ssf_x is not None else sel[0]
    if sel is not None and not 1 <= sel[1] <= sel[0] <= name_space:
        raise InputError("need 1 <= y <= x <= N")
    x = min(x, name_space)
    if math.comb(name_space, x) > combinat.VERIFY_CAP:
        click.echo(f"refused: C({name_space}, {x}) exceeds the verification cap "
                   f"{combinat.VERIFY_CAP}", err=True)
        sys.exit(EXIT_GUARD)
    try:
        if family_path is not None:
            obj = json.loads(Path(family_path).read_text())
            if isinstance(obj, list):
                fam = combinat.family_from_sets(name_space, obj)
            else:
                fam = combinat.SelectionFamily.from_json(obj)
            if fam.name_space != name_space:
                raise InputError(f"family name space {fam.name_space} != --N {name_space}")
        elif ssf_x is not None:
            fam = combinat.default_cache().get("ssf", name_space, x, None, seed, c)
        else:
            fam = combinat.default_cache().get("selector", name_space, x, sel[1], seed, c)
    except FileNotFoundError:
        raise InputError(f"family file not found: {family_path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid family JSON: {exc}") from None
    except combinat.FamilyError as exc:
        click.echo(f"construction failed: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    try:
        valid = (combinat.verify_ssf(fam, x) if ssf_x is not None
                 else combinat.verify_selector(fam, x, sel[1]))
    except combinat.GuardError as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_GUARD)
    what = f"({name_space}, {x})-ssf" if ssf_x is not None else \
        f"({name_space}, {x}, {sel[1]})-selector"
    click.echo(f"{what}: length {fam.length}: {'valid' if valid else 'INVALID'}")
    sys.exit(EXIT_OK if valid else EXIT_FAIL)


@main.command("check-trace")
@click.argument("trace_path", type=click.Path())
@click.option("--network", "network_path", type=click.Path(), required=True,
              help="Placement file written by 'run'.")
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Take the physical configuration from this scenario.")
def check_trace(trace_path, network_path, scenario_path):
    """Replay every recorded round and compare deliveries bit for bit."""
    config = _scenario(scenario_path).physical if scenario_path else None
    try:
        network = harness.read_network(network_path, config)
    except (harness.ScenarioError, ValueError) as exc:
        raise InputError(str(exc)) from None
    try:
        with open(trace_path) as fh:
            records, summary = load_trace(fh)
    except FileNotFoundError:
        raise InputError(f"trace file not found: {trace_path}") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"{trace_path}: {exc}") from None
    if not records and summary.get("deliveries", 0) > 0:
        raise InputError(f"{trace_path}: summary-only trace; rerun with --record full")
    report = harness.replay_trace(records, network)
    if report.ok:
        click.echo(f"{trace_path}: {report.rounds_checked} rounds replayed, all deliveries match")
        sys.exit(EXIT_OK)
    for rnd, msg in report.mismatches[:20]:
        click.echo(f"round {rnd}: {msg}")
    click.echo(f"{trace_path}: {len(report.mismatches)} mismatching rounds", err=True)
    sys.exit(EXIT_FAIL)


@main.command()
@click.argument("metrics_path", type=click.Path(), required=False)
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Print graph statistics of the scenario's networks.")
@click.option("--seeds", type=click.IntRange(min=1), default=None,
              help="Use seeds 0..K-1 instead of the scenario's list.")
@click.option("--model", type=click.Choice(sorted(harness.MODELS)), default="n_log2N",
              show_default=True, help="Growth model for the scaling fit.")
def stats(metrics_path, scenario_path, seeds, model):
    """Summarise a metrics CSV, or the networks a scenario generates."""
    if (metrics_path is None) == (scenario_path is None):
        raise InputError("give a metrics CSV or --scenario, not both")
    if scenario_path is not None:
        scenario = _scenario(scenario_path)
        click.echo("seed,n,name_space,delta,diameter,components")
        for s in (range(seeds) if seeds else scenario.seeds):
            try:
                net = harness.generate(scenario, s)
            except harness.ScenarioError as exc:
                raise InputError(str(exc)) from None
            g = harness.graph_stats(net)
            click.echo(f"{s},{net.n},{net.name_space},{g.delta},{g.diameter},{g.components}")
        sys.exit(EXIT_OK)
    try:
        rows = harness.read_metrics(metrics_path)
    except FileNotFoundError:
        raise InputError(f"metrics file not found: {metrics_path}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    by_n: dict[int, list] = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    click.echo("n,runs,success_rate,mean_rounds,max_random_bits,max_control_bits,violations")
    for n in sorted(by_n):
        rs = by_n[n]
        click.echo(f"{n},{len(rs)},{sum(r.success for r in rs) / len(rs):.3f},"
                   f"{sum(r.rounds for r in rs) / len(rs):.1f},"
                   f"{max(r.max_random_bits for r in rs)},{max(r.max_control_bits for r in rs)},"
                   f"{sum(r.violations for r in rs)}")
    if len(by_n) >= 3:
        fit = harness.scaling_fit(rows, model)
        click.echo(f"fit rounds ~ C*{model}: C={fit.c:.4g}, per-size spread {fit.spread:.3f}, "
                   f"max residual ratio {fit.max_residual_ratio:.3f}"
                   + (" (FLAGGED)" if fit.flagged else ""))
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
