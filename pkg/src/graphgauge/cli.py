"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 no solution found,
4 balance or criticality failure.
"""

from __future__ import annotations

import csv
import functools
import io as _io
import math
import sys
from pathlib import Path

import click
import numpy as np

from .compat import (ChargeSplitting, IsometricState, SOLVER_TOL, Verdict, balance_check, compat_residual,
                     decompose_state, h_form, is_geometrizable, solve_state)
from .compat import graph_d, graph_laplacian, edge_inner, vertex_inner
from .errors import BalanceError, GraphgaugeError, NoSolution, OrientationError, ValidationError
from .graph import LabeledGraph, validate_graph
from .io import RunManifest, dumps, read_json
from .solutions import (DEFAULT_DELTA0, SpectralRealization, geometric_to_spectral, massgap_scan,
                        verify_critical)
from .spectral import DsFunction, build_triple, connes_distance

EXIT_OK, EXIT_INVALID, EXIT_NO_SOLUTION, EXIT_FAILED = 0, 2, 3, 4


class Failure(Exception):
    """Report already printed; exit with the given code."""

    def __init__(self, code: int):
        self.code = code


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Failure as exc:
            sys.exit(exc.code)
        except (BalanceError, OrientationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_FAILED)
        except NoSolution as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NO_SOLUTION)
        except (ValidationError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID)
        except GraphgaugeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID)
    return wrapper


def load_graph(path) -> LabeledGraph:
    g = LabeledGraph.from_json(read_json(path))
    report = validate_graph(g)
    if not report.ok:
        raise ValidationError("invalid graph: " + "; ".join(report.violations))
    return g


def _emit(ctx, payload: dict, text_lines: list[str], out: str | None = None) -> None:
    if out:
        Path(out).write_text(dumps(payload))
    if ctx.obj["json"]:
        click.echo(dumps(payload), nl=False)
    else:
        for line in text_lines:
            click.echo(line)


def _manifest(ctx, command: str, inputs: dict, **params) -> RunManifest:
    m = RunManifest(command, parameters={"tol": ctx.obj["tol"], "seed": ctx.obj["seed"], **params})
    for name, path in inputs.items():
        m.add_input(name, path)
    return m


@click.group()
@click.option("--tol", type=float, default=None, help="Override the command's acceptance tolerance.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized searches and checks.")
@click.option("--json", "as_json", is_flag=True, help="Write the machine-readable report to stdout.")
@click.version_option(package_name="graphgauge")
@click.pass_context
def main(ctx, tol, seed, as_json):
    """Isometric states of labeled graphs and their spectral gauge realizations."""
    ctx.ensure_object(dict)
    ctx.obj.update(tol=tol, seed=seed, json=as_json)


@main.command("check-geom")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_handle_errors
def check_geom(ctx, graph):
    """Geometrizability criterion for positive charge vectors."""
    g = load_graph(graph)
    form = h_form(g)
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else 1e-10
    verdict = is_geometrizable(g, tol)
    lam = form.min_eigenvalue
    payload = {"manifest": _manifest(ctx, "check-geom", {"graph": graph}).to_json(),
               "H": form.H.tolist(), "min_eigenvalue": lam, "verdict": verdict.value}
    lines = ["H_M ="] + ["  " + " ".join(f"{x: .6g}" for x in row) for row in form.H]
    lines += [f"min eigenvalue: {lam:.17g}", verdict.value]
    _emit(ctx, payload, lines)


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the state JSON here.")
@click.option("--starts", type=int, default=24, show_default=True, help="Number of least-squares starts.")
@click.pass_context
@_handle_errors
def solve(ctx, graph, out, starts):
    """Search for an isometric state."""
    g = load_graph(graph)
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else SOLVER_TOL
    state = solve_state(g, seed=ctx.obj["seed"], starts=starts, tol=tol)
    verdict = is_geometrizable(g)
    manifest = _manifest(ctx, "solve", {"graph": graph}, starts=starts)
    if state is None:
        msg = {Verdict.GEOMETRIZABLE: "criterion says geometrizable",
               Verdict.NOT_GEOMETRIZABLE: "criterion says not geometrizable",
               Verdict.NOT_APPLICABLE: "criterion not applicable"}[verdict]
        _emit(ctx, {"manifest": manifest.to_json(), "found": False, "criterion": verdict.value},
              [f"no state found; {msg}"])
        raise Failure(EXIT_NO_SOLUTION)
    res = float(np.max(np.abs(compat_residual(g, state)))) if g.vertices else 0.0
    payload = {"manifest": manifest.to_json(), **state.to_json(), "residual": res}
    lines = [f"l[{v}] = {state.lengths[v]:.17g}" for v in g.vertices]
    lines += [f"omega[{w}] = {state.angles[w]:.17g}" for w, _ in g.pairs]
    lines.append(f"residual: {res:.3e}")
    _emit(ctx, payload, lines, out)


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("state", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the splitting JSON here.")
@click.pass_context
@_handle_errors
def decompose(ctx, graph, state, out):
    """Split vertex charges along the flags of an isometric state."""
    g = load_graph(graph)
    s = IsometricState.from_json(read_json(state))
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else SOLVER_TOL
    split = decompose_state(g, s, tol)
    zero = [w for w in g.oriented if split.k[w] == 0]
    reduced = g.without_pairs(zero)
    balanced = balance_check(reduced, split)
    payload = {"manifest": _manifest(ctx, "decompose", {"graph": graph, "state": state}).to_json(),
               **split.to_json(), "balanced": balanced}
    lines = [f"k[{w}] = {split.k[w]:.17g}" for w in g.oriented]
    lines.append("balance: " + ("ok" if balanced else "VIOLATED"))
    _emit(ctx, payload, lines, out)
    if not balanced:
        raise Failure(EXIT_FAILED)


def _report_lines(rep) -> list[str]:
    return [f"S = {rep.S.total:.17g} (YM {rep.S.ym:.6g}, energy {rep.S.energy:.6g}, mass {rep.S.mass_term:.6g})",
            f"maxwell residual   {rep.maxwell:.3e}",
            f"wave residual      {rep.wave:.3e}",
            f"hermitian residual {rep.hermitian:.3e}",
            f"length law         {rep.lengthdef:.3e}",
            f"length consistency {rep.length_consistency:.3e}",
            f"gauge invariance   {rep.gauge_invariance:.3e}",
            "PASS" if rep.passed else "FAIL"]


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("state", type=click.Path(exists=True, dir_okay=False))
@click.option("--mass", type=float, default=1.0, show_default=True, help="Mass m > 0.")
@click.option("--delta0", type=float, default=DEFAULT_DELTA0, show_default=True, help="Seed value of delta.")
@click.option("--seed-edge", default=None, help="Edge receiving delta0 (default: first edge of each piece).")
@click.option("--splitting", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Use this charge splitting instead of decomposing the state.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the realization JSON here.")
@click.pass_context
@_handle_errors
def realize(ctx, graph, state, mass, delta0, seed_edge, splitting, out):
    """Build the critical spectral configuration of an isometric state."""
    g = load_graph(graph)
    s = IsometricState.from_json(read_json(state))
    split = ChargeSplitting.from_json(read_json(splitting)) if splitting else None
    inputs = {"graph": graph, "state": state}
    if splitting:
        inputs["splitting"] = splitting
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else 1e-9
    r = geometric_to_spectral(g, s, split, mass=mass, delta0=delta0, seed_edge=seed_edge)
    rep = verify_critical(r, tol=tol, seed=ctx.obj["seed"])
    manifest = _manifest(ctx, "realize", inputs, mass=mass, delta0=delta0, seed_edge=seed_edge)
    realization = {"manifest": manifest.to_json(), **r.to_json()}
    if out:
        Path(out).write_text(dumps(realization))
    payload = {"manifest": manifest.to_json(), "report": rep.to_json(), "realization": r.to_json()}
    lines = [f"Ds[{w}] = {r.ds.values[w]:.17g}" for w, _ in g.pairs] + _report_lines(rep)
    _emit(ctx, payload, lines)
    if not rep.passed:
        raise Failure(EXIT_FAILED)


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("realization", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_handle_errors
def verify(ctx, graph, realization):
    """Check that a stored realization is critical."""
    g = load_graph(graph)
    r = SpectralRealization.from_json(g, read_json(realization))
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else 1e-9
    rep = verify_critical(r, tol=tol, seed=ctx.obj["seed"])
    payload = {"manifest": _manifest(ctx, "verify", {"graph": graph, "realization": realization}).to_json(),
               "report": rep.to_json()}
    _emit(ctx, payload, _report_lines(rep))
    if not rep.passed:
        raise Failure(EXIT_FAILED)


@main.command("massgap-scan")
@click.option("--rho-min", type=float, default=-3.0, show_default=True)
@click.option("--rho-max", type=float, default=3.0, show_default=True)
@click.option("--steps", type=int, default=121, show_default=True)
@click.option("--starts", type=int, default=16, show_default=True, help="Random starts per parity of n.")
@click.option("--workers", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the CSV here instead of stdout.")
@click.pass_context
@_handle_errors
def massgap_scan_cmd(ctx, rho_min, rho_max, steps, starts, workers, out):
    """Compare the massgap classifier with a numerical search on a rho grid."""
    if steps < 1:
        raise ValidationError("--steps must be positive")
    rows = massgap_scan(rho_min, rho_max, steps, starts=starts, seed=ctx.obj["seed"], workers=workers)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rho", "phase", "found_numeric", "residual"])
    for row in rows:
        writer.writerow([repr(row.rho), row.phase.value, str(row.found_numeric).lower(), repr(row.residual)])
    checked = [r for r in rows if min(abs(abs(r.rho) - c) for c in (0.0, 1.0, 2.0)) > 0.01]
    mismatches = [r for r in checked if not r.agrees]
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        click.echo(buf.getvalue(), nl=False)
    click.echo(f"mismatches: {len(mismatches)} of {len(checked)} checked points", err=True)
    if mismatches:
        raise Failure(EXIT_FAILED)


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("ds", type=click.Path(exists=True, dir_okay=False))
@click.argument("v0")
@click.argument("v1")
@click.pass_context
@_handle_errors
def distance(ctx, graph, ds, v0, v1):
    """Connes distance between two vertices."""
    g = load_graph(graph)
    t = build_triple(g, DsFunction.from_json(g, read_json(ds)))
    res = connes_distance(t, v0, v1)
    text = "infinite" if math.isinf(res.distance) else f"{res.distance:.17g}"
    payload = {"manifest": _manifest(ctx, "distance", {"graph": graph, "ds": ds}, v0=v0, v1=v1).to_json(),
               "distance": res.distance, "path": res.path}
    _emit(ctx, payload, [text])


@main.command()
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("function", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_handle_errors
def laplacian(ctx, graph, function):
    """Graph Laplacian of a vertex function given as {vertex: value}."""
    g = load_graph(graph)
    data = read_json(function)
    try:
        f = np.array([float(data[v]) for v in g.vertices])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"vertex function must map every vertex to a number: {exc}") from exc
    lap = graph_laplacian(g, f)
    lhs = vertex_inner(g, lap, f).real
    rhs = edge_inner(g, graph_d(g, f), graph_d(g, f)).real
    payload = {"manifest": _manifest(ctx, "laplacian", {"graph": graph, "function": function}).to_json(),
               "laplacian": {v: float(x) for v, x in zip(g.vertices, lap)},
               "energy_identity": {"lhs": lhs, "rhs": rhs}}
    lines = [f"Lf[{v}] = {x:.17g}" for v, x in zip(g.vertices, lap)]
    lines.append(f"<Lf, f> = {lhs:.17g}, |df|^2 = {rhs:.17g}")
    _emit(ctx, payload, lines)


if __name__ == "__main__":
    main()
