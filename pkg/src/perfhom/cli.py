"""Command line entry point: ``perfhom <command> --scenario file.toml --out dir``.

Exit codes: 0 success, 1 failed verdict, 2 configuration error,
3 solver non-convergence.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict, replace
from importlib import metadata
from pathlib import Path

import click
import numpy as np

from . import cell, fem, geometry, kernels, rates, svgplot
from .mesh import MeshError, mesh_quality, triangulate, write_mesh, write_values
from .scenario import ConfigError, ScenarioFile, load

log = logging.getLogger("perfhom")

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "triangle", "click"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(f"not serializable: {type(o).__name__}")


class Run:
    """Per-invocation context: output directory, scenario and manifest."""

    def __init__(self, command: str, scenario: str, out: str, seed, jobs: int, tol, timing: bool = False):
        self.command = command
        self.t0 = time.perf_counter()
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.scenario_path = Path(scenario)
        self.seed = seed
        self.jobs = jobs
        self.tol = tol
        self.timing = timing
        self.artifacts: list[str] = []
        self.extra: dict = {}
        self.sf: ScenarioFile | None = None
        self.sf = load(self.scenario_path, seed)
        if tol is not None:
            self.sf.scenario.tol = {"L2": tol, "W12": tol}

    def write(self, name: str, text: str) -> Path:
        p = self.out / name
        p.write_text(text)
        self.artifacts.append(name)
        return p

    def dump(self, name: str, obj) -> Path:
        p = self.out / name
        _dump(p, obj)
        self.artifacts.append(name)
        return p

    def manifest(self, status: int) -> None:
        text = self.scenario_path.read_text() if self.scenario_path.exists() else ""
        (self.out / "scenario.toml").write_text(text)
        _dump(self.out / "manifest.json", {
            "command": self.command,
            "argv": sys.argv[1:],
            "scenario_path": str(self.scenario_path),
            "scenario_sha256": hashlib.sha256(text.encode()).hexdigest(),
            "scenario_copy": "scenario.toml",
            "seed": self.sf.seed if self.sf else self.seed,
            "jobs": self.jobs,
            "tol_override": self.tol,
            "timing": self.timing,
            "backend": kernels.BACKEND,
            "versions": _versions(),
            "started": self.started,
            "wall_seconds": time.perf_counter() - self.t0,
            "exit_status": status,
            "artifacts": sorted(self.artifacts),
            **self.extra,
        })


def _execute(ctx_args: dict, command: str, body) -> None:
    """Run ``body(run)`` mapping exceptions to exit codes; always write a manifest."""
    run = None
    status = EXIT_OK
    try:
        run = Run(command, **ctx_args)
        status = body(run)
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        status = EXIT_CONFIG
    except (fem.NonConvergence, fem.IndefiniteSystem) as e:
        click.echo(f"solver error: {e}", err=True)
        status = EXIT_SOLVER
    except geometry.GeometryError as e:
        click.echo(f"geometry error: {e}", err=True)
        status = EXIT_CONFIG
    except MeshError as e:
        click.echo(f"mesh error: {e}", err=True)
        status = EXIT_VERDICT
    finally:
        if run is None:
            # scenario failed to parse: still leave a manifest next to the diagnostics
            out = Path(ctx_args["out"])
            out.mkdir(parents=True, exist_ok=True)
            _dump(out / "manifest.json", {"command": command, "argv": sys.argv[1:],
                                          "scenario_path": str(ctx_args["scenario"]), "exit_status": status,
                                          "versions": _versions(), "backend": kernels.BACKEND})
        else:
            run.manifest(status)
    sys.exit(status)


def _common(f):
    f = click.option("--scenario", "scenario", required=True, type=click.Path(dir_okay=False),
                     help="TOML scenario file.")(f)
    f = click.option("--out", "out", default="out", show_default=True, type=click.Path(file_okay=False),
                     help="Output directory (created if absent).")(f)
    f = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
                     help="Override the scenario seed.")(f)
    f = click.option("--jobs", type=click.IntRange(1), default=1, show_default=True,
                     help="Worker threads for independent solves.")(f)
    f = click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=None,
                     help="Override verdict tolerances.")(f)
    return f


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def main(verbose: int) -> None:
    """Numerical testbed for elliptic problems in perforated domains."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


def _pick_eps(sf: ScenarioFile, eps: float | None) -> float:
    return sf.eps_list[0] if eps is None else eps


@main.command("check-geometry")
@_common
def check_geometry(**kw):
    """Audit the geometric assumptions for every eps of the scenario."""

    def body(run: Run) -> int:
        scn = run.sf.scenario
        reports = []
        ok = True
        for eps in scn.eps_list:
            layout = rates.layout_for(scn, eps, float(scn.eta_rule(eps)))
            rep = geometry.audit(layout)
            reports.append({"eps": eps, "eta": layout.eta, "cavities": len(layout.cavities), **rep.to_dict()})
            ok = ok and rep.passed
            click.echo(f"eps={eps:g} cavities={len(layout.cavities)} passed={rep.passed} {rep.verdicts()}")
        run.dump("geometry.json", {"scenario": scn.name, "passed": ok, "reports": reports})
        return EXIT_OK if ok else EXIT_VERDICT

    _execute(kw, "check-geometry", body)


@main.command("mesh")
@_common
@click.option("--eps", type=float, default=None, help="Which eps of the scenario (default: the first).")
def mesh_cmd(eps, **kw):
    """Mesh the perforated domain and write it with quality statistics."""

    def body(run: Run) -> int:
        scn = run.sf.scenario
        e = _pick_eps(run.sf, eps)
        layout = rates.layout_for(scn, e, float(scn.eta_rule(e)))
        m = triangulate(layout, scn.h_factor * 4 * e)
        q = mesh_quality(m)
        write_mesh(m, run.out / "mesh.txt")
        run.artifacts.append("mesh.txt")
        run.dump("mesh.json", {"eps": e, "eta": layout.eta, "vertices": m.n_vertices,
                               "triangles": m.n_triangles, **q})
        click.echo(f"eps={e:g}: {m.n_vertices} vertices, {m.n_triangles} triangles, "
                   f"min angle {q['min_angle']:.2f} deg")
        return EXIT_OK

    _execute(kw, "mesh", body)


@main.command("solve")
@_common
@click.option("--eps", type=float, default=None, help="Which eps of the scenario (default: the first).")
def solve_cmd(eps, **kw):
    """Solve the perforated problem at one eps and report norms."""

    def body(run: Run) -> int:
        scn = run.sf.scenario
        e = _pick_eps(run.sf, eps)
        eta = float(scn.eta_rule(e))
        layout = rates.layout_for(scn, e, eta)
        rates.check_hypotheses(scn, layout)
        m = triangulate(layout, scn.h_factor * 4 * e)
        robin = scn.robin_model(e, eta)
        rep = fem.coercivity_bound(m, scn.coeffs, robin, probe=False)
        sol = fem.solve(m, scn.coeffs, robin, fem.ProblemData(f=scn.f, lam=scn.lam, lambda0=rep.lambda0))
        write_mesh(m, run.out / "mesh.txt")
        write_values(sol.values, run.out / "solution.txt")
        run.artifacts += ["mesh.txt", "solution.txt"]
        nrm = fem.norms(sol)
        run.dump("solve.json", {"eps": e, "eta": eta, "mu": scn.mu(e), "triangles": m.n_triangles,
                                "iterations": sol.iterations, "residual": sol.residual, "method": sol.method,
                                "lambda0": rep.lambda0, "norms": nrm})
        click.echo(f"eps={e:g}: L2={nrm['l2']:.6e} W12={nrm['w12']:.6e} "
                   f"({sol.iterations} iterations, residual {sol.residual:.1e})")
        return EXIT_OK

    _execute(kw, "solve", body)


@main.command("cell")
@_common
def cell_cmd(**kw):
    """Cell problems: v0, v1, v_mu expansion and the radial profile X."""

    def body(run: Run) -> int:
        c = run.sf.cell or {"eta": 1.0, "epsmu": [0.1, 0.05], "h_max": 0.2}
        eta, h = c["eta"], c["h_max"]
        v0 = cell.solve_v0(eta, h)
        v1, c4 = cell.solve_v1(eta, h)
        rows = []
        for em in c["epsmu"]:
            vmu = cell.solve_vmu(eta, em, h)
            rows.append({"epsmu": em, "remainder_w12": cell.verify_expansion(vmu, v1, epsmu=em),
                         "hole_mean": vmu.hole_mean()})
        ratios = [a["remainder_w12"] / b["remainder_w12"] for a, b in zip(rows, rows[1:])]
        x_eta = min(eta, 1.0)
        X, xinfo = cell.solve_X(x_eta)
        out = {"eta": eta, "h_max": h, "v0": v0.norms(), "v1": v1.norms(), "c4": c4,
               "c4_discrete": v1.info["c4_discrete"], "expansion": rows, "remainder_ratios": ratios,
               "X": {"eta": x_eta, **{k: v for k, v in xinfo.items() if np.isscalar(v)}}}
        run.dump("cell.json", out)
        click.echo(f"eta={eta:g}: |v0|={out['v0']['l2']:.5f} c4={c4:.5f} remainder ratios "
                   + ", ".join(f"{r:.3f}" for r in ratios))
        return EXIT_OK

    _execute(kw, "cell", body)


def _sweep_plot(res: rates.RateSweepResult) -> str:
    eps = [r.eps for r in res.records]
    ser = {"L2 / |f|": (eps, [r.l2_norm / r.f_norm if r.f_norm else 0.0 for r in res.records]),
           "W12 / |f|": (eps, [r.w12_norm / r.f_norm if r.f_norm else 0.0 for r in res.records])}
    for norm, key in (("L2", "l2_norm"), ("W12", "w12_norm")):
        pred = [rates.predicted_bound(r.eps, r.eta, r.mu if res.theorem == "T1" else None, 2, res.theorem, norm)
                for r in res.records]
        y_last = getattr(res.records[-1], key) / res.records[-1].f_norm if res.records[-1].f_norm else 0.0
        if pred[-1] > 0 and y_last > 0:
            s = y_last / pred[-1]
            ser[f"bound {norm} (scaled)"] = (eps, [p * s for p in pred])
    return svgplot.loglog(ser, title=f"{res.scenario} ({res.theorem})", ylabel="norm / |f|",
                          dashed=("bound L2 (scaled)", "bound W12 (scaled)"))


@main.command("sweep")
@_common
@click.option("--plot", is_flag=True, help="Write a log-log SVG of the norms.")
@click.option("--timing/--no-timing", default=False, show_default=True,
              help="Record measured wall_ms in the CSV (breaks byte-identical reruns).")
def sweep_cmd(plot, timing, **kw):
    """Solve for every eps, fit slopes and compare with the predicted rates."""

    def body(run: Run) -> int:
        scn = run.sf.scenario
        res = rates.run_sweep(scn, jobs=run.jobs)
        run.extra["wall_ms"] = [r.wall_ms for r in res.records]
        if not timing:
            res.records = [replace(r, wall_ms=0.0) for r in res.records]
        run.write("sweep.csv", res.to_csv())
        run.write("verdict.json", res.to_json() + "\n")
        if plot:
            run.write("sweep.svg", _sweep_plot(res))
        for v in res.verdicts:
            s = v["fitted_slope"]
            click.echo(f"{v['theorem']} {v['norm']}: slope={'n/a' if s is None else f'{s:.3f}'} "
                       f"predicted={v['predicted_exponent']} status={v['status']}")
        return EXIT_OK if res.passed else EXIT_VERDICT

    run_kw = dict(kw, timing=timing)
    _execute(run_kw, "sweep", body)


SHARPNESS_COLUMNS = ("eps", "eta", "mu", "u_l2", "grad_u_l2", "rhs_l2", "f_l2_domain", "ratio_l2", "ratio_grad",
                     "target_l2", "target_grad", "rel_l2", "rel_grad")


def _sharp_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SHARPNESS_COLUMNS)
    for r in rows:
        d = asdict(r)
        d["rel_l2"], d["rel_grad"] = r.rel_l2, r.rel_grad
        w.writerow(["" if d[c] is None else repr(float(d[c])) for c in SHARPNESS_COLUMNS])
    return buf.getvalue()


def sharpness_verdicts(kind: str, rows, tol: float | None = None) -> list[dict]:
    """Dirichlet: ``|rel - 1| <= tol`` (0.15) at the smallest eps for both norms.
    Robin: ``|rel - 1| <= tol`` (0.2) at the smallest eps and deviations decreasing."""
    last = rows[-1]
    if kind == "dirichlet":
        t = 0.15 if tol is None else tol
        out = []
        for norm, rel in (("L2", last.rel_l2), ("W12", last.rel_grad)):
            out.append({"kind": kind, "norm": norm, "eps": last.eps, "relative": rel, "tol": t,
                        "pass": bool(abs(rel - 1) <= t)})
        return out
    t = 0.2 if tol is None else tol
    dev = [abs(r.rel_l2 - 1) for r in rows]
    mono = all(b < a for a, b in zip(dev, dev[1:]))
    ok = abs(last.rel_l2 - 1) <= t
    return [{"kind": kind, "norm": "L2", "eps": last.eps, "relative": last.rel_l2, "tol": t,
             "deviations": dev, "within_tol": bool(ok), "deviation_decreasing": bool(mono),
             "pass": bool(ok and mono)}]


@main.command("sharpness")
@_common
@click.option("--plot", is_flag=True, help="Write an SVG of the relative ratios.")
def sharpness_cmd(plot, **kw):
    """Sharpness constructions from the periodic cell solutions."""

    def body(run: Run) -> int:
        sh = run.sf.sharpness
        if not sh:
            raise ConfigError("sharpness", "scenario has no [sharpness] table")
        if sh["kind"] == "dirichlet":
            rows, info = rates.sharpness_dirichlet(sh["eps"], sh["eta"])
        else:
            rows, info = rates.sharpness_robin(sh["eps"], rates.mu_power(sh["beta"]), sh["eta"])
        verdicts = sharpness_verdicts(sh["kind"], rows, run.tol)
        run.write("sharpness.csv", _sharp_csv(rows))
        run.dump("sharpness.json", {"kind": sh["kind"], "info": info, "verdicts": verdicts,
                                    "pass": all(v["pass"] for v in verdicts)})
        if plot:
            eps = [r.eps for r in rows]
            ser = {"rel L2": (eps, [r.rel_l2 for r in rows])}
            if rows[0].rel_grad is not None:
                ser["rel grad"] = (eps, [r.rel_grad for r in rows])
            run.write("sharpness.svg", svgplot.loglog(ser, title=f"sharpness ({sh['kind']})", ylabel="ratio / target"))
        for r in rows:
            g = "n/a" if r.rel_grad is None else f"{r.rel_grad:.4f}"
            click.echo(f"eps={r.eps:g}: rel_l2={r.rel_l2:.4f} rel_grad={g}")
        return EXIT_OK if all(v["pass"] for v in verdicts) else EXIT_VERDICT

    _execute(kw, "sharpness", body)


@main.command("report")
@_common
@click.option("--input", "input_dir", type=click.Path(file_okay=False, exists=True), default=None,
              help="Directory holding sweep.csv (default: --out).")
@click.option("--plot", is_flag=True, help="Also write the sweep SVG.")
def report_cmd(input_dir, plot, **kw):
    """Recompute verdicts from a stored sweep CSV without solving."""

    def body(run: Run) -> int:
        src = Path(input_dir) if input_dir else run.out
        path = src / "sweep.csv"
        if not path.exists():
            raise ConfigError("--input", f"no sweep.csv in {src}")
        recs = rates.records_from_csv(path.read_text())
        scn = run.sf.scenario
        verdicts = rates.verdicts_from_records(recs, scn.theorem, scn.tol)
        res = rates.RateSweepResult(scn.name, scn.theorem, recs, verdicts)
        lines = [f"# {scn.name} ({scn.theorem})", "", "| eps | eta | mu | L2/|f| | W12/|f| | triangles |",
                 "|---|---|---|---|---|---|"]
        for r in recs:
            fn = r.f_norm or 1.0
            lines.append(f"| {r.eps:g} | {r.eta:g} | {r.mu:g} | {r.l2_norm / fn:.4e} | {r.w12_norm / fn:.4e} "
                         f"| {r.triangles} |")
        lines += ["", "| norm | slope | predicted | status |", "|---|---|---|---|"]
        for v in verdicts:
            s = "n/a" if v["fitted_slope"] is None else f"{v['fitted_slope']:.3f}"
            p = "n/a" if v["predicted_exponent"] is None else f"{v['predicted_exponent']:.3f}"
            lines.append(f"| {v['norm']} | {s} | {p} | {v['status']} |")
        text = "\n".join(lines) + "\n"
        run.write("report.md", text)
        run.write("report.json", json.dumps(verdicts, indent=2, sort_keys=True) + "\n")
        if plot:
            run.write("sweep.svg", _sweep_plot(res))
        click.echo(text, nl=False)
        return EXIT_OK if res.passed else EXIT_VERDICT

    _execute(kw, "report", body)


if __name__ == "__main__":  # pragma: no cover
    main()
