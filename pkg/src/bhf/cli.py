"""Command line front end: run one solver or a (g, |p|) sweep and write reports.

Single runs produce a JSON report; sweeps produce a CSV table plus an
aggregated JSON report.  Exit status is 0 when every requested solve
converged, 2 otherwise, and 64 for usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import __version__
from .coherent import solve_coherent
from .energy import dressed_momentum, energy_squeeze, vacuum_energy
from .errors import BHFError
from .fock import convergence_table, oracle_grid
from .grid import build_grid, spherical_rule
from .lagrange import lagrange_iterate
from .perturbation import c22_report, energy_fourth_order
from .quasifree import sample_squeeze
from .variational import minimize_quasifree

SOLVERS = ("coherent", "quasifree", "lagrange", "perturb", "oracle", "sweep")
SWEEP_SOLVERS = ("coherent", "quasifree", "lagrange", "perturb")
CSV_HEADER = ["g", "p_norm", "E_vac", "E_coh", "E_qf", "E_lagrange",
              "E_pert2", "E_pert4", "iters", "residual"]
OUTPUT_ENV = "BHF_OUTPUT_DIR"
EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE = 0, 2, 64
DEFAULT_TOL = {"coherent": 1e-10}
FALLBACK_TOL = 1e-8


class UsageError(Exception):
    """Invalid command line or configuration file."""


@dataclass
class RunConfig:
    sigma: float = 0.5
    cutoff: float = 2.0
    g: float = 0.05
    p: tuple = (0.1, 0.0, 0.0)
    n_radial: int = 8
    n_angular: int = 26
    solver: str = "coherent"
    tol: float | None = None
    max_iter: int = 500
    seed: int = 0
    out: str | None = None
    csv: str | None = None
    jobs: int = 1
    g_values: tuple = ()
    p_values: tuple = ()
    sweep_solvers: tuple = SWEEP_SOLVERS
    modes: int = 2
    nmax_values: tuple = (4, 6, 8)
    sample_scale: float = 0.05

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL.get(self.solver, FALLBACK_TOL)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("csv")
        d["tol"] = self.tolerance
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _floats(text, name, length=None):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    try:
        vals = tuple(float(x) for x in items)
    except ValueError:
        raise UsageError(f"{name}: expected comma separated numbers, got {text!r}") from None
    if length is not None and len(vals) != length:
        raise UsageError(f"{name}: expected {length} components, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{name}: values must be finite")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bhf", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON file with default values (flags win)")
    ap.add_argument("--sigma", type=float)
    ap.add_argument("--cutoff", type=float)
    ap.add_argument("--g", type=float)
    ap.add_argument("--p", help="total momentum as x,y,z")
    ap.add_argument("--nr", dest="n_radial", type=int)
    ap.add_argument("--nang", dest="n_angular", type=int)
    ap.add_argument("--solver", choices=SOLVERS)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--max-iter", dest="max_iter", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="JSON report path")
    ap.add_argument("--csv", help="CSV path for sweeps")
    ap.add_argument("--jobs", type=int, help="concurrent sweep points")
    ap.add_argument("--g-values", dest="g_values", help="sweep couplings, comma separated")
    ap.add_argument("--p-values", dest="p_values",
                    help="sweep momentum norms along the direction of --p")
    ap.add_argument("--sweep-solvers", dest="sweep_solvers",
                    help=f"subset of {','.join(SWEEP_SOLVERS)}")
    ap.add_argument("--modes", type=int, help="oracle mode count")
    ap.add_argument("--nmax-values", dest="nmax_values", help="oracle photon cutoffs")
    ap.add_argument("--sample-scale", dest="sample_scale", type=float,
                    help="oracle: norm of the random (f, r)")
    return ap


def _coerce(values: dict) -> dict:
    out = {}
    known = {f.name for f in fields(RunConfig)}
    for key, val in values.items():
        key = key.replace("-", "_")
        if key in ("nr",):
            key = "n_radial"
        if key in ("nang",):
            key = "n_angular"
        if key not in known:
            raise UsageError(f"unknown configuration key {key!r}")
        if key == "p":
            val = _floats(val, "p", 3)
        elif key in ("g_values", "p_values"):
            val = _floats(val, key)
        elif key == "nmax_values":
            val = tuple(int(x) for x in _floats(val, key))
        elif key == "sweep_solvers":
            val = tuple(val.split(",")) if isinstance(val, str) else tuple(val)
        out[key] = val
    return out


def validate(cfg: RunConfig) -> list[str]:
    errs = []
    if not cfg.sigma >= 0:
        errs.append("sigma >= 0 required")
    if not cfg.sigma < cfg.cutoff:
        errs.append("sigma < cutoff required")
    if cfg.solver not in SOLVERS:
        errs.append(f"unknown solver {cfg.solver!r}")
    if cfg.solver in ("quasifree", "lagrange") and not cfg.sigma > 0:
        errs.append(f"solver {cfg.solver} requires sigma > 0")
    if cfg.solver == "sweep" and not cfg.sigma > 0 and (
            {"quasifree", "lagrange"} & set(cfg.sweep_solvers)):
        errs.append("quasifree and lagrange sweeps require sigma > 0")
    if cfg.tol is not None and not cfg.tol > 0:
        errs.append("tol > 0 required")
    if cfg.max_iter < 1:
        errs.append("max-iter >= 1 required")
    if cfg.n_radial < 2:
        errs.append("nr >= 2 required")
    try:
        spherical_rule(cfg.n_angular)
    except BHFError as exc:
        errs.append(str(exc))
    if cfg.jobs < 1:
        errs.append("jobs >= 1 required")
    bad = set(cfg.sweep_solvers) - set(SWEEP_SOLVERS)
    if bad:
        errs.append(f"unknown sweep solvers {sorted(bad)}")
    if cfg.solver == "sweep" and not (cfg.g_values and cfg.p_values):
        errs.append("sweep requires --g-values and --p-values")
    if cfg.solver == "oracle" and not 1 <= cfg.modes <= 4:
        errs.append("modes must be in 1..4")
    if cfg.solver == "oracle" and any(not 0 <= n <= 10 for n in cfg.nmax_values):
        errs.append("nmax values must be in 0..10")
    if not cfg.sample_scale > 0:
        errs.append("sample-scale > 0 required")
    return errs


def parse_config(argv=None) -> RunConfig:
    """Parse flags (and an optional JSON file); raise :class:`UsageError` listing every problem."""
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        values.update(_coerce(data))
    flags = {k: v for k, v in vars(ns).items() if v is not None and k != "config"}
    values.update(_coerce(flags))
    cfg = replace(RunConfig(), **values)
    errs = validate(cfg)
    if errs:
        raise UsageError("; ".join(errs))
    return cfg


# ------------------------------------------------------------------ running


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _grid(cfg: RunConfig):
    return build_grid(cfg.sigma, cfg.cutoff, cfg.n_radial, cfg.n_angular)


def _solve_point(cfg: RunConfig, g: float, p, solvers) -> dict:
    """Run the requested solvers at one parameter point; never raises on solver failure."""
    grid = _grid(cfg)
    p = np.asarray(p, float)
    tol_c = cfg.tol if cfg.tol is not None else DEFAULT_TOL["coherent"]
    tol_v = cfg.tol if cfg.tol is not None else FALLBACK_TOL
    out = {"energies": {"vacuum": vacuum_energy(grid, g, p)},
           "converged": True, "errors": {}, "solvers": {}}

    def fail(name, exc):
        out["errors"][name] = f"{type(exc).__name__}: {exc}"
        out["converged"] = False

    if "coherent" in solvers:
        try:
            rep = solve_coherent(grid, g, p, tol=tol_c, max_iter=cfg.max_iter)
            out["energies"]["coherent"] = rep.energy
            out["solvers"]["coherent"] = {
                "u": rep.u, "iterations": rep.iterations, "residual": rep.residual,
                "contraction_trace": rep.contraction_trace,
                "photon_number": float(np.vdot(rep.f, rep.f).real),
                "converged": rep.converged, "message": rep.message}
            out["converged"] &= rep.converged
        except BHFError as exc:
            fail("coherent", exc)
    if "quasifree" in solvers:
        try:
            rep = minimize_quasifree(grid, g, p, tol=tol_v, max_iter=cfg.max_iter)
            st = rep.state
            out["energies"]["quasifree"] = rep.energy
            out["solvers"]["quasifree"] = {
                "iterations": rep.iterations, "grad_norm": rep.grad_norm,
                "u": dressed_momentum(grid, g, p, st.f, st.gamma),
                "photon_number": st.photon_number(),
                "gamma_trace": float(np.trace(st.gamma).real),
                "energy_trace": rep.energy_trace, "certified": rep.certified,
                "inside_ball": rep.inside_ball, "radius_estimate": rep.radius_estimate,
                "imag_norm": rep.imag_norm, "converged": rep.converged,
                "message": rep.message}
            out["converged"] &= rep.converged
        except BHFError as exc:
            fail("quasifree", exc)
    if "lagrange" in solvers:
        try:
            rep = lagrange_iterate(grid, g, p, tol=tol_v, max_iter=cfg.max_iter)
            out["energies"]["lagrange"] = rep.energy
            out["solvers"]["lagrange"] = {
                "iterations": rep.iterations, "u": rep.state.u,
                "residuals": asdict(rep.residuals),
                "gamma_trace": float(np.trace(rep.state.gamma).real),
                "step_trace": rep.step_trace, "certified": rep.certified,
                "converged": rep.converged, "message": rep.message}
            out["converged"] &= rep.converged
        except BHFError as exc:
            fail("lagrange", exc)
    if "perturb" in solvers:
        s = energy_fourth_order(grid, g, p)
        out["energies"]["pert2"] = s.e_pred2
        out["energies"]["pert4"] = s.e_pred
        c22 = c22_report(grid)
        out["solvers"]["perturb"] = {
            "e_vacuum": s.e_vacuum, "quad_p": s.quad_p, "quart_g": s.quart_g,
            "e_pred": s.e_pred, "c22_quadrature": c22.quadrature,
            "c22_radial_oracle": c22.radial_oracle, "c22_closed_form": c22.closed_form,
            "c22_closed_form_ratio": c22.ratio, "c22_discrepancy": c22.discrepancy}
    return _jsonable(out)


def _oracle(cfg: RunConfig) -> dict:
    grid = oracle_grid(cfg.modes, cfg.sigma if cfg.sigma > 0 else 1.0, cfg.cutoff)
    f, r = sample_squeeze(cfg.seed, 1.0, cfg.modes)
    scale = cfg.sample_scale / np.sqrt(np.vdot(f, f).real + np.vdot(r, r).real)
    f, r = scale * f, scale * r
    ref = energy_squeeze(grid, cfg.g, cfg.p, f, r)
    table = convergence_table(grid, cfg.g, cfg.p, f, r, ref, cfg.nmax_values)
    errs = [row["rel_error"] for row in table]
    return {"functional_energy": ref, "table": table,
            "monotone": all(b < a for a, b in zip(errs, errs[1:]))}


def _sweep_points(cfg: RunConfig):
    p = np.asarray(cfg.p, float)
    norm = np.linalg.norm(p)
    direction = p / norm if norm > 0 else np.array([1.0, 0.0, 0.0])
    return [(g, pn, tuple(pn * direction)) for g in cfg.g_values for pn in cfg.p_values]


def _sweep_task(args):
    cfg, g, p = args
    return _solve_point(cfg, g, p, cfg.sweep_solvers)


def _csv_row(g, pn, point) -> list:
    e = point["energies"]
    solvers = point["solvers"]
    iters = solvers.get("quasifree", solvers.get("lagrange", solvers.get("coherent", {}))
                        ).get("iterations", "")
    residual = ""
    if "lagrange" in solvers:
        residual = max(solvers["lagrange"]["residuals"].values())
    elif "quasifree" in solvers:
        residual = solvers["quasifree"]["grad_norm"]
    elif "coherent" in solvers:
        residual = solvers["coherent"]["residual"]

    def cell(key):
        v = e.get(key)
        return "" if v is None else repr(float(v))

    return [repr(float(g)), repr(float(pn)), cell("vacuum"), cell("coherent"),
            cell("quasifree"), cell("lagrange"), cell("pert2"), cell("pert4"),
            str(iters), "" if residual == "" else repr(float(residual))]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class RunReport:
    body: dict
    exit_code: int
    csv_text: str | None = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = dict(self.body)
        data["wall_time"] = self.wall_time
        return json.dumps(_jsonable(data), sort_keys=True, indent=2)


def run(cfg: RunConfig) -> RunReport:
    """Dispatch the configured solver; solver failures land in the report."""
    start = time.perf_counter()
    body = {"version": __version__, "config": cfg.echo(), "solver": cfg.solver}
    csv_text = None
    if cfg.solver == "oracle":
        try:
            body["oracle"] = _jsonable(_oracle(cfg))
            ok = body["oracle"]["monotone"]
        except BHFError as exc:
            body["error"] = f"{type(exc).__name__}: {exc}"
            ok = False
    elif cfg.solver == "sweep":
        tasks = [(cfg, g, p) for g, _, p in _sweep_points(cfg)]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
                results = list(ex.map(_sweep_task, tasks))
        else:
            results = [_sweep_task(t) for t in tasks]
        rows, points = [], []
        for (g, pn, p), res in zip(_sweep_points(cfg), results):
            rows.append(_csv_row(g, pn, res))
            points.append({"g": g, "p": list(p), "p_norm": pn, **res})
        body["points"] = points
        csv_text = sweep_csv(rows)
        ok = all(pt["converged"] for pt in points)
    else:
        body.update(_solve_point(cfg, cfg.g, cfg.p, (cfg.solver,)))
        ok = body["converged"]
    body["status"] = "ok" if ok else "not_converged"
    return RunReport(body=body, exit_code=EXIT_OK if ok else EXIT_NOT_CONVERGED,
                     csv_text=csv_text, wall_time=time.perf_counter() - start)


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".bhf-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve(path, default_name):
    base = os.environ.get(OUTPUT_ENV)
    if path:
        return path if os.path.isabs(path) or not base else os.path.join(base, path)
    return os.path.join(base, default_name) if base else None


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"bhf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run(cfg)
    out = _resolve(cfg.out, "report.json")
    text = report.to_json() + "\n"
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
    if report.csv_text is not None:
        csv_path = _resolve(cfg.csv, "sweep.csv")
        if csv_path:
            write_atomic(csv_path, report.csv_text)
        elif out:
            write_atomic(os.path.splitext(out)[0] + ".csv", report.csv_text)
        else:
            sys.stdout.write(report.csv_text)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
