"""Experiment runner: structural checks, truncation-scheme solves, plots.

Every run is reproducible byte-for-byte from its config: seeds are fixed in
the config, outputs carry no wall-clock content, and floats are written with
round-trip formatting.
"""

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import conditions as cond
from . import modular as mod
from . import operators as ops
from . import solver as sol
from ._svg import line_plot
from .grid import GridDomain, ScalarField
from .transform import HAVE_COMPILED


def _load_config(path):
    p = Path(path)
    if not p.is_file():
        raise click.UsageError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise click.UsageError(f"malformed config JSON: {err}") from err


def _param_field(grid, spec, name):
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, list):
        return np.asarray(spec, dtype=np.float64)
    if isinstance(spec, dict) and spec.get("kind") == "sin_product":
        X, Y = grid.meshgrid()
        fx, fy = spec.get("freq", [1, 1])
        return spec["base"] + spec["amp"] * np.sin(2 * np.pi * fx * X) * np.sin(
            2 * np.pi * fy * Y
        )
    raise click.UsageError(f"unsupported parameter spec for {name!r}")


def _build_domain(cfg):
    try:
        x0, x1, y0, y1 = cfg["extent"]
        return GridDomain(x0, x1, y0, y1, int(cfg["nx"]), int(cfg["ny"]),
                          cfg.get("star_radius"))
    except (KeyError, TypeError, ValueError) as err:
        raise click.UsageError(f"bad domain spec: {err}") from err


def _build_modular(cfg, grid):
    fam = cfg.get("family")
    prm = cfg.get("params", {})
    fields = {k: _param_field(grid, v, k) for k, v in prm.items()}
    try:
        if fam == "variable_exponent_power":
            return mod.variable_exponent_power(grid, fields["p"], fields.get("weight", 1.0))
        if fam == "double_phase":
            return mod.double_phase(grid, fields["p"], fields["q"], fields["a"])
        if fam == "exp_type":
            return mod.exp_type(grid, fields["a"])
        if fam == "anisotropic_sum":
            return mod.anisotropic_sum(
                grid, fields["p1"], fields["p2"], fields.get("a1", 1.0), fields.get("a2", 1.0)
            )
    except (KeyError, ValueError) as err:
        raise click.UsageError(f"bad modular spec: {err}") from err
    raise click.UsageError(f"unknown modular family: {fam!r}")


def _build_operator(cfg, grid):
    fam = cfg.get("family", "weighted_px_laplacian")
    try:
        if fam == "weighted_px_laplacian":
            return ops.weighted_px_laplacian(
                grid,
                _param_field(grid, cfg["p"], "p"),
                _param_field(grid, cfg.get("alpha", 1.0), "alpha"),
                eps_reg=float(cfg.get("eps_reg", 0.0)),
            )
        if fam == "anisotropic_px":
            return ops.anisotropic_px(
                grid,
                _param_field(grid, cfg["p1"], "p1"),
                _param_field(grid, cfg["p2"], "p2"),
                _param_field(grid, cfg.get("a1", 1.0), "a1"),
                _param_field(grid, cfg.get("a2", 1.0), "a2"),
                eps_reg=float(cfg.get("eps_reg", 0.0)),
            )
    except (KeyError, ValueError) as err:
        raise click.UsageError(f"bad operator spec: {err}") from err
    raise click.UsageError(f"unknown operator family: {fam!r}")


def _build_source(cfg, grid):
    kind = cfg.get("kind")
    if kind == "constant":
        return ScalarField(grid, np.full(grid.shape, float(cfg["value"])))
    if kind == "array":
        return ScalarField(grid, np.asarray(cfg["values"], dtype=np.float64))
    if kind == "inverse_distance":
        cx, cy = cfg["center"]
        scale = float(cfg.get("scale", 1.0))
        return sol.sample_source(
            grid,
            lambda x, y: scale / np.hypot(x - cx, y - cy),
            singular_points=[(cx, cy)],
        )
    raise click.UsageError(f"unknown source kind: {kind!r}")


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


@click.group()
def main():
    """Modular-space numerics experiment runner."""


_common = [
    click.option("--config", "config_path", required=True, help="JSON config file"),
    click.option("--out", "out_dir", required=True, help="output directory"),
    click.option("--threads", default=1, show_default=True, help="diagnostic workers"),
    click.option("--seed", default=None, type=int, help="override config seed"),
]


def _with_common(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


CONDITIONS = ("nfunction", "delta2", "log-holder", "condition-M")


@main.command()
@_with_common
def check(config_path, out_dir, threads, seed):
    """Run structural condition checks from a config."""
    cfg = _load_config(config_path)
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    wanted = cfg.get("conditions")
    if not wanted or any(c not in CONDITIONS for c in wanted):
        raise click.UsageError(f"conditions must be a nonempty subset of {CONDITIONS}")
    if "modular" not in cfg:
        raise click.UsageError("config must name a modular function")
    grid = _build_domain(cfg.get("domain", {"extent": [0, 1, 0, 1], "nx": 64, "ny": 64}))
    M = _build_modular(cfg["modular"], grid)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")

    all_pass = True
    for name in wanted:
        if name == "nfunction":
            rep = cond.check_nfunction(M, seed=seed)
        elif name == "delta2":
            rep = cond.check_delta2(M)
        elif name == "log-holder":
            extra = cfg.get("log_holder", {})
            rep = cond.check_log_holder(M, seed=seed, **extra)
        else:
            extra = cfg.get("condition_m", {})
            deltas = extra.get("deltas", [2**-3, 2**-4, 2**-5])
            rep = cond.check_condition_m(M, deltas, delta0=extra.get("delta0", 0.25))
        all_pass &= rep.passed
        fname = out / f"report_{name.replace('-', '_')}.json"
        fname.write_text(json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n")
        click.echo(f"{name}: {'pass' if rep.passed else 'FAIL'}")
    sys.exit(0 if all_pass else 1)


def _save_snapshots(out, report):
    for j, (s, u) in enumerate(zip(report.s_values, report.snapshots)):
        arr = np.ascontiguousarray(u.values, dtype="<f8")
        (out / f"u_{j:03d}.bin").write_bytes(arr.tobytes())
        sidecar = {
            "shape": list(arr.shape),
            "dtype": "<f8",
            "order": "C",
            "s": s,
            "iterations": int(report.infos[j]["iterations"]),
            "residual": float(report.infos[j]["residual"]),
        }
        (out / f"u_{j:03d}.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
        )


def load_snapshot(report_dir, j):
    """Read one stored snapshot back as (s, values)."""
    side = json.loads((Path(report_dir) / f"u_{j:03d}.json").read_text())
    raw = (Path(report_dir) / f"u_{j:03d}.bin").read_bytes()
    vals = np.frombuffer(raw, dtype=side["dtype"]).reshape(side["shape"])
    return side["s"], vals


SCHEMA = {
    "apriori.csv": {
        "s": "truncation level of the snapshot",
        "k": "truncation level of the diagnostic",
        "modular_gradient": "modular of the masked gradient",
        "modular_dual": "conjugate modular of the operator field",
        "bound": "(k / c_A) * ||f||_L1",
        "ratio_gradient": "modular_gradient / bound",
        "ratio_dual": "modular_dual / bound",
        "ok": "1 if both ratios are below (1 + tol)",
    },
    "radiation.csv": {
        "l": "annulus level",
        "radiation": "integral of A(x, grad u).grad u over {l < |u| < l+1}",
        "measure": "area of {|u| > l}",
    },
    "distances.csv": {
        "k": "truncation level",
        "p": "Lebesgue exponent",
        "step": "schedule junction index",
        "distance": "L^p distance between successive truncated snapshots",
    },
    "pairings.csv": {
        "phi": "test-field index",
        "k": "truncation level",
        "step": "schedule index",
        "pairing": "sum A(x, grad T_k u_s).grad phi * h^2",
    },
}


@main.command()
@_with_common
def solve(config_path, out_dir, threads, seed):
    """Run a truncation schedule with diagnostics.

    The solve path is deterministic; --seed is accepted for interface
    uniformity and recorded via the config copy.
    """
    cfg = _load_config(config_path)
    grid = _build_domain(cfg.get("domain", {}))
    spec = _build_operator(cfg.get("operator", {}), grid)
    mcfg = cfg.get("modular", "matched")
    M = ops.matched_modular(spec) if mcfg == "matched" else _build_modular(mcfg, grid)
    f = _build_source(cfg.get("source", {}), grid)
    schedule = cfg.get("schedule")
    if not schedule:
        raise click.UsageError("schedule must be a nonempty increasing list")
    tols = cfg.get("tolerances", {})
    diag_cfg = cfg.get("diagnostics", {})

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")

    prob = sol.EllipticProblem(grid, spec, M, f)
    try:
        report = sol.truncated_sequence(
            prob,
            schedule,
            tol=float(tols.get("solve_tol", 1e-9)),
            max_iter=int(tols.get("max_iter", 200000)),
        )
    except sol.NonConvergenceError as err:
        click.echo(f"solve failed at s={err.s}: {err}", err=True)
        sys.exit(1)
    _save_snapshots(out, report)

    k_values = diag_cfg.get("k_values", [1, 2, 4])
    p_values = diag_cfg.get("p_values", [2.0])
    rows, ok = sol.apriori_check(
        report, k_values, tol=float(tols.get("apriori_tol", 1e-2)), threads=threads
    )
    _write_csv(
        out / "apriori.csv",
        list(SCHEMA["apriori.csv"]),
        [
            [r["s"], r["k"], r["modular_gradient"], r["modular_dual"], r["bound"],
             r["ratio_gradient"], r["ratio_dual"], int(r["ok"])]
            for r in rows
        ],
    )

    u = report.snapshots[-1]
    l_max = diag_cfg.get("l_max") or max(2, int(np.ceil(np.max(np.abs(u.values)))))
    trace = sol.radiation_profile(u, spec, np.arange(1, l_max + 1))
    _write_csv(
        out / "radiation.csv",
        list(SCHEMA["radiation.csv"]),
        [
            [float(l), float(r), float(m)]
            for l, r, m in zip(trace.indices, trace.series["radiation"],
                               trace.series["measure"])
        ],
    )

    X, Y = grid.meshgrid()
    n_phis = int(diag_cfg.get("n_phis", 2))
    lx = grid.x1 - grid.x0
    ly = grid.y1 - grid.y0
    phis = [
        ScalarField.from_function(
            grid,
            lambda x, y, k=k: np.sin(np.pi * k * (x - grid.x0) / lx)
            * np.sin(np.pi * k * (y - grid.y0) / ly),
            dirichlet=True,
        )
        for k in range(1, n_phis + 1)
    ]
    if len(report.snapshots) >= 3:
        diag = sol.convergence_diagnostics(report, k_values, p_values, phis=phis)
        drows = []
        for key, arr in diag["successive_distances"].items():
            kv = dict(item.split("=") for item in key.split(","))
            for j, v in enumerate(arr):
                drows.append([float(kv["k"]), float(kv["p"]), j, float(v)])
        _write_csv(out / "distances.csv", list(SCHEMA["distances.csv"]), drows)
        prow = []
        for key, arr in diag["pairings"].items():
            phi_id, kpart = key.split(",")
            for j, v in enumerate(arr):
                prow.append([int(phi_id[3:]), float(kpart.split("=")[1]), j, float(v)])
        _write_csv(out / "pairings.csv", list(SCHEMA["pairings.csv"]), prow)

    (out / "schema.json").write_text(json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n")
    summary = {
        "c_A": report.c_A,
        "s_values": report.s_values,
        "apriori_ok": bool(ok),
        "f_l1": float(np.sum(np.abs(f.values)) * grid.cell_area),
        "compiled_kernel": bool(HAVE_COMPILED),
        "threads": threads,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    sys.exit(0 if ok else 1)


def _read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.asarray(rows)


@main.command()
@click.argument("report_dir")
@click.option("--out", "out_dir", default=None, help="output directory (default: report dir)")
def plot(report_dir, out_dir):
    """Render radiation, a-priori and convergence plots from a report."""
    rep = Path(report_dir)
    out = Path(out_dir) if out_dir else rep
    out.mkdir(parents=True, exist_ok=True)
    needed = ["radiation.csv", "apriori.csv", "distances.csv"]
    if not all((rep / n).is_file() for n in needed):
        click.echo("report directory is missing diagnostics", err=True)
        sys.exit(1)

    _, rad = _read_csv(rep / "radiation.csv")
    line_plot(
        out / "radiation-profile.svg",
        [("radiation", rad[:, 0], rad[:, 1]), ("measure", rad[:, 0], rad[:, 2])],
        title="radiation profile",
        xlabel="l",
        ylabel="annulus integral",
        logy=True,
    )

    _, apr = _read_csv(rep / "apriori.csv")
    series = []
    for k in sorted(set(apr[:, 1])):
        sel = apr[:, 1] == k
        ratio = np.maximum(apr[sel, 5], apr[sel, 6])
        series.append((f"k={k:g}", apr[sel, 0], ratio))
    line_plot(
        out / "apriori-ratio.svg",
        series,
        title="a priori modular ratios",
        xlabel="s",
        ylabel="modular / bound",
        logx=True,
    )

    _, dis = _read_csv(rep / "distances.csv")
    series = []
    for k in sorted(set(dis[:, 0])):
        for p in sorted(set(dis[:, 1])):
            sel = (dis[:, 0] == k) & (dis[:, 1] == p)
            if np.any(sel):
                series.append((f"k={k:g} p={p:g}", dis[sel, 2] + 1, dis[sel, 3]))
    line_plot(
        out / "convergence-trace.svg",
        series,
        title="successive truncation distances",
        xlabel="schedule junction",
        ylabel="L^p distance",
        logy=True,
    )
    sys.exit(0)


if __name__ == "__main__":
    main()
