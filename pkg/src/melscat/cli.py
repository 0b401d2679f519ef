"""Command-line front end: config-driven sweeps with machine-readable output.

Subcommands
-----------
``melnikov``   first-order jump predictions on a phase grid
``scatter``    brute-force scattering map vs predictions over an eps grid
``hamgen``     generating-value table (critical phase, envelope, gradients)
``gronwall``   perturbed-vs-unperturbed deviation over logarithmic horizons
``selftest``   identity suite plus the fast acceptance subset

Every run resolves a TOML config (defaults <- file <- flags), validates it
against a strict schema (unknown keys are rejected), and embeds the
resolved config in the report: JSON output carries it inline, CSV output
gets a ``<name>.meta.json`` sidecar. Exit codes: 0 success, 1 numerical
failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import verify
from ._quadrature import QuadratureError
from .flow import FlowError, IntegratorConfig
from .geometry import GeometryError, scattering_map_numeric
from .hamgen import HamgenError, script_L
from .melnikov import (QuadratureConfig, delta_I_first_order,
                       delta_theta_first_order, predictions)
from .model import (EPS_MAX, ExtendedState, FieldEvalError,
                    PerturbationField, PotentialSpec, RotatorSpec,
                    SystemSpec)

__all__ = ["ConfigError", "main"]


class ConfigError(Exception):
    """Raised for malformed or contradictory run configuration."""


_DEFAULTS: dict = {
    "system": {
        "d": 1,
        "n": 1,
        "signs": [],        # [] -> all +1
        "potentials": [],   # [] -> builtin cosine; else per-pendulum
                            # coefficient lists ([] entry -> builtin)
    },
    "perturbation": {
        "kind": "hamiltonian",   # none | hamiltonian | components | damping
        "h1": "cos(2*pi*q1)*cos(2*pi*theta1)",
        "xp": [], "xq": [], "xI": [], "xtheta": [],
        "gamma_p": [], "gamma_I": [],
        "c1_bound": 1.0,
    },
    "numeric": {
        "atol": 1e-12, "rtol": 1e-12, "h_init": 1e-3, "h_max": 0.25,
        "max_steps": 2_000_000,
        "quad_tol": 1e-10, "max_evals": 400_000,
        "cutoff_factor": 1.0, "probe_span": 8.0,
        "theta_half_line": False,
    },
    "experiment": {
        "I": [0.5], "theta": [0.2], "t": 0.0,
        "tau_grid": [], "tau_min": -3.0, "tau_max": 3.0, "tau_count": 61,
        "eps_grid": [1e-2, 3e-3, 1e-3, 3e-4],
        "samples": [],            # rows [I..., theta..., t]
        "randomize": False, "n_samples": 3, "seed": 7,
        "I_range": [0.3, 0.8], "theta_range": [-0.5, 0.5],
        "x_guess": 0.0,
        "k": 0.5, "rho0": 0.5, "c": 0.0, "C0": 1.0,
        "z0": [],                 # [p..., q..., I..., theta..., t]
    },
    "output": {"dir": ".", "format": "csv"},
}


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------

def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover - python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")


def _check_value(block: str, key: str, val, default):
    if isinstance(default, bool):
        if not isinstance(val, bool):
            raise ConfigError(f"{block}.{key} must be a boolean, "
                              f"got {val!r}")
        return val
    if isinstance(default, int):
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{block}.{key} must be an integer, "
                              f"got {val!r}")
        return val
    if isinstance(default, float):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{block}.{key} must be a number, got {val!r}")
        return float(val)
    if isinstance(default, str):
        if not isinstance(val, str):
            raise ConfigError(f"{block}.{key} must be a string, got {val!r}")
        return val
    if isinstance(default, list):
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            return [val]
        if not isinstance(val, list):
            raise ConfigError(f"{block}.{key} must be a list, got {val!r}")
        return val
    raise ConfigError(f"unsupported config entry {block}.{key}")


def resolve_config(file_cfg: dict | None = None,
                   overrides: dict | None = None) -> dict:
    """Defaults <- file <- flag overrides, with strict schema validation."""
    rc = copy.deepcopy(_DEFAULTS)
    for layer in (file_cfg or {}, overrides or {}):
        for block, entries in layer.items():
            if block not in rc:
                raise ConfigError(
                    f"unknown config block [{block}]; expected one of "
                    f"{sorted(rc)}")
            if not isinstance(entries, dict):
                raise ConfigError(f"[{block}] must be a table")
            for key, val in entries.items():
                if key not in rc[block]:
                    raise ConfigError(
                        f"unknown key {block}.{key}; expected one of "
                        f"{sorted(rc[block])}")
                rc[block][key] = _check_value(block, key, val,
                                              _DEFAULTS[block][key])
    fmt = rc["output"]["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format must be 'csv' or 'json', "
                          f"got {fmt!r}")
    kind = rc["perturbation"]["kind"]
    if kind not in ("none", "hamiltonian", "components", "damping"):
        raise ConfigError(f"perturbation.kind must be one of none, "
                          f"hamiltonian, components, damping; got {kind!r}")
    return rc


def _vector(block: str, key: str, raw, length: int) -> list[float]:
    vals = raw if isinstance(raw, list) else [raw]
    if len(vals) == 1 and length > 1:
        vals = vals * length
    if len(vals) != length:
        raise ConfigError(f"{block}.{key} needs {length} entries, "
                          f"got {len(vals)}")
    try:
        return [float(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(f"{block}.{key} must contain numbers")


def build_system(rc: dict) -> SystemSpec:
    sc = rc["system"]
    d, n = sc["d"], sc["n"]
    if d < 1 or n < 1:
        raise ConfigError("system.d and system.n must be at least 1")
    signs = sc["signs"] or [1] * n
    if len(signs) != n or any(s not in (1, -1) for s in signs):
        raise ConfigError(f"system.signs must be {n} entries of +-1")
    pots = sc["potentials"] or [[] for _ in range(n)]
    if len(pots) != n:
        raise ConfigError(f"system.potentials must have {n} entries")
    try:
        penduli = tuple(
            (PotentialSpec.builtin_cosine() if not coeffs
             else PotentialSpec.trig_polynomial([float(c) for c in coeffs]),
             int(s))
            for coeffs, s in zip(pots, signs))
        return SystemSpec(RotatorSpec.quadratic(d), penduli)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system definition: {exc}")


def build_field(rc: dict, spec: SystemSpec) -> PerturbationField:
    pc = rc["perturbation"]
    kind = pc["kind"]
    try:
        if kind == "none":
            return PerturbationField.zero(spec)
        if kind == "hamiltonian":
            if not pc["h1"]:
                raise ConfigError("perturbation.h1 is required for "
                                  "kind = 'hamiltonian'")
            return PerturbationField.from_hamiltonian(
                spec, pc["h1"], c1_bound=pc["c1_bound"])
        if kind == "components":
            return PerturbationField.from_components(
                spec, pc["xp"], pc["xq"], pc["xI"], pc["xtheta"],
                c1_bound=pc["c1_bound"])
        gp = _vector("perturbation", "gamma_p", pc["gamma_p"] or 1.0, spec.n)
        gI = _vector("perturbation", "gamma_I", pc["gamma_I"] or 1.0, spec.d)
        return PerturbationField.damping(spec, gp, gI,
                                         c1_bound=pc["c1_bound"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid perturbation: {exc}")


def integrator_config(rc: dict) -> IntegratorConfig:
    nc = rc["numeric"]
    return IntegratorConfig(atol=nc["atol"], rtol=nc["rtol"],
                            h_init=nc["h_init"], h_max=nc["h_max"],
                            max_steps=nc["max_steps"])


def quadrature_config(rc: dict) -> QuadratureConfig:
    nc = rc["numeric"]
    return QuadratureConfig(tol=nc["quad_tol"], max_evals=nc["max_evals"],
                            cutoff_factor=nc["cutoff_factor"],
                            probe_span=nc["probe_span"],
                            theta_half_line=nc["theta_half_line"])


def _base_points(rc: dict, spec: SystemSpec) -> list[tuple]:
    """(I, theta, t) rows from experiment.samples / randomize / I,theta,t."""
    ec = rc["experiment"]
    d = spec.d
    if ec["samples"]:
        rows = []
        for row in ec["samples"]:
            if not isinstance(row, list) or len(row) != 2 * d + 1:
                raise ConfigError(
                    f"experiment.samples rows need {2 * d + 1} numbers "
                    f"[I..., theta..., t], got {row!r}")
            vals = [float(v) for v in row]
            rows.append((np.array(vals[:d]), np.array(vals[d:2 * d]),
                         vals[2 * d]))
        return rows
    if ec["randomize"]:
        rng = np.random.default_rng(ec["seed"])
        lo_I, hi_I = _vector("experiment", "I_range", ec["I_range"], 2)
        lo_t, hi_t = _vector("experiment", "theta_range",
                             ec["theta_range"], 2)
        return [(rng.uniform(lo_I, hi_I, d), rng.uniform(lo_t, hi_t, d),
                 float(ec["t"])) for _ in range(ec["n_samples"])]
    I = np.array(_vector("experiment", "I", ec["I"], d))
    th = np.array(_vector("experiment", "theta", ec["theta"], d))
    return [(I, th, float(ec["t"]))]


def _tau_grid(rc: dict, spec: SystemSpec) -> list[np.ndarray]:
    ec = rc["experiment"]
    n = spec.n
    if ec["tau_grid"]:
        out = []
        for item in ec["tau_grid"]:
            vals = item if isinstance(item, list) else [item]
            out.append(np.array(_vector("experiment", "tau_grid", vals, n)))
        return out
    if ec["tau_count"] < 1:
        raise ConfigError("experiment.tau_count must be positive")
    grid = np.linspace(ec["tau_min"], ec["tau_max"], ec["tau_count"])
    return [np.full(n, tv) for tv in grid]


def _eps_grid(rc: dict) -> list[float]:
    eps = [float(e) for e in rc["experiment"]["eps_grid"]]
    if not eps:
        raise ConfigError("experiment.eps_grid must not be empty")
    big = [e for e in eps if abs(e) > EPS_MAX]
    if big:
        raise ConfigError(f"eps values {big} exceed the supported maximum "
                          f"{EPS_MAX}")
    return eps


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _cols(base: str, count: int) -> list[str]:
    return [f"{base}{j + 1}" for j in range(count)]


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_report(out_dir: str, name: str, fmt: str, columns: list[str],
                  rows: list[list], summary: dict, resolved: dict
                  ) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"command": name, "config": resolved, "summary": summary}
    written = []
    if fmt == "json":
        path = out / f"{name}.json"
        payload["columns"] = columns
        payload["rows"] = rows
        path.write_text(json.dumps(payload, indent=2, default=_json_default)
                        + "\n")
        written.append(str(path))
    else:
        path = out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt_cell(v) for v in row])
        meta = out / f"{name}.meta.json"
        payload["csv"] = path.name
        meta.write_text(json.dumps(payload, indent=2, default=_json_default)
                        + "\n")
        written.extend([str(path), str(meta)])
    return written


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _run_tasks(fn, items, threads: int) -> list:
    """Map fn over items, first item serially (warms JIT), rest pooled."""
    if threads > 1 and len(items) > 1:
        first = fn(items[0])
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rest = list(ex.map(fn, items[1:]))
        return [first] + rest
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_melnikov(rc: dict, threads: int) -> int:
    spec = build_system(rc)
    field = build_field(rc, spec)
    qcfg = quadrature_config(rc)
    I, th, t0 = _base_points(rc, spec)[0]
    taus = _tau_grid(rc, spec)
    columns = (_cols("I", spec.d) + _cols("theta", spec.d) + ["t"]
               + _cols("tau", spec.n) + _cols("M_y", spec.n)
               + _cols("dI1_", spec.d) + _cols("dtheta1_", spec.d)
               + ["tail_est"])

    def one(tau):
        res = predictions(spec, field, tau, I, th, t0, qcfg)
        return (list(I) + list(th) + [t0] + list(tau) + list(res.M_y)
                + list(res.delta_I) + list(res.delta_theta)
                + [res.tail_bound])

    rows = _run_tasks(one, taus, threads)
    summary = {"rows": len(rows), "I": list(I), "theta": list(th), "t": t0}
    files = _write_report(rc["output"]["dir"], "melnikov",
                          rc["output"]["format"], columns, rows, summary, rc)
    print(f"melnikov: {len(rows)} phase points -> {', '.join(files)}")
    return 0


def cmd_scatter(rc: dict, threads: int) -> int:
    spec = build_system(rc)
    if spec.n != 1:
        raise ConfigError("scatter requires a single-pendulum system")
    field = build_field(rc, spec)
    qcfg = quadrature_config(rc)
    icfg = integrator_config(rc)
    eps_grid = _eps_grid(rc)
    points = _base_points(rc, spec)
    x_guess = rc["experiment"]["x_guess"]
    d = spec.d
    columns = (["eps"] + _cols("I", d) + _cols("theta", d) + ["t", "x_star",
               "y_star", "iterations"]
               + _cols("dI_num", d) + _cols("dtheta_num", d)
               + _cols("dI_pred", d) + _cols("dtheta_pred", d)
               + _cols("err_I", d) + _cols("err_theta", d) + ["error"])
    tasks = [(eps, I, th, t0) for eps in eps_grid for (I, th, t0) in points]

    def one(task):
        eps, I, th, t0 = task
        base = [eps] + list(I) + list(th) + [t0]
        try:
            s = scattering_map_numeric(spec, field, I, th, t0, eps,
                                       x_guess=x_guess, cfg=icfg)
            dI1, _ = delta_I_first_order(spec, field, s.x_star, I, th, t0,
                                         qcfg)
            dth1, _ = delta_theta_first_order(spec, field, s.x_star, I, th,
                                              t0, qcfg)
            pI, pth = eps * dI1, eps * dth1
            return base + [s.x_star, s.y_star, s.iterations,
                           *s.delta_I, *s.delta_theta, *pI, *pth,
                           *np.abs(s.delta_I - pI),
                           *np.abs(s.delta_theta - pth), ""]
        except (GeometryError, FlowError, QuadratureError,
                FieldEvalError) as exc:
            pad = [math.nan] * (3 + 6 * d)
            return base + pad + [f"{type(exc).__name__}: {exc}"]

    rows = _run_tasks(one, tasks, threads)
    failed = [r for r in rows if r[-1]]
    summary: dict = {"rows": len(rows), "failed": len(failed),
                     "eps_grid": eps_grid, "base_points": len(points)}
    ok_rows = [r for r in rows if not r[-1]]
    eps_ok = sorted({r[0] for r in ok_rows})
    if len(eps_ok) >= 4 and not failed:
        iI = columns.index("err_I1")
        ith = columns.index("err_theta1")
        for label, idx in (("fit_delta_I", iI), ("fit_delta_theta", ith)):
            pairs = [(e, max(r[idx] for r in ok_rows if r[0] == e))
                     for e in eps_ok]
            try:
                summary[label] = verify.order_fit(pairs).as_dict()
            except ValueError as exc:
                summary[label] = {"note": str(exc)}
    files = _write_report(rc["output"]["dir"], "scatter",
                          rc["output"]["format"], columns, rows, summary, rc)
    print(f"scatter: {len(rows)} samples ({len(failed)} failed) -> "
          f"{', '.join(files)}")
    return 1 if failed else 0


def cmd_hamgen(rc: dict, threads: int) -> int:
    spec = build_system(rc)
    field = build_field(rc, spec)
    if field.kind != "hamiltonian":
        raise ConfigError("hamgen requires perturbation.kind = 'hamiltonian'")
    qcfg = quadrature_config(rc)
    points = _base_points(rc, spec)
    d, n = spec.d, spec.n
    columns = (_cols("I", d) + _cols("theta", d) + ["t"]
               + _cols("tau_star", n) + ["L_star", "S"]
               + _cols("dL_dtheta", d) + _cols("dL_dI", d)
               + _cols("dI1_pred", d) + _cols("dtheta1_pred", d)
               + ["newton_iterations", "newton_residual",
                  "envelope_residual"]
               + _cols("resid_I", d) + _cols("resid_theta", d) + ["error"])

    def one(point):
        I, th, t0 = point
        base = list(I) + list(th) + [t0]
        try:
            ev = script_L(spec, field, I, th, t0, qcfg=qcfg)
            dI1, _ = delta_I_first_order(spec, field, ev.tau_star, I, th,
                                         t0, qcfg)
            dth1, _ = delta_theta_first_order(spec, field, ev.tau_star, I,
                                              th, t0, qcfg)
            return base + [*ev.tau_star, ev.L_star, ev.S, *ev.dL_dtheta,
                           *ev.dL_dI, *ev.delta_I_pred,
                           *ev.delta_theta_pred, ev.newton_iterations,
                           ev.newton_residual, ev.envelope_residual,
                           *np.abs(ev.delta_I_pred - dI1),
                           *np.abs(ev.delta_theta_pred - dth1), ""]
        except (HamgenError, GeometryError, FlowError, QuadratureError,
                FieldEvalError) as exc:
            pad = [math.nan] * (n + 5 + 6 * d)
            return base + pad + [f"{type(exc).__name__}: {exc}"]

    rows = _run_tasks(one, points, threads)
    failed = [r for r in rows if r[-1]]
    summary = {"rows": len(rows), "failed": len(failed)}
    files = _write_report(rc["output"]["dir"], "hamgen",
                          rc["output"]["format"], columns, rows, summary, rc)
    print(f"hamgen: {len(rows)} base points ({len(failed)} failed) -> "
          f"{', '.join(files)}")
    return 1 if failed else 0


def cmd_gronwall(rc: dict, threads: int) -> int:
    spec = build_system(rc)
    field = build_field(rc, spec)
    icfg = integrator_config(rc)
    ec = rc["experiment"]
    eps_grid = _eps_grid(rc)
    z0_raw = ec["z0"]
    need = 2 * spec.n + 2 * spec.d + 1
    if z0_raw:
        if len(z0_raw) != need:
            raise ConfigError(f"experiment.z0 needs {need} numbers "
                              "[p..., q..., I..., theta..., t]")
        flat = [float(v) for v in z0_raw]
        n, d = spec.n, spec.d
        z0 = ExtendedState(flat[:n], flat[n:2 * n], flat[2 * n:2 * n + d],
                           flat[2 * n + d:2 * n + 2 * d], flat[-1])
    else:
        I = _vector("experiment", "I", ec["I"], spec.d)
        th = _vector("experiment", "theta", ec["theta"], spec.d)
        z0 = ExtendedState([0.1] * spec.n, [0.2] * spec.n, I, th,
                           float(ec["t"]))
    columns = ["eps", "horizon", "max_deviation", "bound", "K", "passed"]

    def one(eps):
        rep = verify.gronwall_experiment(spec, field, z0, eps, k=ec["k"],
                                         rho0=ec["rho0"], c=ec["c"],
                                         C0=ec["C0"], cfg=icfg)
        return [rep.eps, rep.horizon, rep.max_deviation, rep.bound, rep.K,
                rep.passed]

    try:
        rows = _run_tasks(one, eps_grid, threads)
    except ValueError as exc:
        raise ConfigError(str(exc))
    all_pass = all(r[-1] for r in rows)
    summary: dict = {"rows": len(rows), "all_pass": all_pass,
                     "k": ec["k"], "rho0": ec["rho0"]}
    dev_pairs = [(r[0], r[2]) for r in rows if r[0] > 0]
    if len(dev_pairs) >= 4:
        try:
            fit = verify.order_fit(dev_pairs)
            summary["fit_deviation"] = fit.as_dict()
            summary["slope_at_least_rho0"] = bool(fit.slope >= ec["rho0"])
        except ValueError as exc:
            summary["fit_deviation"] = {"note": str(exc)}
    files = _write_report(rc["output"]["dir"], "gronwall",
                          rc["output"]["format"], columns, rows, summary, rc)
    print(f"gronwall: {len(rows)} eps values (all_pass={all_pass}) -> "
          f"{', '.join(files)}")
    return 0 if all_pass else 1


def cmd_selftest(rc: dict, threads: int) -> int:
    spec = build_system(rc)
    out = Path(rc["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "selftest.json"
    try:
        report = verify.fast_suite(spec)
    except Exception as exc:
        payload = {"command": "selftest", "config": rc,
                   "report": {"all_pass": False,
                              "error": f"{type(exc).__name__}: {exc}"}}
        path.write_text(json.dumps(payload, indent=2,
                                   default=_json_default) + "\n")
        print(f"selftest: crashed ({type(exc).__name__}) -> {path}")
        return 1
    payload = {"command": "selftest", "config": rc, "report": report}
    path.write_text(json.dumps(payload, indent=2, default=_json_default)
                    + "\n")
    checks = [k for k, v in report["identity"].items()
              if isinstance(v, dict)]
    print(f"selftest: {len(checks)} identity checks, closed-form fast "
          f"subset, integrator order -> {path}")
    print(f"selftest: {'PASS' if report['all_pass'] else 'FAIL'}")
    return 0 if report["all_pass"] else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="melscat",
        description="first-order scattering-map predictions for "
                    "rotator-pendulum systems")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML run configuration")
        sp.add_argument("--out", help="output directory (default '.')")
        sp.add_argument("--format", choices=("csv", "json"),
                        help="report format")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweeps (default 1)")
        sp.add_argument("--h1", help="perturbation Hamiltonian expression")
        sp.add_argument("--eps-grid",
                        help="comma-separated eps values, e.g. '1e-2,3e-3'")

    sp = sub.add_parser("melnikov",
                        help="jump predictions on a phase grid")
    common(sp)
    sp.add_argument("--I", type=float, help="rotator action (d = 1)")
    sp.add_argument("--theta", type=float, help="rotator angle (d = 1)")
    sp.add_argument("--t", type=float, help="base time slot")
    sp.add_argument("--tau-min", type=float, help="phase grid start")
    sp.add_argument("--tau-max", type=float, help="phase grid end")
    sp.add_argument("--tau-count", type=int, help="phase grid size")

    sp = sub.add_parser("scatter",
                        help="brute-force map vs predictions over eps")
    common(sp)
    sp.add_argument("--x-guess", type=float,
                    help="initial homoclinic phase guess")

    sp = sub.add_parser("hamgen", help="generating-value table")
    common(sp)
    sp.add_argument("--I", type=float, help="rotator action (d = 1)")
    sp.add_argument("--theta", type=float, help="rotator angle (d = 1)")
    sp.add_argument("--t", type=float, help="base time slot")

    sp = sub.add_parser("gronwall",
                        help="deviation over logarithmic horizons")
    common(sp)
    sp.add_argument("--k", type=float, help="horizon factor")
    sp.add_argument("--rho0", type=float, help="deviation exponent")

    sp = sub.add_parser("selftest",
                        help="identity suite and fast acceptance subset")
    common(sp)
    return p


def _overrides(args: argparse.Namespace) -> dict:
    ov: dict = {}

    def put(block, key, val):
        if val is not None:
            ov.setdefault(block, {})[key] = val

    put("output", "dir", args.out)
    put("output", "format", args.format)
    put("perturbation", "h1", getattr(args, "h1", None))
    if getattr(args, "eps_grid", None):
        try:
            grid = [float(v) for v in args.eps_grid.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--eps-grid must be comma-separated numbers, "
                              f"got {args.eps_grid!r}")
        put("experiment", "eps_grid", grid)
    for flag, key in (("I", "I"), ("theta", "theta"), ("t", "t"),
                      ("tau_min", "tau_min"), ("tau_max", "tau_max"),
                      ("tau_count", "tau_count"), ("x_guess", "x_guess"),
                      ("k", "k"), ("rho0", "rho0")):
        val = getattr(args, flag, None)
        if val is not None and key in ("I", "theta"):
            val = [val]
        put("experiment", key, val)
    return ov


_COMMANDS = {"melnikov": cmd_melnikov, "scatter": cmd_scatter,
             "hamgen": cmd_hamgen, "gronwall": cmd_gronwall,
             "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        file_cfg = _load_toml(args.config) if args.config else None
        rc = resolve_config(file_cfg, _overrides(args))
        threads = max(1, int(args.threads))
        return _COMMANDS[args.command](rc, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FlowError, GeometryError, QuadratureError, FieldEvalError,
            HamgenError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
