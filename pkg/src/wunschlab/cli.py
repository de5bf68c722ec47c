"""Configuration-driven experiment runner.

    wunschlab --config run.json --out results/ [--seed 7] [--threads 4] [--subcommand blowup]

The config is a JSON object validated against ``CONFIG_SCHEMA``; unknown keys
are rejected.  Every run writes ``manifest.json`` (resolved config, seed,
status, file list) plus the CSV/JSON artifacts of its subcommand.

Exit codes: 2 for invalid configuration (nothing written), 1 for a numeric
failure, 0 otherwise.  A detected blowup is a result, not a failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import output
from .blowup import _cumtrapz, detect_blowup, ermakov_flow, forcing_F
from .curvature import PAIR_TYPES, curvature_scan
from .distance import shortcut_run
from .errors import ConfigError, NonFiniteState, WunschLabError
from .flow import (
    SolverConfig,
    integrate_ebin,
    integrate_euler,
    integrate_spray,
    snapshot_diagnostics,
)
from .inequalities import corollary_suite, gp_direct, identity_sweep, property_run
from .jacobi import (
    bump_constants,
    build_test_field,
    conjugate_criterion,
    criterion_constant,
    index_form,
    jacobi_integrate,
    rotation_closed_form,
)
from .spectral import MU_HALF, GridSpec, MetricKind, PeriodicField

SCHEMA_VERSION = 1
SUBCOMMANDS = ("simulate", "jacobi", "conjugate", "blowup", "curvature",
               "inequality", "distance", "identities")
PRESETS = {
    "rotation": [[0, 1.0, 0.0]],
    "neg_sin": [[1, 1.0, math.pi / 2]],   # cos(x + pi/2) = -sin x
    "cos1": [[1, 1.0, 0.0]],
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_mode = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "subcommand"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "kind": {"enum": ["mu_half", "full_half", "homogeneous_half", "homogeneous_s"]},
        "s": {"type": "number", "minimum": 0},
        "N": {"type": "integer", "minimum": 8},
        "dt": _pos,
        "T": _pos,
        "record_stride": _posint,
        "initial": {"oneOf": [{"enum": sorted(PRESETS)},
                              {"type": "array", "items": _mode, "minItems": 1}]},
        "probes": {"type": "array", "items": _num},
        "method": {"enum": ["euler", "ebin", "spray"]},
        # jacobi
        "w0": {"type": "array", "items": _mode, "minItems": 1},
        # conjugate
        "x0": _num,
        "intervals": {"type": "array", "minItems": 1,
                      "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
        "eps": {"type": "array", "items": _pos, "minItems": 1},
        # curvature
        "family": {"enum": ["muHalf_table", "homogeneous_s"]},
        "pairs": {"oneOf": [{"const": "default"},
                            {"type": "array", "items": {"enum": list(PAIR_TYPES)}, "minItems": 1}]},
        "mn": {"type": "array", "minItems": 1,
               "items": {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 2, "maxItems": 2}},
        "pairing": {"enum": ["mean", "integral"]},
        # inequality / identities
        "p": {"type": "array", "items": _pos, "minItems": 1},
        "trials": _posint,
        "kmax": _posint,
        "decay": {"type": "number", "minimum": 0},
        # distance
        "n_params": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "theta": _pos,
        "particles": _posint,
        "horizon": _pos,
    },
}

DEFAULTS = {
    "simulate": {"kind": "mu_half", "N": 256, "dt": 1e-3, "T": 0.3, "record_stride": 10,
                 "initial": "cos1", "method": "euler"},
    "jacobi": {"kind": "mu_half", "N": 64, "dt": 1e-3, "T": math.pi, "initial": "rotation",
               "w0": [[n, 1.0, 0.0] for n in range(9)]},
    "conjugate": {"kind": "mu_half", "N": 1024, "dt": 0.01, "T": 4.5, "initial": "rotation",
                  "x0": 1.0, "intervals": [[0.0, 4.5], [0.0, 2.0]], "eps": [0.1, 0.05, 0.025]},
    "blowup": {"kind": "homogeneous_half", "N": 1024, "dt": 1e-3, "T": 1.2, "record_stride": 1,
               "initial": "neg_sin", "probes": [0.0, math.pi / 2]},
    "curvature": {"family": "muHalf_table", "pairs": "default", "pairing": "mean",
                  "mn": [[1, 2], [1, 3], [2, 3], [2, 5]]},
    "inequality": {"p": [0.5, 1, 2, 3, 4], "trials": 500, "N": 64, "kmax": 12, "decay": 2.0},
    "distance": {"n_params": [4, 16, 64, 256], "lambda": 0.5, "theta": 1.0, "N": 4096,
                 "dt": 0.002, "particles": 64, "horizon": 500.0},
    "identities": {"trials": 100, "N": 256, "kmax": 64},
}


# ---------------------------------------------------------------------------
# config handling

def validate(cfg: dict) -> dict:
    """Schema-check ``cfg`` and merge subcommand defaults; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None
    resolved = copy.deepcopy(DEFAULTS[cfg["subcommand"]])
    resolved.update(copy.deepcopy(cfg))
    resolved.setdefault("seed", 0)
    if resolved.get("kind") == "homogeneous_s" or resolved.get("family") == "homogeneous_s":
        if "s" not in resolved:
            raise ConfigError("homogeneous_s needs 's'")
    if "initial" in resolved and isinstance(resolved["initial"], str):
        resolved["initial_modes"] = PRESETS[resolved["initial"]]
    return resolved


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON: {e}") from None


def _kind(cfg) -> MetricKind:
    name = cfg["kind"]
    return MetricKind(name, float(cfg["s"])) if name == "homogeneous_s" else MetricKind(name)


def _initial(cfg, grid) -> PeriodicField:
    modes = cfg["initial"] if not isinstance(cfg["initial"], str) else PRESETS[cfg["initial"]]
    return PeriodicField.from_modes(grid, [(int(n), a, ph) for n, a, ph in modes])


def _solver(cfg) -> SolverConfig:
    try:
        return SolverConfig(_kind(cfg), cfg["N"], cfg["dt"], cfg["T"],
                            record_stride=cfg.get("record_stride", 1))
    except (ValueError, WunschLabError) as e:
        raise ConfigError(str(e)) from None


def _map(fn, items, threads: int):
    # results come back in input order regardless of scheduling
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands; each returns (summary dict, {filename: writer})

def _trajectory_files(traj, prefix="") -> dict:
    diag = snapshot_diagnostics(traj)
    meta = traj.summary()
    files = {f"{prefix}trajectory.json": lambda p: output.write_json(p, meta)}
    for name in sorted(diag):
        vals = np.asarray(diag[name], dtype=float)
        files[f"{prefix}{name}.csv"] = (
            lambda p, v=vals, n=name: output.write_csv(p, ["t", n], zip(traj.times, v)))
    return files


def run_simulate(cfg, threads):
    sc = _solver(cfg)
    u0 = _initial(cfg, sc.grid)
    integ = {"euler": integrate_euler, "ebin": integrate_ebin, "spray": integrate_spray}[cfg["method"]]
    traj = integ(sc, u0)
    files = _trajectory_files(traj)
    last = len(traj.times) - 1
    files["eta_final.csv"] = lambda p: output.write_csv(
        p, ["x", "eta"], zip(traj.grid.nodes, traj.grid.nodes + traj.p_values[last]))
    files["u0_spectrum.json"] = lambda p: output.write_json(p, output.spectrum_dict(u0))
    return traj.summary(), files


def run_jacobi(cfg, threads):
    sc = _solver(cfg)
    kind = sc.kind
    traj = integrate_euler(sc, _initial(cfg, sc.grid))
    w0 = PeriodicField.from_modes(sc.grid, [(int(n), a, ph) for n, a, ph in cfg["w0"]])
    sol = jacobi_integrate(kind, traj, w0, dt=cfg["dt"], T=cfg["T"])
    T = float(sol.times[-1])
    c0 = w0.full_spectrum()
    rows = []
    rotation = cfg["initial"] == "rotation" and kind == MU_HALF
    for n in sorted({int(m[0]) for m in cfg["w0"]} | {-int(m[0]) for m in cfg["w0"]}):
        vn = complex(sol.mode(n)[-1])
        closed = complex(rotation_closed_form(n, c0[n % sc.N], T)[1]) if rotation else None
        rows.append({"n": n, "v_re": vn.real, "v_im": vn.imag, "v_abs": abs(vn),
                     "closed_abs": None if closed is None else abs(closed),
                     "error": None if closed is None else abs(vn - closed)})
    files = {"jacobi_modes.csv": lambda p: output.write_dict_rows(p, rows)}
    err = max((r["error"] for r in rows if r["error"] is not None), default=None)
    return {"T": T, "max_closed_form_error": err, "modes": len(rows)}, files


def run_conjugate(cfg, threads):
    sc = _solver(cfg)
    T_need = max(b for _, b in cfg["intervals"])
    if T_need > cfg["T"] + 1e-12:
        raise ConfigError("interval end exceeds horizon T")
    traj = integrate_euler(sc, _initial(cfg, sc.grid))
    A, B, C = bump_constants()
    R = criterion_constant(A, B, C)
    x0 = cfg["x0"]
    jobs = [(a, b, e) for a, b in cfg["intervals"] for e in cfg["eps"]]

    def one(job):
        a, b, e = job
        tf, path = build_test_field(traj, x0, a, b, e)
        rep = index_form(sc.kind, traj, path, a, b)
        crit = conjugate_criterion(traj, x0, a, b)
        return {"x0": x0, "a": a, "b": b, "eps": e, "index_form": rep.value, "lhs": crit.lhs,
                "threshold": crit.threshold, "criterion_satisfied": crit.satisfied,
                "limit_value": tf.limit_value(), "R": R}

    rows = _map(one, jobs, threads)
    files = {"conjugate_scan.csv": lambda p: output.write_dict_rows(p, rows)}
    return {"R": R, "x0": x0, "runs": len(rows)}, files


def run_blowup(cfg, threads):
    sc = _solver(cfg)
    rep = detect_blowup(sc, _initial(cfg, sc.grid), probes=cfg["probes"])
    traj = rep.trajectory
    summary = rep.as_dict()
    files = {"blowup_report.json": lambda p: output.write_json(p, summary)}
    files.update(_trajectory_files(traj))
    d = traj.diagnostics
    t = traj.times
    series = {"bkm_omega": _cumtrapz(d["omega_sup"], t), "bkm_ux": _cumtrapz(d["ux_sup"], t)}
    for name, vals in series.items():
        files[f"{name}.csv"] = lambda p, v=vals, n=name: output.write_csv(p, ["t", n], zip(t, v))
    try:
        es = ermakov_flow(traj)
        summary["ermakov_max_error"] = es.compare(traj)
        summary["ermakov_window_end"] = float(es.times[max(es.window() - 1, 0)])
    except WunschLabError:
        pass
    return summary, files


def run_curvature(cfg, threads):
    pairs = list(PAIR_TYPES) if cfg["pairs"] == "default" else cfg["pairs"]
    if cfg["family"] == "muHalf_table":
        kind, family, s = MU_HALF, "mu_half", None
    else:
        s = float(cfg["s"])
        kind, family = MetricKind("homogeneous_s", s), "homogeneous_s"
    same_modes = sorted({k for mn in cfg["mn"] for k in mn})
    jobs = []
    for pair in pairs:
        if pair == "sin_cos_same":
            jobs += [(pair, m, m) for m in same_modes]
        else:
            jobs += [(pair, m, n) for m, n in cfg["mn"]]

    def one(job):
        pair, m, n = job
        rows, _ = curvature_scan(kind, n, [m], pair=pair, pairing=cfg["pairing"],
                                 family=family, s=s)
        return rows[0]

    rows = _map(one, jobs, threads)
    header = ["pair", "m", "n", "family", "K_numeric", "K_closed", "ratio"]
    files = {"curvature_scan.csv": lambda p: output.write_dict_rows(p, rows, header)}
    census = {"positive": sum(r["K_numeric"] > 0 for r in rows),
              "negative": sum(r["K_numeric"] < 0 for r in rows)}
    return {"family": cfg["family"], "pairing": cfg["pairing"], "census": census}, files


def run_inequality(cfg, threads):
    seed = cfg["seed"]
    ss = np.random.SeedSequence(seed).spawn(len(cfg["p"]))
    jobs = list(zip(cfg["p"], (int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss)))
    results = _map(lambda j: property_run(j[0], cfg["trials"], j[1], N=cfg["N"],
                                          kmax=cfg["kmax"], decay=cfg["decay"]), jobs, threads)
    grid = GridSpec(cfg["N"])
    x = grid.nodes
    oracles = {
        "g1_cos": float(gp_direct(PeriodicField(grid, np.cos(x)), 1).values.mean()),
        "F_sin": float(forcing_F(PeriodicField(grid, np.sin(x))).values.mean()),
        "derivative_forms_sin": corollary_suite(PeriodicField(grid, np.sin(x))),
    }
    payload = {"seed": seed, "runs": results, "oracles": oracles}
    files = {"inequality.json": lambda p: output.write_json(p, payload)}
    return {"min_over_all": min(r["min_over_trials"] for r in results),
            "max_route_discrepancy": max(r["max_route_discrepancy"] for r in results)}, files


def run_distance(cfg, threads):
    grid = GridSpec(cfg["N"])

    def one(n):
        return shortcut_run(n, cfg["lambda"], cfg["theta"], grid=grid, dt=cfg["dt"],
                            horizon=cfg["horizon"], particles=cfg["particles"]).as_dict()

    rows = _map(one, cfg["n_params"], threads)
    header = ["N_param", "norm_sq", "T_end", "E", "endpoint_error", "sup", "reached"]
    files = {"ladder.csv": lambda p: output.write_dict_rows(p, rows, header)}
    return {"rungs": len(rows)}, files


def run_identities(cfg, threads):
    res = identity_sweep(cfg["seed"], trials=cfg["trials"], N=cfg["N"], kmax=cfg["kmax"])
    files = {"identities.json": lambda p: output.write_json(p, res)}
    return res, files


RUNNERS = {
    "simulate": run_simulate, "jacobi": run_jacobi, "conjugate": run_conjugate,
    "blowup": run_blowup, "curvature": run_curvature, "inequality": run_inequality,
    "distance": run_distance, "identities": run_identities,
}


def emit_report(out_dir, resolved: dict, summary: dict, files: dict) -> list:
    """Write artifacts then the manifest; a single writer keeps paths fixed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(files)
    for name in names:
        files[name](out_dir / name)
    manifest = {"schema_version": SCHEMA_VERSION, "config": resolved, "seed": resolved["seed"],
                "summary": summary, "files": names}
    output.write_json(out_dir / "manifest.json", manifest)
    return names


def run(cfg: dict, out_dir, threads: int = 1) -> int:
    """Validate, dispatch and write.  Returns the process exit code."""
    try:
        resolved = validate(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        summary, files = RUNNERS[resolved["subcommand"]](resolved, max(1, threads))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (NonFiniteState, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 1
    except WunschLabError as e:
        print(f"numeric failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    emit_report(out_dir, resolved, summary, files)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wunschlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
    ap.add_argument("--subcommand", choices=SUBCOMMANDS, help="override the config subcommand")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if isinstance(cfg, dict):
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.subcommand:
            cfg["subcommand"] = args.subcommand
    return run(cfg, args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
