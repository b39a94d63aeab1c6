"""Config-driven experiment runner.

One JSON config file describes one experiment: shared sections (grid, mesh,
coefficients, scheme, u0, seed) plus one experiment-specific params table.
Unknown keys anywhere are rejected by name; numeric ranges are validated up
front so a bad config never reaches a solver.

Artifacts land in the output directory: one or more CSV tables (full
17-significant-digit round-trip precision, so reruns are byte-identical),
a runmeta.jsonl with per-artifact metadata, and manifest.txt referencing
every emitted file with its sha256 (the manifest also records wall time,
and is therefore the only non-reproducible output).

Usage:
  burgerslab --config cfg.json [--out DIR] [--seed N] [--workers N]
             [--experiment NAME]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import SpatialGrid, TimeMesh, h_norm, sample_noise, sine_field
from .coefficients import burgers_multiscale_family, estimate_kappa, make_burgers_set
from .solver import (
    BlowUpError,
    Control,
    SchemeConfig,
    complementarity_residual,
    path_binary_bytes,
    solve,
    solve_skeleton,
    total_variation_k,
)
from .ratefn import RateOptions, rate_function
from .ldp import (
    EventSpec,
    condition_convergence_probe,
    estimate_importance,
    estimate_naive,
    fw_lower_bound_probe,
)
from .averaging import (
    frozen_average_set,
    penalization_convergence_probe,
    run_averaging_experiment,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "run_experiment", "main"]

EXPERIMENT_NAMES = (
    "heat-regression",
    "reflection",
    "rate-function",
    "rare-event",
    "condition-probe",
    "averaging",
)


class ConfigError(ValueError):
    """Invalid or missing configuration."""


def _check_keys(table: dict, allowed: tuple[str, ...], where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(
                f"unknown key '{where}.{key}'" if where else f"unknown key '{key}'"
            )


_REQUIRED = object()


def _get(table: dict, key: str, where: str, kind, default=_REQUIRED, check=None, why=""):
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{where}.{key}'")
        return default
    val = table[key]
    try:
        if kind is bool:
            if not isinstance(val, bool):
                raise ValueError
        elif kind is float:
            val = float(val)
        elif kind is int:
            if isinstance(val, bool) or (isinstance(val, float) and val != int(val)):
                raise ValueError
            val = int(val)
        elif kind is str:
            if not isinstance(val, str):
                raise ValueError
        elif kind is list:
            if not isinstance(val, list):
                raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"bad type at '{where}.{key}': expected {kind.__name__}") from None
    if check is not None and not check(val):
        raise ConfigError(f"range violation at '{where}.{key}': {why}, got {val!r}")
    return val


def _float_list(table: dict, key: str, where: str, default=_REQUIRED) -> list[float]:
    raw = _get(table, key, where, list, default=default)
    try:
        return [float(v) for v in raw]
    except (TypeError, ValueError):
        raise ConfigError(f"bad type at '{where}.{key}': expected list of numbers") from None


def _int_list(table: dict, key: str, where: str, default=_REQUIRED) -> list[int]:
    values = _float_list(table, key, where, default=default)
    if any(v != int(v) for v in values):
        raise ConfigError(f"bad type at '{where}.{key}': expected list of integers")
    return [int(v) for v in values]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (echoed verbatim into the manifest)."""

    experiment: str
    seed: int
    workers: int
    out_dir: str | None
    grid: SpatialGrid
    mesh: TimeMesh
    scheme: SchemeConfig
    coefficients: dict
    u0_spec: dict
    params: dict
    raw: dict

    def build_u0(self) -> np.ndarray:
        if self.u0_spec["kind"] == "zero":
            return np.zeros(self.grid.m)
        return sine_field(
            self.grid, k=self.u0_spec["mode"], amplitude=self.u0_spec["amplitude"]
        )

    def build_coefficients(self):
        """Returns (coefficient set, averaged set or None)."""
        c = self.coefficients
        if c["family"] == "burgers":
            return (
                make_burgers_set(
                    c["a_g"], noise_profile=c["noise_profile"], c1=c["c1"],
                    c2=c["c2"], sigma_amp=c["sigma_amp"], d=c["d"],
                ),
                None,
            )
        ms, avg = burgers_multiscale_family(
            beta=c["beta"], amplitude=c["amplitude"], a_g=c["a_g"],
            noise_profile=c["noise_profile"], c1=c["c1"], c2=c["c2"],
            sigma_amp=c["sigma_amp"], d=c["d"],
        )
        return ms, avg


_PARAM_KEYS = {
    "heat-regression": ("m_values", "dt_values", "t_final", "tolerance"),
    "reflection": ("n_list", "sigma_amp"),
    "rate-function": ("h_star", "blocks", "tol", "max_iters"),
    "rare-event": ("eps", "eps_list", "delta", "n_samples", "theta", "h_star", "blocks"),
    "condition-probe": ("eps_list", "delta", "n_paths", "control_amps", "u0_scales", "energy_bound"),
    "averaging": ("eps_list", "n_paths", "delta", "kappa_t_hats", "dump_first_pair"),
}


def _validate(raw: dict) -> ExperimentConfig:
    top_keys = ("experiment", "seed", "workers", "out_dir", "grid", "mesh",
                "coefficients", "scheme", "u0", "params")
    _check_keys(raw, top_keys, "")

    experiment = _get(raw, "experiment", "", str)
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"unknown experiment {experiment!r}; available: {', '.join(EXPERIMENT_NAMES)}"
        )
    seed = _get(raw, "seed", "", int, default=0, check=lambda v: v >= 0, why="must be >= 0")
    workers = _get(raw, "workers", "", int, default=1, check=lambda v: v >= 1, why="must be >= 1")
    out_dir = _get(raw, "out_dir", "", str, default=None)

    grid_tab = raw.get("grid", {})
    _check_keys(grid_tab, ("m",), "grid")
    m = _get(grid_tab, "m", "grid", int, default=64, check=lambda v: v >= 2, why="must be >= 2")
    grid = SpatialGrid(m)

    mesh_tab = raw.get("mesh", {})
    _check_keys(mesh_tab, ("t_final", "dt"), "mesh")
    t_final = _get(mesh_tab, "t_final", "mesh", float, default=1.0,
                   check=lambda v: v > 0, why="must be > 0")
    dt = _get(mesh_tab, "dt", "mesh", float, default=1e-3,
              check=lambda v: v > 0, why="must be > 0")
    steps = round(t_final / dt)
    if steps < 1 or abs(steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ConfigError(
            f"range violation at 'mesh.dt': t_final/dt = {t_final / dt:.6g} "
            "must be a positive integer"
        )
    mesh = TimeMesh(t_final, steps)

    co = dict(raw.get("coefficients", {}))
    co_keys = ("family", "a_g", "noise_profile", "c1", "c2", "sigma_amp", "d",
               "beta", "amplitude")
    _check_keys(co, co_keys, "coefficients")
    family = _get(co, "family", "coefficients", str, default="burgers")
    if family not in ("burgers", "multiscale"):
        raise ConfigError(
            f"unknown coefficient family {family!r}; available: burgers, multiscale"
        )
    coefficients = {
        "family": family,
        "a_g": _get(co, "a_g", "coefficients", float, default=0.0),
        "noise_profile": _get(co, "noise_profile", "coefficients", str, default="additive"),
        "c1": _get(co, "c1", "coefficients", float, default=0.0),
        "c2": _get(co, "c2", "coefficients", float, default=0.0),
        "sigma_amp": _get(co, "sigma_amp", "coefficients", float, default=1.0),
        "d": _get(co, "d", "coefficients", int, default=1, check=lambda v: v >= 1,
                  why="must be >= 1"),
    }
    if family == "multiscale":
        coefficients["beta"] = _get(co, "beta", "coefficients", float,
                                    check=lambda v: v > 0, why="must be > 0")
        coefficients["amplitude"] = _get(co, "amplitude", "coefficients", float, default=1.0)

    sc = raw.get("scheme", {})
    _check_keys(sc, ("reflection", "penalty_n", "convection"), "scheme")
    reflection = _get(sc, "reflection", "scheme", str, default="projection")
    penalty_n = _get(sc, "penalty_n", "scheme", float, default=0.0)
    convection = _get(sc, "convection", "scheme", str, default="central")
    if reflection == "penalized" and penalty_n * mesh.dt > 1.0 + 1e-12:
        raise ConfigError(
            f"range violation at 'scheme.penalty_n': n*dt = {penalty_n * mesh.dt:.6g} > 1 "
            "(explicit penalty unstable)"
        )
    try:
        scheme = SchemeConfig(
            grid=grid, mesh=mesh, reflection=reflection, penalty_n=penalty_n,
            convection=convection,
        )
    except ValueError as exc:
        raise ConfigError(f"bad scheme: {exc}") from None

    u0_tab = raw.get("u0", {})
    _check_keys(u0_tab, ("kind", "amplitude", "mode"), "u0")
    u0_kind = _get(u0_tab, "kind", "u0", str, default="sine")
    if u0_kind not in ("sine", "zero"):
        raise ConfigError(f"unknown u0 kind {u0_kind!r}; available: sine, zero")
    u0_spec = {
        "kind": u0_kind,
        "amplitude": _get(u0_tab, "amplitude", "u0", float, default=1.0,
                          check=lambda v: v >= 0, why="must be >= 0"),
        "mode": _get(u0_tab, "mode", "u0", int, default=1,
                     check=lambda v: v >= 1, why="must be >= 1"),
    }

    params_tab = raw.get("params", {})
    _check_keys(params_tab, _PARAM_KEYS[experiment], "params")

    return ExperimentConfig(
        experiment=experiment, seed=seed, workers=workers, out_dir=out_dir,
        grid=grid, mesh=mesh, scheme=scheme, coefficients=coefficients,
        u0_spec=u0_spec, params=dict(params_tab), raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError with the field path."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return _validate(raw)


# ---------------------------------------------------------------------------
# experiment drivers: each returns {artifact filename: (header, rows)}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _drive_heat_regression(cfg: ExperimentConfig):
    p = cfg.params
    m_values = _int_list(p, "m_values", "params", default=[32, 64])
    dt_values = _float_list(p, "dt_values", "params", default=[2e-4, 1e-4])
    t_final = _get(p, "t_final", "params", float, default=0.1,
                   check=lambda v: v > 0, why="must be > 0")
    tol = _get(p, "tolerance", "params", float, default=5e-3,
               check=lambda v: v > 0, why="must be > 0")
    cs = make_burgers_set(0.0, noise_profile="zero")
    rows = []
    for m in m_values:
        grid = SpatialGrid(m)
        u0 = sine_field(grid)
        for dt in dt_values:
            mesh = TimeMesh(t_final, round(t_final / dt))
            run = SchemeConfig(grid=grid, mesh=mesh, noise_scale=0.0)
            path = solve_skeleton(cs, u0, None, run)
            exact = np.exp(-math.pi**2 * mesh.times)[:, None] * u0[None, :]
            err = max(
                h_norm(path.u[k] - exact[k], grid) for k in range(mesh.steps + 1)
            )
            rows.append([grid.dx, mesh.dt, err, err <= tol])
    return {"heat_regression.csv": (["dx", "dt", "sup_h_error", "pass"], rows)}


def _drive_reflection(cfg: ExperimentConfig):
    p = cfg.params
    n_list = _float_list(p, "n_list", "params", default=[10.0, 100.0, 1000.0])
    sigma_amp = _get(p, "sigma_amp", "params", float, default=0.0,
                     check=lambda v: v >= 0, why="must be >= 0")
    profile = "additive" if sigma_amp > 0 else "zero"
    cs = make_burgers_set(0.0, noise_profile=profile, c2=-1.0, sigma_amp=sigma_amp)
    u0 = np.zeros(cfg.grid.m)
    run = replace(cfg.scheme, reflection="projection", penalty_n=0.0,
                  noise_scale=1.0 if sigma_amp > 0 else 0.0)
    noise = sample_noise(cfg.seed, cfg.mesh, cs.d) if sigma_amp > 0 else None
    proj = (
        solve_skeleton(cs, u0, None, run)
        if noise is None
        else solve(cs, u0, noise, None, run)
    )
    diag_rows = [[proj.min_u, complementarity_residual(proj), total_variation_k(proj)]]
    pen_rows = [
        [n, d2]
        for n, d2 in penalization_convergence_probe(cs, u0, n_list, noise, run)
    ]
    return {
        "reflection_diagnostics.csv": (["min_u", "complementarity", "tv_k"], diag_rows),
        "penalization.csv": (["penalty_n", "sq_dist_to_projection"], pen_rows),
    }


def _drive_rate_function(cfg: ExperimentConfig):
    p = cfg.params
    h_star = _get(p, "h_star", "params", float, default=1.0)
    blocks = _get(p, "blocks", "params", int, default=8,
                  check=lambda v: v >= 1, why="must be >= 1")
    tol = _get(p, "tol", "params", float, default=1e-3,
               check=lambda v: v > 0, why="must be > 0")
    max_iters = _get(p, "max_iters", "params", int, default=40,
                     check=lambda v: v >= 1, why="must be >= 1")
    cs, _ = cfg.build_coefficients()
    u0 = cfg.build_u0()
    gen = Control.constant(cfg.mesh.t_final, [h_star] * cs.d, d=cs.d)
    target = solve_skeleton(cs, u0, gen, cfg.scheme).u
    opt = RateOptions(blocks=blocks, tol=tol, max_iters=max_iters)
    res = rate_function(cs, u0, target, cfg.scheme, opt)
    iter_rows = [[mu, j, r] for mu, j, r in res.history]
    result_rows = [[res.lambda_hat, res.residual, res.converged, res.iterations,
                    gen.energy]]
    h_rows = [[i, *row] for i, row in enumerate(res.h_star.values)]
    return {
        "rate_iterations.csv": (["mu", "objective", "sq_residual"], iter_rows),
        "rate_result.csv": (
            ["lambda_hat", "sq_residual", "converged", "iterations", "generator_energy"],
            result_rows,
        ),
        "rate_control.csv": (
            ["block"] + [f"h_{j}" for j in range(cs.d)], h_rows),
    }


def _drive_rare_event(cfg: ExperimentConfig):
    p = cfg.params
    eps = _get(p, "eps", "params", float, default=0.1,
               check=lambda v: v > 0, why="must be > 0")
    eps_list = _float_list(p, "eps_list", "params", default=[0.5, 0.2, 0.1])
    delta = _get(p, "delta", "params", float, default=0.25,
                 check=lambda v: v > 0, why="must be > 0")
    n_samples = _get(p, "n_samples", "params", int, default=500,
                     check=lambda v: v >= 1, why="must be >= 1")
    theta = _get(p, "theta", "params", float, default=0.5,
                 check=lambda v: v > 0, why="must be > 0")
    h_star = _get(p, "h_star", "params", float, default=1.0)
    blocks = _get(p, "blocks", "params", int, default=4,
                  check=lambda v: v >= 1, why="must be >= 1")
    cs, _ = cfg.build_coefficients()
    u0 = cfg.build_u0()
    gen = Control.constant(cfg.mesh.t_final, [h_star] * cs.d, d=cs.d)
    target = solve_skeleton(cs, u0, gen, cfg.scheme).u
    ev = EventSpec(target=target, delta=delta, sense="hit")
    naive = estimate_naive(cs, u0, eps, ev, n_samples, cfg.seed, cfg.scheme)
    tilted = estimate_importance(cs, u0, eps, ev, gen, n_samples, cfg.seed, cfg.scheme)
    est_rows = [
        [e.method, e.epsilon, e.p_hat, e.std_err, e.n_samples, e.seed, e.n_clipped]
        for e in (naive, tilted)
    ]
    res = rate_function(cs, u0, target, cfg.scheme, RateOptions(blocks=blocks))
    fw_rows = []
    if res.converged:
        rows = fw_lower_bound_probe(
            cs, u0, target, delta, eps_list, n_samples, cfg.seed, cfg.scheme, res, theta
        )
        fw_rows = [
            [r.epsilon, r.p_hat, r.eps_log_p, r.bound,
             "" if r.satisfied is None else r.satisfied, r.zero_hit, r.method]
            for r in rows
        ]
    return {
        "rare_event.csv": (
            ["method", "eps", "p_hat", "std_err", "n_samples", "seed", "n_clipped"],
            est_rows,
        ),
        "fw_bound.csv": (
            ["eps", "p_hat", "eps_log_p", "bound", "satisfied", "zero_hit", "method"],
            fw_rows,
        ),
    }


def _drive_condition_probe(cfg: ExperimentConfig):
    p = cfg.params
    eps_list = _float_list(p, "eps_list", "params", default=[0.2, 0.05, 0.01])
    delta = _get(p, "delta", "params", float, default=0.25,
                 check=lambda v: v > 0, why="must be > 0")
    n_paths = _get(p, "n_paths", "params", int, default=200,
                   check=lambda v: v >= 1, why="must be >= 1")
    amps = _float_list(p, "control_amps", "params", default=[0.0, 1.0, -1.2])
    scales = _float_list(p, "u0_scales", "params", default=[1.0, 0.5])
    bound = _get(p, "energy_bound", "params", float, default=2.0,
                 check=lambda v: v > 0, why="must be > 0")
    cs, _ = cfg.build_coefficients()
    base_u0 = cfg.build_u0()
    u0_set = [s * base_u0 for s in scales]
    controls = [
        Control.constant(cfg.mesh.t_final, [a] * cs.d, d=cs.d) for a in amps
    ]
    rows = condition_convergence_probe(
        cs, u0_set, controls, eps_list, delta, n_paths, cfg.seed, cfg.scheme,
        energy_bound=bound,
    )
    return {
        "condition_probe.csv": (
            ["eps", "worst_fraction"],
            [[r.epsilon, r.worst_fraction] for r in rows],
        )
    }


def _drive_averaging(cfg: ExperimentConfig):
    p = cfg.params
    eps_list = _float_list(p, "eps_list", "params", default=[0.1, 0.01, 0.001])
    n_paths = _get(p, "n_paths", "params", int, default=100,
                   check=lambda v: v >= 1, why="must be >= 1")
    delta = _get(p, "delta", "params", float, default=0.25,
                 check=lambda v: v > 0, why="must be > 0")
    t_hats = _float_list(p, "kappa_t_hats", "params", default=[1e2, 1e3, 1e4])
    if cfg.coefficients["family"] != "multiscale":
        raise ConfigError(
            "range violation at 'coefficients.family': averaging needs the "
            "multiscale family"
        )
    ms, avg = cfg.build_coefficients()
    u0 = cfg.build_u0()
    report = run_averaging_experiment(
        ms, avg, u0, eps_list, n_paths, cfg.seed, cfg.scheme, delta=delta
    )
    avg_rows = [
        [r.epsilon, r.mean_sq_dist, r.std_err, r.exceed_frac, r.n_samples,
         report.coupling_seed]
        for r in report.rows
    ]
    kappa = estimate_kappa(
        ms, avg, t_hats, z_samples=np.linspace(-3, 3, 7), x_samples=np.linspace(0.1, 0.9, 5)
    )
    kappa_rows = [[t, k] for t, k in kappa]
    tables = {
        "averaging.csv": (
            ["eps", "mean_sq_dist", "std_err", "exceed_frac", "n_samples", "seed"],
            avg_rows,
        ),
        "kappa.csv": (["t_hat", "kappa_hat"], kappa_rows),
    }
    if _get(p, "dump_first_pair", "params", bool, default=False):
        noise = sample_noise(cfg.seed, cfg.mesh, ms.d, path_index=0)
        fast = solve(ms, u0, noise, None,
                     replace(cfg.scheme, noise_scale=1.0, time_scale=eps_list[0]))
        slow = solve(frozen_average_set(ms, avg), u0, noise, None,
                     replace(cfg.scheme, noise_scale=1.0, time_scale=1.0))
        tables["fast_path_0.bin"] = path_binary_bytes(fast)
        tables["averaged_path_0.bin"] = path_binary_bytes(slow)
    return tables


_DRIVERS = {
    "heat-regression": _drive_heat_regression,
    "reflection": _drive_reflection,
    "rate-function": _drive_rate_function,
    "rare-event": _drive_rare_event,
    "condition-probe": _drive_condition_probe,
    "averaging": _drive_averaging,
}


def _git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def run_experiment(
    cfg: ExperimentConfig, out_dir: str | Path, config_path: str | Path | None = None
) -> tuple[int, list[Path]]:
    """Dispatch to the named driver; write CSVs, runmeta.jsonl and manifest.txt.

    Returns (exit code, artifact paths).  Fatal errors (blow-up, bad config)
    yield a failure.json record and a nonzero code; reportable conditions
    such as optimizer non-convergence stay in the tables.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        tables = _DRIVERS[cfg.experiment](cfg)
    except (BlowUpError, ConfigError) as exc:
        record = {
            "experiment": cfg.experiment,
            "error": type(exc).__name__,
            "message": str(exc),
        }
        failure = out / "failure.json"
        failure.write_text(json.dumps(record, sort_keys=True) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return 1, [failure]

    artifacts: list[Path] = []
    meta_lines = []
    for name, payload in sorted(tables.items()):
        path = out / name
        if isinstance(payload, bytes):
            path.write_bytes(payload)
            size = len(payload)
        else:
            header, rows = payload
            with open(path, "w") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
            size = len(rows)
        artifacts.append(path)
        meta_lines.append({
            "experiment": cfg.experiment,
            "artifact": name,
            "rows": size,
            "seed": cfg.seed,
            "workers": cfg.workers,
        })

    meta_path = out / "runmeta.jsonl"
    with open(meta_path, "w") as fh:
        for line in meta_lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    artifacts.append(meta_path)

    config_bytes = (
        Path(config_path).read_bytes()
        if config_path is not None
        else json.dumps(cfg.raw, sort_keys=True).encode()
    )
    manifest = out / "manifest.txt"
    with open(manifest, "w") as fh:
        fh.write(f"experiment: {cfg.experiment}\n")
        fh.write(f"seed: {cfg.seed}\n")
        fh.write(f"config: {json.dumps(cfg.raw, sort_keys=True)}\n")
        fh.write(f"config-blob-sha1: {_git_blob_hash(config_bytes)}\n")
        fh.write("artifacts:\n")
        for path in artifacts:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            fh.write(f"  {path.name} sha256={digest}\n")
        fh.write(f"wall-time-seconds: {time.time() - started:.3f}\n")
    return 0, artifacts + [manifest]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="burgerslab",
        description="Run one reflected-Burgers experiment from a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config file")
    parser.add_argument("--out", default=None, help="output directory (default: config's out_dir or '.')")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=None, help="override the worker count")
    parser.add_argument("--experiment", default=None, help="override the experiment name")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.experiment is not None:
            if args.experiment not in EXPERIMENT_NAMES:
                raise ConfigError(
                    f"unknown experiment {args.experiment!r}; available: "
                    f"{', '.join(EXPERIMENT_NAMES)}"
                )
            cfg = replace(cfg, experiment=args.experiment)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.workers is not None:
            cfg = replace(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.out_dir or "."
    print(f"experiment={cfg.experiment} seed={cfg.seed} workers={cfg.workers} out={out_dir}")
    print(f"grid m={cfg.grid.m}, mesh T={cfg.mesh.t_final} steps={cfg.mesh.steps}, "
          f"coefficients {cfg.coefficients['family']}, u0 {cfg.u0_spec['kind']}")
    code, artifacts = run_experiment(cfg, out_dir, config_path=args.config)
    for path in artifacts:
        print(f"wrote {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
