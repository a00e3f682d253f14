"""Experiment runner: TOML config in, seeded deterministic CSV + manifest out.

Usage: ``toolkit <command> --config <file> [--seed N] [--out DIR]`` with
command one of spectrum, pam, ids, bounds, tauber, report.  Exit codes:
0 success, 2 invalid configuration, 3 numerical non-convergence.  Every CSV
starts with '#'-prefixed metadata (version, config hash, spec, geometry,
seed); bodies are byte-identical across reruns of the same config and seed.

Config grammar (TOML)::

    command = "bounds"          # optional here, the CLI argument wins
    d = 1
    n = 101                     # sites per axis, or "auto" for the schedule
    seed = 42                   # mandatory, no wall-clock default
    n_disorder = 100
    n_paths = 100000            # Monte Carlo paths (pam command, mc method)
    method = "integrator"       # pam command: integrator | mc
    out = "results"

    [spec]
    family = "uniform01"        # family-specific keys: p0, a, theta,
                                # alpha, c, c_g, v

    [grid]
    t_log = [0.5, 20.0, 10]     # geometric range triple [lo, hi, count]
    # t_values = [1.0, 2.0]     # or an explicit list; same for e_log/e_values

    [variational]
    ell_max = 500               # optional search cap
    c_fk = 2.0                  # optional Faber-Krahn constant
    mode = "exact"              # exact | asymptotic

    [tolerances]
    integrator = 1e-8
    eig = 1e-10
    max_halvings = 24

    [report]                    # report command inputs
    bounds_csv = "results/bounds.csv"
    ids_csv = "results/ids.csv"
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .disorder import DistributionSpec, QuadratureError, cumulant, potential_sample
from .ids import default_fit_window, empirical_ids, lifshitz_fit, log_correction_diagnostic
from .lattice import BoxGeometry, NonConvergenceError, build_hamiltonian, full_spectrum
from .pam import annealed_heat_trace, annealed_moment
from .seeding import derive_seed
from .tauber import rate_function
from .variational import EXACT, VariationalParams, box_schedule, sandwich_bounds

COMMANDS = ("spectrum", "pam", "ids", "bounds", "tauber", "report")


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _parse_grid(section: dict, key: str):
    values = section.get(f"{key}_values")
    log = section.get(f"{key}_log")
    if values is not None and log is not None:
        raise ValueError(f"give either {key}_values or {key}_log, not both")
    if values is not None:
        return np.asarray([float(v) for v in values])
    if log is not None:
        lo, hi, count = log
        return np.geomspace(float(lo), float(hi), int(count))
    return None


def validate(config: dict, command: Optional[str] = None) -> list:
    """Empty list iff runnable; each message names the offending field."""
    errors = []
    cmd = command or config.get("command")
    if cmd not in COMMANDS:
        errors.append(f"command: must be one of {COMMANDS}, got {cmd!r}")
        return errors

    seed = config.get("seed")
    if seed is None:
        errors.append("seed: mandatory, no wall-clock default")
    elif not isinstance(seed, int) or seed < 0:
        errors.append("seed: must be a nonnegative integer")

    d = config.get("d", 1)
    if not isinstance(d, int) or d < 1:
        errors.append("d: must be a positive integer")

    n = config.get("n")
    if cmd != "report" and cmd != "tauber":
        if n is None:
            errors.append("n: required (sites per axis, or 'auto')")
        elif n != "auto" and (not isinstance(n, int) or n < 1):
            errors.append("n: must be a positive integer or 'auto'")

    spec_section = config.get("spec")
    if cmd != "report":
        if not isinstance(spec_section, dict):
            errors.append("spec: missing [spec] section")
        else:
            family = spec_section.get("family")
            if family == "weibull_tail" and float(spec_section.get("alpha", 2.0)) <= 1.0:
                errors.append("spec.alpha: alpha must exceed 1")
            else:
                try:
                    DistributionSpec.from_config(spec_section)
                except (ValueError, TypeError) as exc:
                    errors.append(f"spec: {exc}")

    grid = config.get("grid", {})
    try:
        t_grid = _parse_grid(grid, "t")
    except ValueError as exc:
        errors.append(f"grid.t: {exc}")
        t_grid = None
    try:
        e_grid = _parse_grid(grid, "e")
    except ValueError as exc:
        errors.append(f"grid.e: {exc}")
        e_grid = None
    if cmd in ("pam", "bounds") and (t_grid is None or t_grid.size == 0):
        errors.append("grid.t: a nonempty positive time grid is required")
    if t_grid is not None and t_grid.size and np.any(t_grid <= 0):
        errors.append("grid.t: entries must be positive")
    if cmd == "tauber" and (e_grid is None or e_grid.size == 0):
        errors.append("grid.e: a nonempty energy grid is required")

    if cmd in ("spectrum", "pam", "ids", "bounds"):
        nd = config.get("n_disorder")
        if not isinstance(nd, int) or nd < 2:
            errors.append("n_disorder: must be an integer >= 2")

    method = config.get("method", "integrator")
    if method not in ("integrator", "mc"):
        errors.append("method: must be integrator or mc")
    n_paths = config.get("n_paths", 10_000)
    if not isinstance(n_paths, int) or n_paths < 1:
        errors.append("n_paths: must be a positive integer")

    var = config.get("variational", {})
    ell_max = var.get("ell_max")
    if ell_max is not None and (not isinstance(ell_max, int) or ell_max < 2):
        errors.append("variational.ell_max: must be an integer >= 2")
    c_fk = var.get("c_fk")
    if c_fk is not None and not (0.0 < float(c_fk) <= 2.0 * d):
        errors.append("variational.c_fk: must lie in (0, 2d]")
    if var.get("mode", "exact") not in ("exact", "asymptotic"):
        errors.append("variational.mode: must be exact or asymptotic")

    if cmd == "report":
        rep = config.get("report", {})
        for key in ("bounds_csv", "ids_csv"):
            path = rep.get(key)
            if path is None:
                errors.append(f"report.{key}: required input path missing")
            elif not Path(path).exists():
                errors.append(f"report.{key}: input file {path} not found")
    return errors


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: Path, meta: dict, header, rows) -> str:
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    body = "\n".join(lines) + "\n"
    path.write_text(body)
    return hashlib.sha256(body.encode()).hexdigest()


def _config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


class _Run:
    """Resolved configuration shared by the command implementations."""

    def __init__(self, config: dict, command: str, out_dir: Path):
        self.config = config
        self.command = command
        self.out = out_dir
        self.seed = int(config["seed"])
        self.d = int(config.get("d", 1))
        self.spec = (DistributionSpec.from_config(config["spec"])
                     if "spec" in config else None)
        grid = config.get("grid", {})
        self.t_grid = _parse_grid(grid, "t")
        self.e_grid = _parse_grid(grid, "e")
        self.n_disorder = int(config.get("n_disorder", 2))
        self.n_paths = int(config.get("n_paths", 10_000))
        self.method = config.get("method", "integrator")
        tol = config.get("tolerances", {})
        self.integrator_tol = float(tol.get("integrator", 1e-8))
        self.max_halvings = int(tol.get("max_halvings", 24))
        var = config.get("variational", {})
        self.var_params = VariationalParams(
            d=self.d,
            c_fk=float(var["c_fk"]) if "c_fk" in var else None,
            ell_max=int(var["ell_max"]) if "ell_max" in var else None)
        self.var_mode = var.get("mode", EXACT)
        self.meta_base = {
            "version": __version__,
            "config_hash": _config_hash(config),
            "command": command,
            "seed": self.seed,
        }
        if self.spec is not None:
            self.meta_base["spec"] = self.spec.label

    def geometry(self) -> BoxGeometry:
        n = self.config.get("n")
        if n == "auto":
            tmax = float(self.t_grid.max()) if self.t_grid is not None else 1.0
            sched = box_schedule(self.spec, tmax, self.d)
            n = 2 * sched.l + 1
        return BoxGeometry(self.d, int(n))

    def meta(self, geometry: Optional[BoxGeometry] = None) -> dict:
        meta = dict(self.meta_base)
        if geometry is not None:
            meta["geometry"] = f"d={geometry.d},n={geometry.n}"
        return meta


def _cmd_spectrum(run: _Run) -> dict:
    geo = run.geometry()
    rows = []
    for i in range(run.n_disorder):
        pot = potential_sample(run.spec, geo, derive_seed(run.seed, i))
        vals = full_spectrum(build_hamiltonian(geo, pot)).eigenvalues
        rows.extend((i, k, v) for k, v in enumerate(vals))
    digest = _write_csv(run.out / "spectrum.csv", run.meta(geo),
                        ["realization", "index", "eigenvalue"], rows)
    return {"spectrum.csv": digest}


def _cmd_pam(run: _Run) -> dict:
    geo = run.geometry()
    est = annealed_moment(run.spec, geo, run.t_grid, run.n_disorder,
                          method=run.method, seed=run.seed,
                          n_paths=run.n_paths, tol=run.integrator_tol,
                          max_halvings=run.max_halvings)
    rows = [(t, m, s, est.method, run.n_disorder)
            for t, m, s in zip(np.atleast_1d(est.t), np.atleast_1d(est.mean),
                               np.atleast_1d(est.se))]
    digest = _write_csv(run.out / "pam.csv", run.meta(geo),
                        ["t", "mean_u", "se", "method", "n_disorder"], rows)
    return {"pam.csv": digest}


def _default_energy_grid(spec, geo, seed) -> np.ndarray:
    probe = full_spectrum(build_hamiltonian(
        geo, potential_sample(spec, geo, derive_seed(seed, 0)))).eigenvalues
    lo = max(float(probe[0]) * 0.9, 1e-6)
    hi = float(probe[-1]) * 1.05
    cut = min(max(10.0 * lo, 1e-3), hi / 2)
    return np.unique(np.concatenate([np.geomspace(lo, cut, 100),
                                     np.linspace(cut, hi, 100)]))


def _cmd_ids(run: _Run) -> dict:
    geo = run.geometry()
    grid = run.e_grid if run.e_grid is not None else _default_energy_grid(
        run.spec, geo, run.seed)
    curve = empirical_ids(run.spec, geo, grid, run.n_disorder, run.seed)
    rows = list(zip(curve.energies, curve.values, curve.se))
    meta = run.meta(geo)
    meta["n_disorder"] = run.n_disorder
    digest = _write_csv(run.out / "ids.csv", meta, ["E", "N", "se"], rows)
    fit_rows = []
    try:
        window = default_fit_window(curve)
        fit = lifshitz_fit(curve, window)
        diag = log_correction_diagnostic(curve, run.d, window)
        fit_rows = [("window_lo", window[0]), ("window_hi", window[1]),
                    ("slope", fit.slope), ("slope_stderr", fit.stderr),
                    ("n_points", fit.n_points),
                    ("residual_power", diag.residual_power),
                    ("residual_logcorrected", diag.residual_logcorrected),
                    ("preferred_model", diag.preferred)]
    except ValueError as exc:
        fit_rows = [("fit_error", str(exc))]
    digest2 = _write_csv(run.out / "ids_fits.csv", meta, ["key", "value"], fit_rows)
    return {"ids.csv": digest, "ids_fits.csv": digest2}


def _cmd_bounds(run: _Run) -> dict:
    geo = run.geometry()
    trace = annealed_heat_trace(run.spec, geo, run.t_grid, run.n_disorder,
                                seed=run.seed)
    moment = annealed_moment(run.spec, geo, run.t_grid, run.n_disorder,
                             method="integrator", seed=run.seed,
                             tol=run.integrator_tol,
                             max_halvings=run.max_halvings)
    rows = []
    for k, t in enumerate(run.t_grid):
        rep = sandwich_bounds(float(t), run.spec, run.var_params, run.var_mode)
        tm, ts = np.atleast_1d(trace.mean)[k], np.atleast_1d(trace.se)[k]
        um, us = np.atleast_1d(moment.mean)[k], np.atleast_1d(moment.se)[k]
        se_log = math.sqrt((ts / tm) ** 2 + (us / um) ** 2) if tm > 0 and um > 0 else math.inf
        rows.append((rep.t, rep.cumulant, rep.chi_minus_inf, rep.argmin_minus,
                     rep.chi_plus_inf, rep.argmin_plus, rep.lower, rep.upper,
                     math.log(tm) if tm > 0 else -math.inf,
                     math.log(um) if um > 0 else -math.inf,
                     se_log, rep.regime))
    digest = _write_csv(run.out / "bounds.csv", run.meta(geo),
                        ["t", "G", "inf_chi_minus", "argmin_minus",
                         "inf_chi_plus", "argmin_plus", "lower", "upper",
                         "log_Nhat_emp", "log_u_emp", "se", "regime"], rows)
    return {"bounds.csv": digest}


def _cmd_tauber(run: _Run) -> dict:
    rows = []
    for e in run.e_grid:
        res = rate_function(run.spec, float(e))
        rows.append((e, res.value, res.t_star, int(res.interior)))
    digest = _write_csv(run.out / "tauber.csv", run.meta(),
                        ["E", "value", "t_star", "interior"], rows)
    return {"tauber.csv": digest}


def _read_csv(path: Path):
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, header, rows


def _cmd_report(run: _Run) -> dict:
    rep = run.config["report"]
    _, bh, brows = _read_csv(Path(rep["bounds_csv"]))
    _, _, irows = _read_csv(Path(rep["ids_csv"]))
    energies = np.array([float(r[0]) for r in irows])
    values = np.array([float(r[1]) for r in irows])
    increments = np.diff(np.concatenate([[0.0], values]))

    def grid_laplace(t: float) -> float:
        # Right-endpoint Stieltjes sum on the stored grid (approximation).
        return float(np.sum(np.exp(-t * energies) * increments))

    header = bh + ["log_Nhat_ids_grid"]
    rows = []
    for r in brows:
        t = float(r[0])
        lap = grid_laplace(t)
        rows.append(tuple(r) + (math.log(lap) if lap > 0 else -math.inf,))
    meta = run.meta()
    meta["note"] = "ids column is a grid Stieltjes approximation"
    digest = _write_csv(run.out / "report.csv", meta, header, rows)
    return {"report.csv": digest}


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "pam": _cmd_pam,
    "ids": _cmd_ids,
    "bounds": _cmd_bounds,
    "tauber": _cmd_tauber,
    "report": _cmd_report,
}


def run(config: dict, command: Optional[str] = None,
        out_dir: Optional[str] = None) -> dict:
    """Execute a validated config; returns the manifest dictionary."""
    cmd = command or config.get("command")
    violations = validate(config, cmd)
    if violations:
        raise ValueError("invalid configuration: " + "; ".join(violations))
    out = Path(out_dir or config.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    runner = _Run(config, cmd, out)
    start = time.perf_counter()
    outputs = _DISPATCH[cmd](runner)
    elapsed = time.perf_counter() - start
    manifest = {
        "command": cmd,
        "config": config,
        "version": __version__,
        "config_hash": _config_hash(config),
        "wall_times_s": {cmd: round(elapsed, 6)},
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True,
                                                  indent=2, default=str) + "\n")
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="toolkit",
        description="Seeded lattice experiments: spectra, heat kernels, "
                    "density of states, and variational bounds.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config["seed"] = args.seed

    violations = validate(config, args.command)
    if violations:
        for v in violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return 2
    try:
        manifest = run(config, args.command, args.out)
    except (NonConvergenceError, QuadratureError) as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3
    for name, digest in manifest["outputs"].items():
        print(f"{name}  sha256:{digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
