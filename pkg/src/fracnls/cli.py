"""Command-line experiment runner.

Usage::

    fracnls COMMAND [--config FILE] [--output DIR]

Exit status: 0 success, 2 usage error or unknown command, 3 configuration
error, 4 numerical failure (the manifest is still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _kernels
from .analysis import (
    Thresholds,
    classify_sequence,
    concentration_function,
    stability_experiment,
    subadditivity_scan,
)
from .config import ConfigError, FlatConfig, format_value, read_flat
from .dynamics import EvolutionAborted, EvolveConfig, evolve, phase_slopes
from .fracops import QuadratureError, gagliardo_seminorm_sq
from .functional import GNError, Params, ParamsError, State, critical_exponent, gn_check, lp_norm
from .grid import GridError, make_grid
from .groundstate import MinimizeConfig, minimize, scalar_ground_state
from .io import FormatError, read_fnls, write_csv, write_fnls, write_metadata
from .parallel import worker_count
from .verify import HEADER as VERIFY_HEADER
from .verify import run_all, smooth_random_field

log = logging.getLogger("fracnls")

COMMANDS = ("groundstate", "scalar", "evolve", "stability", "scan-subadd", "check-gn", "concentration", "verify-ops")

DEFAULTS = {
    "seed": 0,
    "grid.dim": 2,
    "grid.n": 128,
    "grid.length": 40.0,
    **{f"params.{k}": v for k, v in Params().to_mapping().items()},
    "minimize.step": 1.0,
    "minimize.shrink": 0.5,
    "minimize.armijo": 1e-4,
    "minimize.tol": 1e-6,
    "minimize.max_iter": 5000,
    "minimize.init": "gaussian-bumps",
    "minimize.precondition": True,
    "minimize.shift": 1.0,
    "minimize.initial": "",
    "evolve.dt": 1e-3,
    "evolve.t_final": 5.0,
    "evolve.stride": 100,
    "evolve.store_states": False,
    "evolve.initial": "",
    "analysis.workers": 1,
    "analysis.component": 1,
    "analysis.deltas": [0.0, 1e-3, 1e-2],
    "analysis.masses": ["0.5:0.5", "0.5:1.0", "1.0:0.5", "0:0.5", "0.5:0"],
    "analysis.radii": [1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 19.6875],
    "analysis.window_radius": 2.0,
    "analysis.compact_radius": 0.0,
    "analysis.eps_c": 0.01,
    "analysis.eps_v_fraction": 0.05,
    "analysis.gn_samples": 100,
    "analysis.gn_p": 3.0,
    "analysis.gn_q": 2.0,
    "analysis.gn_alpha": 0.6,
}


class NumericalFailure(RuntimeError):
    pass


class Settings:
    """Typed view over the merged configuration with line-aware errors."""

    def __init__(self, raw: FlatConfig | None):
        self.raw = raw if raw is not None else FlatConfig()
        self.values = dict(DEFAULTS)
        self.values.update(self.raw)

    def _fail(self, key, msg):
        raise ConfigError(f"{key}: {msg}", self.raw.line(key))

    def get(self, key, kind):
        v = self.values[key]
        try:
            if kind is bool:
                if not isinstance(v, bool):
                    raise ValueError("expected true or false")
                return v
            if kind is int:
                if isinstance(v, bool) or not float(v).is_integer():
                    raise ValueError("expected an integer")
                return int(v)
            if kind is float:
                if isinstance(v, bool) or isinstance(v, list):
                    raise ValueError("expected a number")
                return float(v)
            if kind is str:
                return "" if v is None else str(v)
            if kind is list:
                return list(v) if isinstance(v, list) else [v]
        except (TypeError, ValueError) as exc:
            self._fail(key, f"{exc} (got {v!r})")
        raise AssertionError(kind)

    def floats(self, key):
        try:
            return [float(x) for x in self.get(key, list)]
        except (TypeError, ValueError):
            self._fail(key, "expected a comma-separated list of numbers")

    def mass_pairs(self, key):
        out = []
        for item in self.get(key, list):
            parts = str(item).split(":")
            try:
                if len(parts) != 2:
                    raise ValueError
                out.append((float(parts[0]), float(parts[1])))
            except ValueError:
                self._fail(key, f"mass pairs are written tau1:tau2, got {item!r}")
        return out

    def build(self, key_prefix, factory):
        try:
            return factory()
        except (GridError, ParamsError, ValueError) as exc:
            keys = [k for k in self.raw if k.startswith(key_prefix)]
            line = min((self.raw.line(k) for k in keys), default=None)
            raise ConfigError(str(exc), line) from None

    def grid(self):
        return self.build("grid.", lambda: make_grid(self.get("grid.dim", int), self.get("grid.n", int),
                                                      self.get("grid.length", float)))

    def params(self):
        return self.build("params.", lambda: Params(**{k: self.get(f"params.{k}", float)
                                                        for k in Params().to_mapping()}))

    def load_state(self, key):
        path = self.get(key, str)
        try:
            g, _, comps = read_fnls(path)
        except (OSError, FormatError, GridError) as exc:
            self._fail(key, f"cannot read state file: {exc}")
        if len(comps) < 2:
            self._fail(key, "state file needs two components")
        return State(g, comps[0], comps[1])

    def minimize_config(self):
        init = self.get("minimize.init", str)
        initial = None
        if init == "provided-state":
            if not self.get("minimize.initial", str):
                self._fail("minimize.init", "provided-state needs minimize.initial")
            initial = self.load_state("minimize.initial")
        return self.build("minimize.", lambda: MinimizeConfig(
            step=self.get("minimize.step", float),
            shrink=self.get("minimize.shrink", float),
            armijo=self.get("minimize.armijo", float),
            tol=self.get("minimize.tol", float),
            max_iter=self.get("minimize.max_iter", int),
            seed=self.get("seed", int),
            init=init,
            precondition=self.get("minimize.precondition", bool),
            shift=self.get("minimize.shift", float),
            initial_state=initial,
        ))

    def evolve_config(self):
        return self.build("evolve.", lambda: EvolveConfig(
            dt=self.get("evolve.dt", float),
            t_final=self.get("evolve.t_final", float),
            stride=self.get("evolve.stride", int),
            store_states=self.get("evolve.store_states", bool),
        ))

    def workers(self):
        return worker_count(self.get("analysis.workers", int))


# ---------------------------------------------------------------------------
# manifest


class Manifest:
    def __init__(self, path: Path, command: str, config_path, settings: Settings, workers: int):
        self.path = path
        self.start = time.time()
        self.data = {
            "command": command,
            "config_path": str(config_path) if config_path else None,
            "config": {k: format_value(v) for k, v in sorted(settings.values.items())},
            "seed": settings.values["seed"],
            "workers": workers,
            "versions": {
                "fracnls": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "kernels": _kernels.BACKEND,
            },
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "status": "running",
            "outputs": [],
        }
        self.write()

    def add(self, name):
        self.data["outputs"].append(str(name))

    def finish(self, status, **extra):
        self.data["status"] = status
        self.data["wall_time_s"] = round(time.time() - self.start, 3)
        self.data.update(extra)
        self.write()

    def write(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def _ground_state(s: Settings):
    grid, params = s.grid(), s.params()
    s.build("params.", lambda: params.check_dim(grid.dim))
    res = minimize(params, s.minimize_config(), grid)
    return grid, params, res


def _write_ground_state(out: Path, man: Manifest, res):
    write_fnls(out / "groundstate.fnls", res.state.grid, res.params.alpha, list(res.state))
    write_metadata(out / "groundstate.meta", res.metadata())
    write_csv(out / "groundstate_trace.csv", ["iteration", "energy"], enumerate(res.trace))
    for name in ("groundstate.fnls", "groundstate.meta", "groundstate_trace.csv"):
        man.add(name)


def cmd_groundstate(s, out, man):
    _, _, res = _ground_state(s)
    _write_ground_state(out, man, res)
    summary = {"energy": res.energy, "lambda1": res.lambda1, "lambda2": res.lambda2,
               "iterations": res.iterations, "tail_fraction": res.tail_fraction}
    if not res.converged:
        raise NumericalFailure(f"minimizer did not converge: {res.message}")
    return summary


def cmd_scalar(s, out, man):
    grid, params = s.grid(), s.params()
    which = s.get("analysis.component", int)
    if which not in (1, 2):
        s._fail("analysis.component", "must be 1 or 2")
    mu, p = params.component(which)
    tau = params.tau1 if which == 1 else params.tau2
    res = scalar_ground_state(params.alpha, mu, p, tau, s.minimize_config(), grid)
    write_fnls(out / "scalar.fnls", grid, params.alpha, [res.field])
    write_metadata(out / "scalar.meta", {"component": which, "omega": res.omega, "residual": res.residual,
                                         "energy": res.energy, "iterations": res.iterations,
                                         "converged": res.converged, "seed": s.get("seed", int)})
    write_csv(out / "scalar_trace.csv", ["iteration", "energy"], enumerate(res.trace))
    for name in ("scalar.fnls", "scalar.meta", "scalar_trace.csv"):
        man.add(name)
    if not res.converged:
        raise NumericalFailure(f"scalar minimizer did not converge: {res.message}")
    return {"energy": res.energy, "omega": res.omega}


def cmd_evolve(s, out, man):
    params = s.params()
    econf = s.evolve_config()
    path = s.get("evolve.initial", str)
    reference = None
    lambdas = None
    if path:
        start = s.load_state("evolve.initial")
    else:
        _, _, res = _ground_state(s)
        if not res.converged:
            raise NumericalFailure(f"minimizer did not converge: {res.message}")
        start = reference = res.state
        lambdas = res.multipliers
        econf = replace(econf, store_states=True)
    try:
        tr = evolve(start, params, econf, reference=reference)
        failure = None
    except EvolutionAborted as exc:
        tr, failure = exc.trajectory, str(exc)
    write_csv(out / "trajectory.csv", list(tr.columns()),
              zip(*tr.columns().values()))
    man.add("trajectory.csv")
    summary = {"mass_drift": tr.mass_drift(), "energy_drift": tr.energy_drift()}
    if reference is not None and failure is None:
        slopes = phase_slopes(tr, reference)
        rows = [(j + 1, lam, sl, abs(sl - lam) / abs(lam)) for j, (lam, sl) in enumerate(zip(lambdas, slopes))]
        write_csv(out / "phase.csv", ["component", "lambda", "slope", "rel_error"], rows)
        man.add("phase.csv")
        summary["max_orbit_distance"] = float(np.max(tr.orbit_distance))
    if s.get("evolve.store_states", bool) and tr.states:
        comps = [c for st in tr.states for c in st]
        write_fnls(out / "trajectory_states.fnls", start.grid, params.alpha, comps)
        man.add("trajectory_states.fnls")
    if failure:
        raise NumericalFailure(failure)
    return summary


def cmd_stability(s, out, man):
    _, params, res = _ground_state(s)
    if not res.converged:
        raise NumericalFailure(f"minimizer did not converge: {res.message}")
    table = stability_experiment(res, s.floats("analysis.deltas"), params, s.evolve_config(),
                                 seed=s.get("seed", int), workers=man.data["workers"])
    header = ["delta", "initial_distance", "sup_distance", "mass_drift", "energy_drift", "status"]
    write_csv(out / "stability.csv", header, table.rows)
    man.add("stability.csv")
    bad = [r for r in table.rows if r["status"] != "ok"]
    if bad:
        raise NumericalFailure(f"{len(bad)} stability run(s) aborted")
    return {"monotone": table.monotone}


def cmd_scan_subadd(s, out, man):
    grid, params = s.grid(), s.params()
    pairs = s.mass_pairs("analysis.masses")
    table = subadditivity_scan(pairs, params, s.minimize_config(), grid, workers=man.data["workers"])
    write_csv(out / "mass_energies.csv", ["tau1", "tau2", "energy", "converged", "solver", "iterations"],
              ({"tau1": e["masses"][0], "tau2": e["masses"][1], **e} for e in table.energies))
    header = ["sigma1", "sigma2", "tau1", "tau2", "e_sigma", "e_tau", "e_sum", "margin", "valid"]
    write_csv(out / "subadditivity.csv", header, table.rows)
    man.add("mass_energies.csv")
    man.add("subadditivity.csv")
    flagged = table.flagged()
    invalid = [r for r in table.rows if not r["valid"]]
    if flagged:
        print(f"fracnls: {len(flagged)} non-negative margin(s) flagged", file=sys.stderr)
    if invalid:
        print(f"fracnls: {len(invalid)} row(s) invalid (non-converged solve)", file=sys.stderr)
    return {"flagged": len(flagged), "invalid": len(invalid), "all_negative": table.all_negative}


def cmd_check_gn(s, out, man):
    grid = s.grid()
    seed = s.get("seed", int)
    alpha = s.get("analysis.gn_alpha", float)
    p, q = s.get("analysis.gn_p", float), s.get("analysis.gn_q", float)
    n = s.get("analysis.gn_samples", int)
    crit = critical_exponent(grid.dim, alpha)
    rows = []
    for i in range(n):
        u = smooth_random_field(grid, seed, i, kmax=max(2, grid.n // 16))
        try:
            ratio = gn_check(u, grid, p, q, alpha)
        except GNError as exc:
            raise ConfigError(str(exc), s.raw.line("analysis.gn_p")) from None
        emb = lp_norm(u, grid, crit) ** 2 / gagliardo_seminorm_sq(u, grid, alpha) if math.isfinite(crit) else math.nan
        rows.append((i, ratio, emb))
    write_csv(out / "gn.csv", ["sample", "ratio", "embedding_ratio"], rows)
    man.add("gn.csv")
    return {"max_ratio": max(r[1] for r in rows), "max_embedding_ratio": max(r[2] for r in rows)}


def cmd_concentration(s, out, man):
    grid, _, res = _ground_state(s)
    if not res.converged:
        raise NumericalFailure(f"minimizer did not converge: {res.message}")
    radii = s.floats("analysis.radii")
    try:
        q = concentration_function(res.state, radii)
    except ValueError as exc:
        raise ConfigError(str(exc), s.raw.line("analysis.radii")) from None
    write_csv(out / "concentration.csv", ["t", "Q"], q)
    rc = s.get("analysis.compact_radius", float) or None
    th = Thresholds(s.get("analysis.eps_c", float), s.get("analysis.eps_v_fraction", float), rc)
    c = classify_sequence([res.state], s.get("analysis.window_radius", float), th)
    write_csv(out / "classification.csv", ["label", "total_mass", "compact_q", "window_q"],
              [(c.label, c.total_mass, c.compact_q, c.window_q)])
    man.add("concentration.csv")
    man.add("classification.csv")
    return {"label": c.label}


def cmd_verify_ops(s, out, man):
    checks = run_all(seed=s.get("seed", int))
    write_csv(out / "verify_ops.csv", VERIFY_HEADER, (c.row() for c in checks))
    man.add("verify_ops.csv")
    failed = [c for c in checks if not c.passed]
    if failed:
        raise NumericalFailure(f"{len(failed)} operator check(s) failed")
    return {"checks": len(checks)}


HANDLERS = {
    "groundstate": cmd_groundstate,
    "scalar": cmd_scalar,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "scan-subadd": cmd_scan_subadd,
    "check-gn": cmd_check_gn,
    "concentration": cmd_concentration,
    "verify-ops": cmd_verify_ops,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="fracnls", description="Coupled fractional NLS laboratory")
    ap.add_argument("command", choices=COMMANDS, help="experiment to run")
    ap.add_argument("-c", "--config", help="flat key = value config file (defaults if omitted)")
    ap.add_argument("-o", "--output", default=".", help="output directory (default: current)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(command, config_path=None, output_dir=".") -> int:
    """Execute one command; returns the process exit status."""
    if command not in HANDLERS:
        print(f"fracnls: unknown command {command!r}", file=sys.stderr)
        return 2
    try:
        raw = read_flat(config_path, known=set(DEFAULTS)) if config_path else None
        settings = Settings(raw)
        workers = settings.workers()
    except FileNotFoundError:
        print(f"fracnls: config file not found: {config_path}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"fracnls: config error: {exc}", file=sys.stderr)
        return 3
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out / "manifest.json", command, config_path, settings, workers)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            summary = HANDLERS[command](settings, out, man)
    except ConfigError as exc:
        man.finish("config-error", error=str(exc))
        print(f"fracnls: config error: {exc}", file=sys.stderr)
        return 3
    except (NumericalFailure, QuadratureError, FloatingPointError) as exc:
        man.finish("numerical-failure", error=str(exc))
        print(f"fracnls: numerical failure: {exc}", file=sys.stderr)
        return 4
    man.finish("ok", summary={k: format_value(v) for k, v in summary.items()})
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return run(args.command, args.config, args.output)


if __name__ == "__main__":
    sys.exit(main())
