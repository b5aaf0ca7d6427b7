"""Command-line front end.

    corrproj simulate|validate-projection|compare|correlation \\
        --config run.json --out-dir results/ [--seed N] [--dt DT] [--quiet]

The configuration is a JSON object::

    {
      "model": {"kind": "two_band", "params": {"coupling_scale": 0.1, "seed": 3}},
      "grid": {"t0": 0.0, "t1": 10.0, "dt": 0.05},
      "initial_state": {"rho_s": [[1, 0], [0, 0]]},          # or {"blocks": [...]}
      "projection": {"type": "product", "rho_env": "model"},  # or "default", "correlated"
      "solvers": [{"method": "exact"},
                  {"method": "tcl2", "label": "tcl2_corr", "projection": {"type": "default"}}],
      "picture": "interaction",
      "tolerances": {"psd_tol": 1e-9},
      "correlation": {"coupling_index": null}
    }

Operators are nested row-major lists. A complex entry is written as a
[re, im] pair, so a complex d x d matrix has shape (d, d, 2).

Exit codes: 0 success, 1 unreadable or malformed configuration,
2 validation failure, 3 solver abort (details in diagnostic.json).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_TOLERANCES
from .models import ModelSpec, build_model, default_correlated_projection
from .operators import DensityMatrix, partial_trace_env, partial_trace_sys, max_abs
from .projections import (CorrelatedProjection, ProductProjection, ProjectionError,
                          assemble_initial_state, conservation_check)
from .solvers import (GeneralizedLindbladGenerator, LindbladGenerator, QuadratureError,
                      SolverAbort, TimeGrid, Trajectory, evolve_exact,
                      evolve_generalized_lindblad, evolve_lindblad, evolve_nz2, evolve_tcl,
                      env_correlation, markov_timescales, odd_moment_check, tcl2_generator)
from .solvers.correlation import decay_time

log = logging.getLogger("corrproj")

METHODS = ("exact", "lindblad", "tcl2", "tcl4", "nz2", "generalized_lindblad")
EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_ABORT = 0, 1, 2, 3


class ConfigError(ValueError):
    """The configuration could not be read or does not follow the schema."""


# Parsing ------------------------------------------------------------------------

def parse_matrix(x, name: str = "matrix") -> np.ndarray:
    """Nested row-major list, real (d, d) or complex (d, d, 2), to an array."""
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: not a numeric array") from exc
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{name}: expected a square matrix, got shape {arr.shape}")
    return arr.astype(complex)


def to_json(obj):
    """Make results JSON-safe: complex as [re, im], non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_json(obj.real), to_json(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    model = _require(cfg, "model", "config")
    if not isinstance(model, dict) or "kind" not in model:
        raise ConfigError("model: expected an object with a 'kind'")
    grid = _require(cfg, "grid", "config")
    for key in ("t1", "dt"):
        if not isinstance(_require(grid, key, "grid"), (int, float)):
            raise ConfigError(f"grid.{key} must be a number")
    solvers = cfg.get("solvers", [])
    if not isinstance(solvers, list):
        raise ConfigError("solvers must be a list")
    for k, s in enumerate(solvers):
        method = _require(s, "method", f"solvers[{k}]")
        if method not in METHODS:
            raise ConfigError(f"solvers[{k}]: unknown method {method!r}; expected one of {METHODS}")
    if cfg.get("picture", "interaction") not in ("interaction", "schrodinger"):
        raise ConfigError("picture must be 'interaction' or 'schrodinger'")
    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict) or set(tol) - set(DEFAULT_TOLERANCES.as_dict()):
        raise ConfigError(f"tolerances: allowed keys are {sorted(DEFAULT_TOLERANCES.as_dict())}")
    return cfg


# Experiment assembly --------------------------------------------------------------

class Experiment:
    """Model, grid, initial state and projections resolved from a config."""

    def __init__(self, cfg: dict, seed: int | None = None, dt: float | None = None):
        mcfg = dict(cfg["model"])
        params = dict(mcfg.get("params", {}))
        if seed is not None:
            params["seed"] = int(seed)
        try:
            self.spec = ModelSpec(mcfg["kind"], params, int(mcfg.get("split", 0)))
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc
        self.model = build_model(self.spec)
        self.tol = DEFAULT_TOLERANCES.with_overrides(**cfg.get("tolerances", {}))
        g = cfg["grid"]
        self.grid = TimeGrid(float(g.get("t0", 0.0)), float(g["t1"]),
                             float(dt if dt is not None else g["dt"]))
        self.picture = cfg.get("picture", "interaction")
        self.cfg = cfg
        self.rho0 = self._initial_state(cfg.get("initial_state", {}))

    def _initial_state(self, icfg: dict) -> DensityMatrix:
        m = self.model
        if "blocks" in icfg:
            p = self.projection(icfg.get("projection", self.cfg.get("projection", {"type": "default"})))
            blocks = [parse_matrix(b, f"initial_state.blocks[{k}]")
                      for k, b in enumerate(icfg["blocks"])]
            rho = assemble_initial_state(blocks, p, self.tol)
        else:
            rho_s = parse_matrix(_require(icfg, "rho_s", "initial_state"), "initial_state.rho_s")
            if rho_s.shape[0] != m.system_dim:
                raise ValueError(f"rho_s must be {m.system_dim} x {m.system_dim}")
            DensityMatrix(rho_s, tol=self.tol)
            rho = m.initial_state(rho_s)
        return DensityMatrix(rho.data, m.space, self.tol)

    def projection(self, pcfg: dict | None):
        m = self.model
        pcfg = pcfg or {"type": "product"}
        kind = pcfg.get("type", "product")
        if kind == "product":
            ref = pcfg.get("rho_env", "model")
            if ref == "model":
                rho_env = m.rho_env0
            elif ref == "initial":
                if not hasattr(self, "rho0"):
                    raise ConfigError("rho_env 'initial' cannot define the initial state itself")
                rho_env = partial_trace_sys(self.rho0, m.split).data
            else:
                rho_env = parse_matrix(ref, "projection.rho_env")
            return ProductProjection(rho_env, m.split, m.env_dims)
        if kind == "default":
            return default_correlated_projection(m)
        if kind == "correlated":
            a = [parse_matrix(x, "projection.a_ops") for x in _require(pcfg, "a_ops", "projection")]
            b = [parse_matrix(x, "projection.b_ops") for x in _require(pcfg, "b_ops", "projection")]
            return CorrelatedProjection(a, b, m.split, m.env_dims)
        raise ConfigError(f"unknown projection type {kind!r}")

    def solver_projection(self, scfg: dict):
        return self.projection(scfg.get("projection", self.cfg.get("projection")))

    def exact(self) -> Trajectory:
        frame = self.model.h0 if self.picture == "interaction" else None
        return evolve_exact(self.model.hamiltonian, self.rho0, self.grid, frame=frame,
                            tol=self.tol).reduced(self.model.split)

    def run(self, scfg: dict) -> tuple[Trajectory, dict]:
        """Run one solver; return its reduced trajectory and a settings/diagnostics record."""
        method = scfg["method"]
        info: dict = {"label": scfg.get("label", method), "method": method}
        if method == "exact":
            traj = self.exact()
        else:
            traj = self._run_projected(method, scfg, info)
            if self.picture == "schrodinger":
                traj = traj.to_schrodinger_picture(self.model.h_s)
            else:
                traj = traj.to_interaction_picture(self.model.h_s)
        info.update(settings=traj.meta, picture=traj.picture,
                    max_trace_defect=float(np.max(traj.trace_defect)),
                    min_eigenvalue=float(np.min(traj.min_eigenvalue)))
        return traj, info

    def _run_projected(self, method: str, scfg: dict, info: dict) -> Trajectory:
        m = self.model
        p = self.solver_projection(scfg)
        l = m.interaction_liouvillian()
        info["projection"] = {"n": p.n, "type": type(p).__name__}
        info["initial_range_defect"] = max_abs(p.apply_array(self.rho0.data) - self.rho0.data)
        blocks = p.reduce_blocks(self.rho0.data)
        q2 = int(scfg.get("quad_steps", 128))
        if method in ("tcl2", "tcl4", "nz2") and self.grid.t1 > 0:
            info["odd_moment"] = odd_moment_check(p, l, [self.grid.t1 / 2, self.grid.t1],
                                                  warn=True).as_dict()
        if method in ("tcl2", "tcl4"):
            return evolve_tcl(p, l, blocks, self.grid, order=int(method[-1]), quad_steps=q2,
                              quad_steps_k4=int(scfg.get("quad_steps_k4", 32)), check_odd=False)
        if method == "nz2":
            return evolve_nz2(p, l, blocks, self.grid, check_odd=False)
        if method == "lindblad" and "h_s" in scfg:
            h = parse_matrix(scfg["h_s"], "lindblad.h_s")
            jumps = [parse_matrix(r, "lindblad.jump_ops") for r in scfg.get("jump_ops", [])]
            gen = LindbladGenerator(h, jumps, self.tol)
            info["generator"] = "explicit (Schroedinger picture)"
            return evolve_lindblad(gen, partial_trace_env(self.rho0, m.split), self.grid, self.tol)
        # Markovian generators read off K2 at a fixed time.
        t_gen = float(scfg.get("generator_time", self.grid.t1))
        k2 = tcl2_generator(p, l, t_gen, q2)
        fit, fit_info = GeneralizedLindbladGenerator.from_relevant_generator(k2, p.n)
        info["generator"] = {"from": "tcl2", "time": t_gen, "quad_steps": q2, **fit_info}
        if method == "lindblad":
            if p.n != 1:
                raise ValueError("the lindblad solver reads its generator off a product projection")
            gen = LindbladGenerator(fit.h_blocks[0], fit.r_ops.get((0, 0), ()), self.tol)
            traj = evolve_lindblad(gen, blocks[0], self.grid, self.tol)
        else:
            traj = evolve_generalized_lindblad(fit, blocks, self.grid, self.tol)
        # K2 lives in the interaction picture, and so does everything derived from it.
        traj.picture = "interaction"
        return traj

    def manifest(self, command: str) -> dict:
        return {
            "command": command,
            "version": __version__,
            "config": self.cfg,
            "model": self.spec.to_dict(),
            "grid": self.grid.as_dict(),
            "n_steps": self.grid.n_steps,
            "picture": self.picture,
            "tolerances": self.tol.as_dict(),
        }


# Output --------------------------------------------------------------------------

class OutputSet:
    """Collects output files and writes them only once a command has finished."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, str] = {}

    def add_json(self, name: str, obj):
        self.files[name] = json.dumps(to_json(obj), indent=2, ensure_ascii=False) + "\n"

    def add_text(self, name: str, text: str):
        self.files[name] = text

    def commit(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            atomic_write(self.out_dir / name, text)


def atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(columns: list[str], rows) -> str:
    lines = [",".join(columns)]
    lines += [",".join(format(float(x), ".17g") for x in row) for row in rows]
    return "\n".join(lines) + "\n"


# Commands ------------------------------------------------------------------------

def _solver_list(exp: Experiment) -> list[dict]:
    solvers = exp.cfg.get("solvers", [])
    if not solvers:
        raise ConfigError("at least one solver is required")
    labels = [s.get("label", s["method"]) for s in solvers]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"solver labels must be unique: {labels}")
    return solvers


def cmd_simulate(exp: Experiment, out: OutputSet) -> int:
    man = exp.manifest("simulate")
    man["solvers"] = []
    for scfg in _solver_list(exp):
        label = scfg.get("label", scfg["method"])
        log.info("running %s", label)
        traj, info = exp.run(scfg)
        info["file"] = f"{label}.csv"
        out.add_text(info["file"], traj.csv_text())
        man["solvers"].append(info)
    out.add_json("manifest.json", man)
    return EXIT_OK


def cmd_compare(exp: Experiment, out: OutputSet) -> int:
    man = exp.manifest("compare")
    ref = exp.exact()
    cols, dists, summary, man["solvers"] = ["t"], [], {}, []
    for scfg in _solver_list(exp):
        if scfg["method"] == "exact":
            continue
        label = scfg.get("label", scfg["method"])
        log.info("running %s", label)
        traj, info = exp.run(scfg)
        d = traj.distance_to(ref)
        cols.append(label)
        dists.append(d)
        summary[label] = {"max_error": float(d.max()), "mean_error": float(d.mean()),
                          "final_error": float(d[-1])}
        man["solvers"].append(info)
    if not dists:
        raise ConfigError("compare needs at least one non-exact solver")
    out.add_text("distances.csv", _csv(cols, np.column_stack([ref.times] + dists)))
    out.add_json("summary.json", {"reference": "exact", "metric": "trace_distance",
                                  "methods": summary})
    out.add_json("manifest.json", man)
    return EXIT_OK


def cmd_validate(exp: Experiment, out: OutputSet) -> int:
    p = exp.projection(exp.cfg.get("projection"))
    rep = p.report
    result = {"projection": rep.as_dict(), "restricted_form": rep.restricted_form}
    ok = rep.passed
    if exp.model.conserved is not None:
        cons = conservation_check(p, exp.model.operator("conserved"))
        result["conservation"] = cons.as_dict()
        ok = ok and cons.passed
    result["passed"] = ok
    out.add_json("projection_report.json", result)
    out.add_json("manifest.json", exp.manifest("validate-projection"))
    log.info("projection validation %s", "passed" if ok else "failed")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_correlation(exp: Experiment, out: OutputSet) -> int:
    m = exp.model
    ccfg = exp.cfg.get("correlation", {})
    idx = ccfg.get("coupling_index")
    indices = range(len(m.coupling_ops)) if idx is None else [int(idx)]
    times = exp.grid.times - exp.grid.t0
    cols, data, taus = ["t"], [times], {}
    for k in indices:
        c = env_correlation(m, k, times)
        cols += [f"re_C{k}", f"im_C{k}", f"abs_C{k}"]
        data += [c.real, c.imag, np.abs(c)]
        taus[f"C{k}"] = decay_time(times, c)
    q2 = int(ccfg.get("quad_steps", 128))
    p = exp.projection(exp.cfg.get("projection"))
    scales = markov_timescales(m, times, p, None if idx is None else int(idx), q2)
    out.add_text("correlation.csv", _csv(cols, np.column_stack(data)))
    out.add_json("timescales.json", {**scales.as_dict(), "per_coupling_tau_E": taus,
                                     "quad_steps": q2})
    man = exp.manifest("correlation")
    man["quad_steps"] = q2
    out.add_json("manifest.json", man)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "validate-projection": cmd_validate,
            "compare": cmd_compare, "correlation": cmd_correlation}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corrproj", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--out-dir", required=True, type=Path)
    parser.add_argument("--seed", type=int, help="override the model's random seed")
    parser.add_argument("--dt", type=float, help="override the grid step")
    parser.add_argument("--quiet", action="store_true")
    return parser


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"corrproj: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        log.error("--seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    out = OutputSet(args.out_dir)
    exp = None
    try:
        cfg = load_config(args.config)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            exp = Experiment(cfg, args.seed, args.dt)
            code = COMMANDS[args.command](exp, out)
        if "manifest.json" in out.files and caught:
            man = json.loads(out.files["manifest.json"])
            man["warnings"] = sorted({str(w.message) for w in caught})
            out.add_json("manifest.json", man)
        for w in caught:
            log.warning("%s", w.message)
    except (ConfigError, KeyError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (SolverAbort, QuadratureError) as exc:
        log.error("solver aborted: %s", exc)
        diag = {"error": str(exc), "type": type(exc).__name__,
                "diagnostic": getattr(exc, "diagnostic", {})}
        if exp is not None:
            diag["manifest"] = exp.manifest(args.command)
        fail = OutputSet(args.out_dir)
        fail.add_json("diagnostic.json", diag)
        fail.commit()
        return EXIT_ABORT
    except (ValueError, ProjectionError) as exc:
        log.error("validation failed: %s", exc)
        return EXIT_VALIDATION
    out.commit()
    return code


def main(argv=None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
