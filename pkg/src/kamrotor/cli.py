"""Experiment driver.

Subcommands map one-to-one onto the library pipelines: spectrum, deff,
lengths, orbit, classical, generic, truncated, compare, plus validate for
dry-run config checking.  Parameters come from an optional JSON config file
with command-line flags taking precedence; every run writes its outputs
plus a manifest.json recording the merged config, code version, timestamps,
and a sha256 checksum per emitted file.

Exit codes: 0 success, 2 config error, 3 compute error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import serialize
from .classical import (ClassicalParams, classical_area_spectrum,
                        classical_demarcation, diffusion_coefficient,
                        initial_points, occupancy_grid, trajectory)
from .errors import ConfigError, KamrotorError
from .floquet import ModelParams, build_v, diagonalize
from .generic_hbar import rational_sequence, resonant_scan, truncated_spectrum
from ._kernels import kernel_backend
from .observables import (area_spectrum, cell_lengths, demarcation_point,
                          default_orbit_times, effective_dimension,
                          long_time_area_direct, orbit_areas_all_cells)
from .wannier import WannierBasis, project

_OUTDIR_ENV = "KAMROTOR_OUTDIR"
# dense eigensolves above this dimension need the explicit --full-scale flag
_DESK_DIM = 6000
_DEFAULT_LABELS = [round(0.05 * i, 2) for i in range(1, 20)]


def _float_list(text):
    return [float(t) for t in str(text).split(",") if t != ""]


def _int_list(text):
    return [int(t) for t in str(text).split(",") if t != ""]


# name -> (parser, default, help); required parameters have default None
# and are checked during validation
_SCHEMAS = {
    "spectrum": {
        "K": (float, None, "kick strength"),
        "Nx": (int, None, "position cells per side"),
        "Np": (int, 0, "momentum cells (0 = same as Nx)"),
        "M": (int, 1, "resonance numerator of hbar_eff = 2 pi M / N"),
        "theta": (float, 0.0, "Bloch phase"),
        "portrait": (_float_list, [], "labels whose eigenstate grids to export"),
    },
    "deff": {
        "K": (float, None, "kick strength"),
        "Nx": (_int_list, None, "comma-separated N_x sweep, N_p = N_x"),
        "M": (int, 1, "resonance numerator"),
        "theta": (float, 0.0, "Bloch phase"),
        "labels": (_float_list, _DEFAULT_LABELS, "labels to fit"),
    },
    "lengths": {
        "K": (float, None, "kick strength"),
        "Nx": (int, None, "position cells per side"),
        "Np": (int, 0, "momentum cells (0 = same as Nx)"),
        "M": (int, 1, "resonance numerator"),
        "theta": (float, 0.0, "Bloch phase"),
    },
    "orbit": {
        "K": (float, None, "kick strength"),
        "Nx": (int, None, "position cells per side"),
        "Np": (int, 0, "momentum cells (0 = same as Nx)"),
        "M": (int, 1, "resonance numerator"),
        "theta": (float, 0.0, "Bloch phase"),
        "cells": (int, 20, "number of sampled initial cells"),
        "all_cells": (bool, False, "emit every cell instead of a sample"),
        "direct": (bool, False, "add the direct time-evolution column"),
        "t_min": (int, 100, "earliest sample time (kicks)"),
        "t_max": (int, 10_000, "latest sample time (kicks)"),
        "t_count": (int, 48, "log-spaced sample count"),
    },
    "classical": {
        "K": (float, None, "kick strength"),
        "n_cells": (int, 100, "coarse grid cells per side"),
        "n_init": (int, 10_000, "random initial conditions"),
        "n_kicks": (int, 1_000_000, "kicks per trajectory"),
        "diffusion": (bool, False, "also estimate the diffusion coefficient"),
        "export_grids": (int, 0, "occupancy grids to export (first k trajectories)"),
    },
    "generic": {
        "K": (float, None, "kick strength"),
        "Nx": (int, None, "position cells per side"),
        "delta": (float, None, "irrational offset in hbar_eff = 2 pi/(Nx+delta)^2"),
        "count": (int, 4, "rational-approximation rungs requested"),
        "max_dim": (int, 8000, "skip rungs whose block dimension exceeds this"),
        "theta": (float, 0.0, "Bloch phase"),
    },
    "truncated": {
        "K": (float, None, "kick strength"),
        "Nx": (int, None, "position cells per side"),
        "delta": (float, None, "irrational offset"),
        "n_cut": (int, 4000, "momentum-space cutoff"),
        "window_center": (int, 0, "local window center (0 = n_cut // 2)"),
        "edge_margin": (int, 0, "edge strip width for the leakage guard (0 = n_cut // 10)"),
        "leakage_tol": (float, 0.999, "minimum interior probability"),
        "min_selected": (int, 10, "minimum selected states"),
        "profile_limit": (int, 16, "momentum profiles to export"),
    },
    "compare": {
        "K": (_float_list, None, "comma-separated kick strengths"),
        "Nx": (int, 64, "position cells per side"),
        "Np": (int, 0, "momentum cells (0 = same as Nx)"),
        "M": (int, 1, "resonance numerator"),
        "theta": (float, 0.0, "Bloch phase"),
        "threshold": (float, 0.018, "demarcation threshold fraction"),
        "n_cells": (int, 0, "classical grid (0 = same as Nx)"),
        "n_init": (int, 4000, "classical initial conditions"),
        "n_kicks": (int, 100_000, "classical kicks per trajectory"),
    },
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON config file; flags override its values")
    shared.add_argument("--out", help=f"output directory (default ${_OUTDIR_ENV} or ./kamrotor-out)")
    shared.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    shared.add_argument("--workers", type=int, default=None,
                        help="thread pool size for sweep points; memory grows "
                             "with concurrent eigensolves (default 1)")
    shared.add_argument("--full-scale", action="store_true",
                        help="allow runs above the desk-scale memory budget")

    parser = argparse.ArgumentParser(
        prog="kamrotor",
        description="Kicked-rotor phase-space analysis pipelines")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _SCHEMAS.items():
        p = sub.add_parser(command, parents=[shared])
        for name, (parse, default, help_text) in schema.items():
            flag = "--" + name.replace("_", "-")
            if parse is bool:
                p.add_argument(flag, action="store_true", default=None,
                               dest=name, help=help_text)
            else:
                p.add_argument(flag, type=parse, default=None, dest=name,
                               help=help_text + ("" if default is None
                                                 else f" (default {default})"))
    sub.add_parser("validate", parents=[shared])
    return parser


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def merge_config(command: str, args: argparse.Namespace) -> dict:
    """File values first, explicit flags on top; unknown keys rejected."""
    file_cfg = load_config_file(args.config) if args.config else {}
    file_command = file_cfg.pop("command", None)
    if file_command is not None and file_command != command:
        raise ConfigError(
            f"config file is for command '{file_command}', not '{command}'")
    schema = _SCHEMAS[command]
    unknown = set(file_cfg) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {}
    for name, (parse, default, _) in schema.items():
        value = file_cfg.get(name, default)
        if isinstance(value, str) and parse in (_float_list, _int_list):
            value = parse(value)
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            value = flag_value
        merged[name] = value
    missing = [k for k, v in merged.items() if v is None]
    if missing:
        raise ConfigError(f"missing required parameters: {', '.join(missing)}")
    return merged


def validate_config(command: str, cfg: dict) -> list:
    """Every violated invariant, without running any computation."""
    problems = []

    def check_model(k_value, n_x, n_p, m_value, theta):
        if n_x < 1 or n_p < 1:
            problems.append("N_x and N_p must be positive")
            return
        n = n_x * n_p
        if n % 2 != 0:
            problems.append("N must be even")
        if math.gcd(m_value, n) != 1:
            problems.append("M, N must be coprime")
        if not (k_value >= 0 and math.isfinite(k_value)):
            problems.append("K must be finite and non-negative")
        if not math.isfinite(theta):
            problems.append("theta must be finite")

    if command in ("spectrum", "lengths", "orbit"):
        n_p = cfg["Np"] or cfg["Nx"]
        check_model(cfg["K"], cfg["Nx"], n_p, cfg["M"], cfg["theta"])
        if command == "orbit":
            if cfg["cells"] < 1:
                problems.append("cells must be positive")
            if not (0 < cfg["t_min"] <= cfg["t_max"]):
                problems.append("need 0 < t_min <= t_max")
            if cfg["t_count"] < 1:
                problems.append("t_count must be positive")
        if command == "spectrum":
            for label in cfg["portrait"]:
                if not 0.0 < label <= 1.0:
                    problems.append(f"portrait label {label} outside (0, 1]")
    elif command == "deff":
        if len(cfg["Nx"]) < 4:
            problems.append("need at least 4 N_x values for the dimension fit")
        for n_x in cfg["Nx"]:
            check_model(cfg["K"], n_x, n_x, cfg["M"], cfg["theta"])
        for label in cfg["labels"]:
            if not 0.0 < label <= 1.0:
                problems.append(f"label {label} outside (0, 1]")
    elif command == "classical":
        if cfg["n_cells"] < 2:
            problems.append("n_cells must be at least 2")
        if cfg["n_init"] < 1 or cfg["n_kicks"] < 1:
            problems.append("n_init and n_kicks must be positive")
        if not (cfg["K"] >= 0 and math.isfinite(cfg["K"])):
            problems.append("K must be finite and non-negative")
        if cfg["export_grids"] > cfg["n_init"]:
            problems.append("export_grids exceeds n_init")
    elif command == "generic":
        if cfg["Nx"] < 1:
            problems.append("N_x must be positive")
        if not (-1.0 <= cfg["delta"] < 1.0) or cfg["delta"] < 0:
            problems.append("delta must lie in [0, 1)")
        if cfg["count"] < 1:
            problems.append("count must be positive")
        if cfg["max_dim"] < 2:
            problems.append("max_dim too small")
        if not (cfg["K"] >= 0 and math.isfinite(cfg["K"])):
            problems.append("K must be finite and non-negative")
    elif command == "truncated":
        if cfg["Nx"] < 1:
            problems.append("N_x must be positive")
        if not (0.0 <= cfg["delta"] < 1.0):
            problems.append("delta must lie in [0, 1)")
        n_cut = cfg["n_cut"]
        if n_cut < 8:
            problems.append("n_cut too small")
        center = cfg["window_center"] or n_cut // 2
        n_loc_basis = 3 * cfg["Nx"] * cfg["Nx"]
        if center - n_loc_basis // 2 < 0 or center + (n_loc_basis + 1) // 2 > n_cut:
            problems.append("local cell window does not fit inside the cutoff")
        if not 0.0 < cfg["leakage_tol"] < 1.0:
            problems.append("leakage_tol must lie in (0, 1)")
        if cfg["min_selected"] < 1:
            problems.append("min_selected must be positive")
    elif command == "compare":
        for k_value in cfg["K"]:
            check_model(k_value, cfg["Nx"], cfg["Np"] or cfg["Nx"],
                        cfg["M"], cfg["theta"])
        if not 0.0 < cfg["threshold"] < 1.0:
            problems.append("threshold must lie in (0, 1)")
        if cfg["n_init"] < 1 or cfg["n_kicks"] < 1:
            problems.append("n_init and n_kicks must be positive")
    # deduplicate, preserving first-seen order
    seen, unique = set(), []
    for p in problems:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def _gate_full_scale(dimension: int, full_scale: bool, what: str) -> None:
    if dimension <= _DESK_DIM:
        return
    est_gb = 4.0 * 16.0 * dimension * dimension / 1e9
    if not full_scale:
        raise ConfigError(
            f"{what} dimension {dimension} exceeds the desk-scale budget; "
            f"estimated peak memory ~{est_gb:.1f} GB; rerun with --full-scale")
    print(f"full-scale run: {what} dimension {dimension}, "
          f"estimated peak memory ~{est_gb:.1f} GB", file=sys.stderr)


def _map_jobs(fn, items, workers):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Run:
    """Collects outputs and notes, then writes the manifest."""

    def __init__(self, command: str, cfg: dict, outdir: str):
        self.command = command
        self.cfg = cfg
        self.outdir = outdir
        self.outputs = {}
        self.notes = []
        self.started = _utc_now()
        os.makedirs(outdir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.outdir, name)

    def record(self, name: str, digest: str) -> None:
        self.outputs[name] = digest

    def finish(self) -> str:
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "version": __version__,
            "kernel_backend": kernel_backend(),
            "started_at": self.started,
            "finished_at": _utc_now(),
            "outputs": self.outputs,
            "notes": self.notes,
        }
        serialize.write_json(self.path("manifest.json"), manifest)
        return self.path("manifest.json")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _model(cfg: dict) -> ModelParams:
    return ModelParams(K=cfg["K"], M=cfg["M"], n_x=cfg["Nx"],
                       n_p=cfg["Np"] or cfg["Nx"], theta=cfg["theta"])


def _eigensystem(params: ModelParams, full_scale: bool):
    _gate_full_scale(params.n_states, full_scale, "reduced block")
    eig = diagonalize(build_v(params))
    basis = WannierBasis(n_x=params.n_x, n_p=params.n_p)
    return eig, basis


def _cmd_spectrum(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    params = _model(run.cfg)
    eig, basis = _eigensystem(params, full_scale)
    spec = area_spectrum(eig, basis)
    run.record("area_spectrum.csv",
               serialize.write_area_spectrum(run.path("area_spectrum.csv"), spec))
    for label in run.cfg["portrait"]:
        rank = min(len(spec.areas) - 1, max(0, round(label * len(spec.areas)) - 1))
        state = eig.vectors[:, spec.state_indices[rank]]
        name = f"portrait_{label:.3f}.csv"
        run.record(name, serialize.write_distribution(
            run.path(name), project(basis, state)))


def _cmd_deff(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    sizes = sorted(run.cfg["Nx"])
    _gate_full_scale(max(sizes) ** 2, full_scale, "reduced block")

    def one(n_x):
        params = ModelParams(K=run.cfg["K"], M=run.cfg["M"], n_x=n_x,
                             n_p=n_x, theta=run.cfg["theta"])
        eig = diagonalize(build_v(params))
        return area_spectrum(eig, WannierBasis(n_x=n_x, n_p=n_x))

    spectra = _map_jobs(one, sizes, workers)
    fits = [effective_dimension(spectra, label) for label in run.cfg["labels"]]
    run.record("deff.csv", serialize.write_deff_table(
        run.path("deff.csv"),
        [f.label for f in fits], [f.slope for f in fits],
        [f.deff for f in fits], [f.residual_rms for f in fits]))


def _cmd_lengths(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    params = _model(run.cfg)
    eig, basis = _eigensystem(params, full_scale)
    run.record("cell_lengths.csv", serialize.write_cell_lengths(
        run.path("cell_lengths.csv"), cell_lengths(eig, basis)))


def _cmd_orbit(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    params = _model(run.cfg)
    eig, basis = _eigensystem(params, full_scale)
    areas = orbit_areas_all_cells(eig, basis)
    n_cells = basis.n_states
    if run.cfg["all_cells"]:
        chosen = np.arange(n_cells)
    else:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(n_cells, size=min(run.cfg["cells"], n_cells),
                                    replace=False))
    header = ["X", "P", "area_diagonal"]
    columns = [chosen % basis.n_x, chosen // basis.n_x, areas[chosen]]
    if run.cfg["direct"]:
        v = build_v(params)
        times = default_orbit_times(run.cfg["t_min"], run.cfg["t_max"],
                                    run.cfg["t_count"])

        def one(cell):
            state = basis.row_state(int(cell % basis.n_x), int(cell // basis.n_x))
            return long_time_area_direct(v, basis, state, times)

        header.append("area_direct")
        columns.append(np.array(_map_jobs(one, chosen, workers)))
    run.record("orbit_areas.csv", serialize.write_csv(
        run.path("orbit_areas.csv"), header, zip(*columns)))


def _cmd_classical(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    params = ClassicalParams(K=run.cfg["K"], n_cells=run.cfg["n_cells"],
                             n_init=run.cfg["n_init"], n_kicks=run.cfg["n_kicks"],
                             seed=seed)
    spec = classical_area_spectrum(params)
    run.record("classical_areas.csv", serialize.write_classical_spectrum(
        run.path("classical_areas.csv"), spec))
    points = initial_points(run.cfg["n_init"], seed)
    for i in range(run.cfg["export_grids"]):
        xs, ps = trajectory(points[i, 0], points[i, 1], run.cfg["n_kicks"],
                            run.cfg["K"])
        counts = occupancy_grid(xs, ps, run.cfg["n_cells"])
        name = f"grid_trajectory_{i}.csv"
        run.record(name, serialize.write_phase_grid(run.path(name), counts))
    if run.cfg["diffusion"]:
        est = diffusion_coefficient(run.cfg["K"], seed=seed)
        run.record("diffusion.csv", serialize.write_csv(
            run.path("diffusion.csv"),
            ["K", "diffusion", "quasilinear", "n_used", "n_total"],
            [(run.cfg["K"], est.value, est.quasilinear, est.n_used, est.n_total)]))
    run.notes.append(f"trajectory kernel backend: {kernel_backend()}")


def _cmd_generic(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    approx = rational_sequence(run.cfg["Nx"], run.cfg["delta"], run.cfg["count"])
    realized = [s.n_states for s in approx.entries
                if s.n_states <= run.cfg["max_dim"]]
    if realized:
        _gate_full_scale(max(realized), full_scale, "reduced block")
    for p, q, reason in approx.skipped:
        run.notes.append(f"skipped candidate {p}/{q}: {reason}")
    scan = resonant_scan(approx, run.cfg["K"], theta=run.cfg["theta"],
                         max_dim=run.cfg["max_dim"])
    for step in scan.skipped_dims:
        run.notes.append(
            f"rung {step.index} (N={step.n_states}) above max_dim, not computed")
    for entry in scan.entries:
        name = f"area_spectrum_j{entry.step.index}.csv"
        run.record(name, serialize.write_area_spectrum(run.path(name),
                                                       entry.spectrum))
    run.record("generic_summary.csv", serialize.write_generic_summary(
        run.path("generic_summary.csv"), scan))


def _cmd_truncated(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    cfg = run.cfg
    _gate_full_scale(cfg["n_cut"], full_scale, "truncated operator")
    ts = truncated_spectrum(
        K=cfg["K"], n_x=cfg["Nx"], delta=cfg["delta"], n_cut=cfg["n_cut"],
        window_center=cfg["window_center"] or None,
        leakage_tol=cfg["leakage_tol"],
        edge_margin=cfg["edge_margin"] or None,
        min_selected=cfg["min_selected"])
    run.notes.append(f"{ts.n_selected} eigenstates pass the deep-window selection")
    run.record("truncated_states.csv", serialize.write_truncated_states(
        run.path("truncated_states.csv"), ts))
    if cfg["profile_limit"] > 0:
        run.record("momentum_profiles.csv", serialize.write_momentum_profiles(
            run.path("momentum_profiles.csv"), ts, cfg["profile_limit"]))


def _cmd_compare(run: Run, seed: int, workers: int, full_scale: bool) -> None:
    cfg = run.cfg
    n_x = cfg["Nx"]
    n_p = cfg["Np"] or n_x
    _gate_full_scale(n_x * n_p, full_scale, "reduced block")
    n_cells = cfg["n_cells"] or n_x

    def quantum(k_value):
        params = ModelParams(K=k_value, M=cfg["M"], n_x=n_x, n_p=n_p,
                             theta=cfg["theta"])
        eig = diagonalize(build_v(params))
        spec = area_spectrum(eig, WannierBasis(n_x=n_x, n_p=n_p))
        return demarcation_point(spec, cfg["threshold"])

    def classical(k_value):
        params = ClassicalParams(K=k_value, n_cells=n_cells,
                                 n_init=cfg["n_init"], n_kicks=cfg["n_kicks"],
                                 seed=seed)
        return classical_demarcation(classical_area_spectrum(params),
                                     cfg["threshold"])

    ks = cfg["K"]
    quantum_pts = _map_jobs(quantum, ks, workers)
    classical_pts = _map_jobs(classical, ks, workers)
    run.record("demarcation.csv", serialize.write_csv(
        run.path("demarcation.csv"),
        ["K", "quantum_demarcation", "classical_demarcation"],
        zip(ks, quantum_pts, classical_pts)))


_RUNNERS = {
    "spectrum": _cmd_spectrum,
    "deff": _cmd_deff,
    "lengths": _cmd_lengths,
    "orbit": _cmd_orbit,
    "classical": _cmd_classical,
    "generic": _cmd_generic,
    "truncated": _cmd_truncated,
    "compare": _cmd_compare,
}


def run_command(command: str, cfg: dict, outdir: str, seed: int,
                workers: int, full_scale: bool) -> Run:
    problems = validate_config(command, cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    run = Run(command, cfg, outdir)
    _RUNNERS[command](run, seed, workers, full_scale)
    run.finish()
    return run


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            if not args.config:
                raise ConfigError("validate requires --config")
            file_cfg = load_config_file(args.config)
            command = file_cfg.get("command")
            if command not in _SCHEMAS:
                raise ConfigError(f"config file names no known command "
                                  f"(got {command!r})")
            cfg = merge_config(command, argparse.Namespace(config=args.config))
            problems = validate_config(command, cfg)
            for problem in problems:
                print(problem)
            return 2 if problems else 0

        cfg = merge_config(args.command, args)
        outdir = args.out or os.environ.get(_OUTDIR_ENV) or "kamrotor-out"
        run = run_command(args.command, cfg, outdir,
                          seed=args.seed if args.seed is not None else 0,
                          workers=args.workers if args.workers is not None else 1,
                          full_scale=args.full_scale)
        print(f"wrote {len(run.outputs)} files to {run.outdir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KamrotorError as exc:
        print(f"compute error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
