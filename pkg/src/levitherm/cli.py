"""Command-line interface.

Single-fit subcommands print a result object to stdout; run subcommands
write report files into ``--out-dir`` and print a summary. Failures exit
1 with a machine-readable error object on stdout; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from .constants import pa_from_hpa
from .dataio import (
    ExperimentConfig,
    parse_config,
    read_calibration_csv,
    read_esr_csv,
    read_heating_csv,
    read_psd_csv,
)
from .errors import LevithermError, ParseError, StageError
from .fitting import fit_calibration_alpha, fit_heating
from .physics import EsrSensitivityInputs, esr_sensitivity, radius_from_damping, zfs_slope
from .pipeline import (
    run_ensemble,
    run_particle,
    write_ensemble_outputs,
    write_particle_outputs,
    write_synthetic_inputs,
)
from .spectra import fit_esr, fit_psd

__all__ = ["main"]


def _tols(cfg: ExperimentConfig) -> dict:
    return dict(
        step_tol=cfg.fit_step_tol,
        grad_tol=cfg.fit_grad_tol,
        max_iterations=cfg.fit_max_iterations,
    )


def _base_config(args) -> ExperimentConfig:
    """Config from --config (or defaults) with seed/worker flag overrides."""
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    return _apply_overrides(cfg, args)


def _run_config(args) -> ExperimentConfig:
    """Config from the subcommand's positional file, flags applied on top."""
    return _apply_overrides(parse_config(args.config_file), args)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _flatten(payload, prefix=""):
    rows = []
    if isinstance(payload, dict):
        for key in sorted(payload):
            rows.extend(_flatten(payload[key], f"{prefix}{key}."))
    elif isinstance(payload, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in payload):
            rows.append((prefix[:-1], ";".join(str(v) for v in payload)))
        else:
            for i, v in enumerate(payload):
                rows.extend(_flatten(v, f"{prefix}{i}."))
    else:
        rows.append((prefix[:-1], payload))
    return rows


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("key,value")
        for key, value in _flatten(payload):
            print(f"{key},{value}")


def _error_object(exc: Exception) -> dict:
    obj = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, StageError):
        obj["stage"] = exc.stage
        if exc.input_name:
            obj["input"] = exc.input_name
    if isinstance(exc, ParseError):
        if exc.path is not None:
            obj["path"] = exc.path
        if exc.line is not None:
            obj["line"] = exc.line
    return obj


# --- subcommand handlers ----------------------------------------------------------


def _cmd_esr_fit(args) -> dict:
    cfg = _base_config(args)
    spec = read_esr_csv(args.file)
    fit = fit_esr(spec, **_tols(cfg))
    p = fit.params
    return {
        "file": args.file,
        "d_center_hz": p.d_center,
        "e_split_hz": p.e_split,
        "f_minus_hz": p.f_minus,
        "f_plus_hz": p.f_plus,
        "sigma_d_hz": fit.sigma_d,
        "contrast_minus": p.contrast_minus,
        "contrast_plus": p.contrast_plus,
        "width_minus_hz": p.width_minus,
        "width_plus_hz": p.width_plus,
        "base_rate_hz": p.base_rate,
        "single_dip": fit.single_dip,
        "iterations": fit.fit.iterations,
    }


def _cmd_psd_fit(args) -> dict:
    cfg = _base_config(args)
    psd = read_psd_csv(args.file)
    fit = fit_psd(psd, **_tols(cfg))
    out = {
        "file": args.file,
        "amplitude_m2_hz": fit.amplitude,
        "resonance_hz": fit.resonance_omega / (2.0 * math.pi),
        "damping_gamma": fit.damping_gamma,
        "iterations": fit.fit.iterations,
    }
    if args.pressure_hpa is not None:
        pressure = pa_from_hpa(args.pressure_hpa)
        out["pressure_pa"] = pressure
        out["r_hydro_m"] = radius_from_damping(
            fit.damping_gamma, cfg.gas(pressure), cfg.density
        )
    return out


def _cmd_calibrate(args) -> dict:
    cfg = _base_config(args)
    t_set, d_hz = read_calibration_csv(args.table)
    result = fit_calibration_alpha(t_set, d_hz, poly=cfg.poly(), **_tols(cfg))
    return {
        "table": args.table,
        "alpha": result.alpha,
        "alpha_stderr": result.fit.stderr("alpha"),
        "a0_hz": result.a0,
        "a0_stderr_hz": result.fit.stderr("a0"),
        "d_strain_hz": result.d_strain,
        "n_points": int(len(t_set)),
        "iterations": result.fit.iterations,
    }


def _cmd_heating_fit(args) -> dict:
    cfg = _base_config(args)
    intensity, pressure, d_hz, sigma_d = read_heating_csv(args.table)
    result = fit_heating(
        intensity, pressure, d_hz, sigma_d=sigma_d, poly=cfg.poly(), gas=cfg.gas(), **_tols(cfg)
    )
    return {
        "table": args.table,
        "beta_heat": result.beta_heat,
        "beta_stderr": result.fit.stderr("beta_heat"),
        "d_strain_hz": result.d_strain,
        "d_strain_stderr_hz": result.fit.stderr("d_strain"),
        "fitted_temperatures_k": [float(t) for t in result.fitted_temperatures],
        "iterations": result.fit.iterations,
    }


def _cmd_particle(args) -> dict:
    cfg = _run_config(args)
    analysis = run_particle(cfg)
    files = write_particle_outputs(args.out_dir, analysis)
    return {
        "out_dir": args.out_dir,
        "files": sorted(os.path.basename(f) for f in files),
        "beta_heat": analysis.beta_heat,
        "d_strain_hz": analysis.d_strain,
        "r_hydro_m": analysis.r_hydro,
        "sigma_abs_m2": analysis.sigma_abs,
        "sigma_abs_uncertainty_m2": analysis.sigma_abs_uncertainty,
    }


def _cmd_ensemble(args) -> dict:
    cfg = _run_config(args)
    result = run_ensemble(cfg)
    files = write_ensemble_outputs(args.out_dir, result)
    fixed3 = result.comparison.fixed_three
    return {
        "out_dir": args.out_dir,
        "files": sorted(os.path.basename(f) for f in files),
        "n_records": len(result.records),
        "free_exponent": result.comparison.free.exponent,
        "fixed_n3_amplitude": fixed3.amplitude,
        "a_plus": fixed3.a_plus,
        "a_minus": fixed3.a_minus,
        "eps_imag_center": result.eps_imag_center,
        "bulk_absorption_per_cm_center": result.bulk_per_m_center / 100.0,
    }


def _cmd_synth(args) -> dict:
    cfg = _run_config(args)
    files = write_synthetic_inputs(args.out_dir, cfg)
    return {
        "out_dir": args.out_dir,
        "files": sorted(os.path.basename(f) for f in files),
        "seed": cfg.seed,
    }


def _cmd_sensitivity(args) -> dict:
    cfg = _base_config(args)
    if args.temperature_k is not None:
        slope = zfs_slope(cfg.poly(), args.temperature_k)
    else:
        slope = args.slope_hz_per_k
    inputs = EsrSensitivityInputs(
        linewidth=args.linewidth_hz,
        contrast=args.contrast,
        count_rate=args.rate_hz,
        dwell_per_point=args.dwell_s,
    )
    eta_t, resolution = esr_sensitivity(inputs, slope)
    return {
        "eta_t_k_per_sqrt_hz": eta_t,
        "resolution_k": resolution,
        "linewidth_hz": args.linewidth_hz,
        "contrast": args.contrast,
        "rate_hz": args.rate_hz,
        "slope_hz_per_k": slope,
        "dwell_s": args.dwell_s,
    }


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument(
        "--config", default=None, help="experiment config file for constants and tolerances"
    )
    common.add_argument("--out-dir", default=".", help="directory for report files")
    common.add_argument(
        "--format", choices=("json", "csv"), default="json", help="stdout format"
    )
    common.add_argument(
        "--workers", type=int, default=None, help="process-pool size for ensemble runs"
    )

    parser = argparse.ArgumentParser(
        prog="levitherm",
        description="Levitated-nanodiamond thermometry: spectrum fits, heat "
        "balance, and ensemble absorption analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("esr-fit", parents=[common], help="fit a dip spectrum CSV")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_esr_fit)

    p = sub.add_parser("psd-fit", parents=[common], help="fit a motional spectrum CSV")
    p.add_argument("file")
    p.add_argument(
        "--pressure-hpa",
        type=float,
        default=None,
        help="gas pressure (hPa) to also invert the damping into a radius",
    )
    p.set_defaults(handler=_cmd_psd_fit)

    p = sub.add_parser("calibrate", parents=[common], help="fit the splitting calibration table")
    p.add_argument("table")
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("heating-fit", parents=[common], help="fit a heating table CSV")
    p.add_argument("table")
    p.set_defaults(handler=_cmd_heating_fit)

    p = sub.add_parser("particle", parents=[common], help="analyze one particle from files")
    p.add_argument("config_file")
    p.set_defaults(handler=_cmd_particle)

    p = sub.add_parser("ensemble", parents=[common], help="synthesize and analyze a batch")
    p.add_argument("config_file")
    p.set_defaults(handler=_cmd_ensemble)

    p = sub.add_parser("synth", parents=[common], help="generate one particle's input files")
    p.add_argument("config_file")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser(
        "sensitivity", parents=[common], help="shot-noise temperature sensitivity"
    )
    p.add_argument("--linewidth-hz", type=float, default=10e6)
    p.add_argument("--contrast", type=float, default=0.07)
    p.add_argument("--rate-hz", type=float, default=2e5)
    p.add_argument("--slope-hz-per-k", type=float, default=74e3)
    p.add_argument("--dwell-s", type=float, default=1.5)
    p.add_argument(
        "--temperature-k",
        type=float,
        default=None,
        help="derive the slope from the splitting polynomial at this temperature",
    )
    p.set_defaults(handler=_cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else 2)
    try:
        payload = args.handler(args)
    except LevithermError as exc:
        print(json.dumps({"error": _error_object(exc)}, sort_keys=True))
        return 1
    except OSError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}, sort_keys=True))
        return 1
    _emit(payload, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
