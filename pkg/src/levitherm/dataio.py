"""File formats: experiment configuration and the five CSV table schemas.

All parsers report the file path and line number on failure. Writers
emit shortest round-trip float representations so that emit-then-ingest
reproduces values exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParseError
from .physics import GasConditions, ParticleGeometry, ZfsPolynomial
from .spectra import EsrSpectrum, MotionPsd


@dataclass(frozen=True)
class EnsembleCondition:
    """One heating measurement condition bound to its spectrum file."""

    intensity: float
    pressure: float
    path: str


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run configuration.

    Every field carries the experiment-scale default, so an empty config
    file is a valid run; reports echo the resolved values.
    """

    # ambient and gas
    t0: float = 294.0
    c_bar: float = 503.0
    gamma: float = 1.4
    alpha_acc: float = 1.0
    density: float = 3500.0
    molar_mass: float = 0.02897
    # optics
    wavelength: float = 1550e-9
    eps_real: float = 5.7
    # splitting polynomial
    zfs_a0: float = 2.8697e9
    zfs_a1: float = 9.7e4
    zfs_a2: float = -3.7e2
    zfs_a3: float = 0.17
    # reproducibility
    seed: int = 0
    workers: int = 1
    # ensemble synthesis
    particle_count: int = 46
    radius_min: float = 10e-9
    radius_max: float = 300e-9
    true_a_h: float = 4e3
    sigma_log: float = 1.27
    d_strain_spread: float = 3e6
    # single-particle synthesis truth
    true_sigma_abs: float = 4e-18
    true_radius: float = 100e-9
    true_d_strain: float = 3e6
    # spin-resonance scan
    esr_scan_points: int = 200
    esr_scan_span: float = 80e6
    esr_dwell: float = 1.5
    esr_contrast: float = 0.07
    esr_width: float = 10e6
    esr_rate: float = 2e5
    esr_e_split: float = 5e6
    # motional spectrum
    psd_averages: int = 200
    psd_points: int = 2048
    psd_resonance_hz: float = 250e3
    psd_pressure_pa: float = 1500.0
    # measurement grid
    intensities_w_m2: tuple[float, ...] = (0.5e10, 1e10, 2e10)
    pressures_pa: tuple[float, ...] = (2000.0, 3000.0, 5000.0)
    noiseless: bool = False
    # stability guards for synthetic conditions
    max_temperature: float = 550.0
    min_pressure_pa: float = 1500.0
    # fit tolerances
    fit_step_tol: float = 1e-10
    fit_grad_tol: float = 1e-12
    fit_max_iterations: int = 200
    # particle-run inputs
    psd_path: str = ""
    conditions: tuple[EnsembleCondition, ...] = ()

    def __post_init__(self):
        if self.radius_min <= 0.0 or self.radius_max <= self.radius_min:
            raise DomainError("need 0 < radius_min < radius_max")
        if self.particle_count < 1:
            raise DomainError(f"particle_count must be at least 1, got {self.particle_count}")
        if self.max_temperature <= self.t0:
            raise DomainError("max_temperature must exceed the ambient temperature")
        if self.workers < 1:
            raise DomainError(f"workers must be at least 1, got {self.workers}")
        if self.esr_scan_points < 8:
            raise DomainError("esr_scan_points must be at least 8")
        if self.psd_points < 8:
            raise DomainError("psd_points must be at least 8")

    def gas(self, pressure: float | None = None) -> GasConditions:
        return GasConditions(
            p_gas=self.psd_pressure_pa if pressure is None else pressure,
            t0=self.t0,
            c_bar=self.c_bar,
            gamma=self.gamma,
            alpha_acc=self.alpha_acc,
            molar_mass=self.molar_mass,
        )

    def poly(self) -> ZfsPolynomial:
        return ZfsPolynomial(a0=self.zfs_a0, a1=self.zfs_a1, a2=self.zfs_a2, a3=self.zfs_a3)

    def geometry(self, r_hydro: float) -> ParticleGeometry:
        return ParticleGeometry(r_hydro=r_hydro, density=self.density)

    def to_dict(self) -> dict:
        out = {}
        for f_ in dataclasses.fields(self):
            v = getattr(self, f_.name)
            if f_.name == "conditions":
                v = [dataclasses.asdict(c) for c in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f_.name] = v
        return out


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


_CONFIG_PARSERS = {
    float: float,
    int: int,
    bool: _parse_bool,
    str: str,
    tuple: _parse_float_tuple,
}

_CONFIG_TYPES = {
    "t0": float, "c_bar": float, "gamma": float, "alpha_acc": float,
    "density": float, "molar_mass": float, "wavelength": float, "eps_real": float,
    "zfs_a0": float, "zfs_a1": float, "zfs_a2": float, "zfs_a3": float,
    "seed": int, "workers": int,
    "particle_count": int, "radius_min": float, "radius_max": float,
    "true_a_h": float, "sigma_log": float, "d_strain_spread": float,
    "true_sigma_abs": float, "true_radius": float, "true_d_strain": float,
    "esr_scan_points": int, "esr_scan_span": float, "esr_dwell": float,
    "esr_contrast": float, "esr_width": float, "esr_rate": float, "esr_e_split": float,
    "psd_averages": int, "psd_points": int, "psd_resonance_hz": float, "psd_pressure_pa": float,
    "intensities_w_m2": tuple, "pressures_pa": tuple, "noiseless": bool,
    "max_temperature": float, "min_pressure_pa": float,
    "fit_step_tol": float, "fit_grad_tol": float, "fit_max_iterations": int,
    "psd_path": str,
}


def parse_config(path: str) -> ExperimentConfig:
    """Read a line-oriented ``key = value`` config file.

    ``#`` starts a comment, blank lines are skipped, unknown keys and
    duplicate scalar keys are errors. Repeated ``condition`` lines
    accumulate; their value is ``intensity_w_m2, pressure_pa, path``.
    Relative paths resolve against the config file's directory.
    """
    base_dir = os.path.dirname(os.path.abspath(path))
    overrides: dict = {}
    conditions: list[EnsembleCondition] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}", path=path) from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", path=path, line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "condition":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise ParseError(
                    "condition needs 'intensity_w_m2, pressure_pa, path'", path=path, line=lineno
                )
            try:
                intensity, pressure = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ParseError(f"bad condition numbers: {exc}", path=path, line=lineno) from exc
            conditions.append(
                EnsembleCondition(
                    intensity=intensity,
                    pressure=pressure,
                    path=_resolve(parts[2], base_dir),
                )
            )
            continue
        if key not in _CONFIG_TYPES:
            raise ParseError(f"unknown config key {key!r}", path=path, line=lineno)
        if key in overrides:
            raise ParseError(f"duplicate config key {key!r}", path=path, line=lineno)
        parser = _CONFIG_PARSERS[_CONFIG_TYPES[key]]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", path=path, line=lineno) from exc
        if key == "psd_path":
            parsed = _resolve(parsed, base_dir)
        overrides[key] = parsed

    if conditions:
        overrides["conditions"] = tuple(conditions)
    try:
        return ExperimentConfig(**overrides)
    except DomainError as exc:
        raise ParseError(f"invalid configuration: {exc}", path=path) from exc


def _resolve(p: str, base_dir: str) -> str:
    return p if os.path.isabs(p) or not p else os.path.join(base_dir, p)


def write_config(path: str, config: ExperimentConfig) -> None:
    """Write a config file that parses back to ``config``."""
    lines = []
    for name in _CONFIG_TYPES:
        v = getattr(config, name)
        if isinstance(v, tuple):
            rendered = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            rendered = "true" if v else "false"
        elif isinstance(v, float):
            rendered = repr(v)
        else:
            rendered = str(v)
        lines.append(f"{name} = {rendered}\n")
    for cond in config.conditions:
        lines.append(f"condition = {cond.intensity!r}, {cond.pressure!r}, {cond.path}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)


# --- ensemble records --------------------------------------------------------


@dataclass(frozen=True)
class EnsembleRecord:
    """Per-particle analysis outcome.

    Uncertainties are optional: the table schema carries only the four
    value columns, uncertainties travel in the structured report.
    """

    particle_id: int
    beta_heat: float
    r_hydro: float
    sigma_abs: float
    beta_uncertainty: float | None = None
    sigma_abs_uncertainty: float | None = None

    def __post_init__(self):
        if self.beta_heat < 0.0:
            raise DomainError(f"beta_heat must be non-negative, got {self.beta_heat}")
        if self.r_hydro <= 0.0 or self.sigma_abs <= 0.0:
            raise DomainError("r_hydro and sigma_abs must be positive")


# --- CSV helpers --------------------------------------------------------------


def _float_cell(row: list[str], col: int, path: str, lineno: int, header: str) -> float:
    try:
        return float(row[col])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad {header} value {row[col] if col < len(row) else '<missing>'!r}",
                         path=path, line=lineno) from exc


def _read_rows(path: str, expected_header: list[str]):
    """Yield (lineno, row) for data rows; validates the header line.

    Leading ``#`` lines are metadata/comments and are returned separately
    as a dict of key=value pairs found before the header.
    """
    meta: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", path=path) from exc
    with fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = next(csv.reader([line]))
            if not header_seen:
                got = [c.strip() for c in cells]
                if got != expected_header:
                    raise ParseError(
                        f"expected header {','.join(expected_header)!r}, got {','.join(got)!r}",
                        path=path,
                        line=lineno,
                    )
                header_seen = True
                continue
            if len(cells) != len(expected_header):
                raise ParseError(
                    f"expected {len(expected_header)} columns, got {len(cells)}",
                    path=path,
                    line=lineno,
                )
            rows.append((lineno, cells))
        if not header_seen:
            raise ParseError("missing header line", path=path)
    return meta, rows


def read_esr_csv(path: str) -> EsrSpectrum:
    """Ingest a dip spectrum: header frequency_hz,counts plus # dwell_s=."""
    meta, rows = _read_rows(path, ["frequency_hz", "counts"])
    if "dwell_s" not in meta:
        raise ParseError("missing '# dwell_s=<value>' metadata line", path=path)
    try:
        dwell = float(meta["dwell_s"])
    except ValueError as exc:
        raise ParseError(f"bad dwell_s value {meta['dwell_s']!r}", path=path) from exc
    freqs, counts = [], []
    prev = None
    for lineno, row in rows:
        f = _float_cell(row, 0, path, lineno, "frequency_hz")
        c = _float_cell(row, 1, path, lineno, "counts")
        if prev is not None and f <= prev:
            raise ParseError(f"frequencies must be strictly increasing, got {f!r}",
                             path=path, line=lineno)
        if c < 0.0:
            raise ParseError(f"counts must be non-negative, got {c!r}", path=path, line=lineno)
        prev = f
        freqs.append(f)
        counts.append(c)
    if not freqs:
        raise ParseError("no data rows", path=path)
    return EsrSpectrum(frequencies=np.array(freqs), counts=np.array(counts), dwell_per_point=dwell)


def write_esr_csv(path: str, spec: EsrSpectrum) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# dwell_s={spec.dwell_per_point!r}\n")
        fh.write("frequency_hz,counts\n")
        for f, c in zip(spec.frequencies, spec.counts):
            fh.write(f"{float(f)!r},{float(c)!r}\n")


def read_psd_csv(path: str) -> MotionPsd:
    _, rows = _read_rows(path, ["frequency_hz", "psd_m2_per_hz"])
    freqs, values = [], []
    prev = None
    for lineno, row in rows:
        f = _float_cell(row, 0, path, lineno, "frequency_hz")
        v = _float_cell(row, 1, path, lineno, "psd_m2_per_hz")
        if prev is not None and f <= prev:
            raise ParseError(f"frequencies must be strictly increasing, got {f!r}",
                             path=path, line=lineno)
        if v < 0.0:
            raise ParseError(f"psd values must be non-negative, got {v!r}", path=path, line=lineno)
        prev = f
        freqs.append(f)
        values.append(v)
    if not freqs:
        raise ParseError("no data rows", path=path)
    return MotionPsd(frequencies=np.array(freqs), psd_values=np.array(values))


def write_psd_csv(path: str, psd: MotionPsd) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frequency_hz,psd_m2_per_hz\n")
        for f, v in zip(psd.frequencies, psd.psd_values):
            fh.write(f"{float(f)!r},{float(v)!r}\n")


def read_heating_csv(path: str):
    """Heating table -> (intensity, pressure, d, sigma_d) arrays."""
    _, rows = _read_rows(path, ["intensity_w_m2", "pressure_pa", "d_hz", "sigma_d_hz"])
    cols = ([], [], [], [])
    headers = ("intensity_w_m2", "pressure_pa", "d_hz", "sigma_d_hz")
    for lineno, row in rows:
        vals = [_float_cell(row, j, path, lineno, headers[j]) for j in range(4)]
        if vals[0] < 0.0:
            raise ParseError("intensity must be non-negative", path=path, line=lineno)
        if vals[1] <= 0.0:
            raise ParseError("pressure must be positive", path=path, line=lineno)
        if vals[3] <= 0.0:
            raise ParseError("sigma_d must be positive", path=path, line=lineno)
        for j in range(4):
            cols[j].append(vals[j])
    if not cols[0]:
        raise ParseError("no data rows", path=path)
    return tuple(np.array(c) for c in cols)


def write_heating_csv(path: str, intensity, pressure, d_hz, sigma_d) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("intensity_w_m2,pressure_pa,d_hz,sigma_d_hz\n")
        for i, p, d, s in zip(intensity, pressure, d_hz, sigma_d):
            fh.write(f"{float(i)!r},{float(p)!r},{float(d)!r},{float(s)!r}\n")


def read_calibration_csv(path: str):
    """Calibration table -> (t_set, d) arrays."""
    _, rows = _read_rows(path, ["t_set_k", "d_hz"])
    t_set, d = [], []
    for lineno, row in rows:
        t = _float_cell(row, 0, path, lineno, "t_set_k")
        if t <= 0.0:
            raise ParseError("t_set must be positive", path=path, line=lineno)
        t_set.append(t)
        d.append(_float_cell(row, 1, path, lineno, "d_hz"))
    if not t_set:
        raise ParseError("no data rows", path=path)
    return np.array(t_set), np.array(d)


def write_calibration_csv(path: str, t_set, d_hz) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t_set_k,d_hz\n")
        for t, d in zip(t_set, d_hz):
            fh.write(f"{float(t)!r},{float(d)!r}\n")


def read_ensemble_csv(path: str) -> list[EnsembleRecord]:
    _, rows = _read_rows(path, ["particle_id", "beta_heat", "r_hydro_m", "sigma_abs_m2"])
    records = []
    for lineno, row in rows:
        try:
            pid = int(row[0])
        except ValueError as exc:
            raise ParseError(f"bad particle_id {row[0]!r}", path=path, line=lineno) from exc
        beta = _float_cell(row, 1, path, lineno, "beta_heat")
        r = _float_cell(row, 2, path, lineno, "r_hydro_m")
        s = _float_cell(row, 3, path, lineno, "sigma_abs_m2")
        try:
            records.append(EnsembleRecord(particle_id=pid, beta_heat=beta, r_hydro=r, sigma_abs=s))
        except DomainError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    if not records:
        raise ParseError("no data rows", path=path)
    return records


def write_ensemble_csv(path: str, records: Sequence[EnsembleRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("particle_id,beta_heat,r_hydro_m,sigma_abs_m2\n")
        for rec in records:
            fh.write(
                f"{rec.particle_id},{rec.beta_heat!r},{rec.r_hydro!r},{rec.sigma_abs!r}\n"
            )
