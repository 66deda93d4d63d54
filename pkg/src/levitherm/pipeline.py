"""End-to-end runs: synthetic particles, file-driven analyses, ensembles.

Synthesis draws per-particle truths and instrument records from a seeded
generator tree; analysis inverts the records back through the spectral
fits and the heat-balance estimators. Every output is a pure function of
(config, input files, seed): per-particle randomness derives only from
the run seed and the particle index, so serial and parallel executions
of the same config produce identical results.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import (
    EnsembleRecord,
    ExperimentConfig,
    read_esr_csv,
    read_psd_csv,
    write_config,
    write_ensemble_csv,
    write_esr_csv,
    write_psd_csv,
)
from .errors import DomainError, FitFailure, LevithermError, StageError
from .fitting import ExponentComparison, HeatingFitResult, compare_exponents, fit_heating
from .physics import (
    DielectricConstant,
    beta_from_sigma,
    bulk_absorption_coefficient,
    damping_rate,
    epsilon_imag_from_sigma_ratio,
    eval_zfs,
    radius_from_damping,
    sigma_from_beta_radius,
)
from .spectra import (
    EsrFitResult,
    EsrLineParams,
    EsrSpectrum,
    MotionPsd,
    OscillatorParams,
    PsdFitResult,
    fit_esr,
    fit_psd,
    psd_model,
    synthesize_esr,
    synthesize_psd,
)

__all__ = [
    "ParticleTruth",
    "SyntheticParticle",
    "ParticleAnalysis",
    "EnsembleResult",
    "measurement_grid",
    "synthesize_particle",
    "analyze_particle",
    "run_particle",
    "run_ensemble",
    "write_particle_outputs",
    "write_ensemble_outputs",
    "write_synthetic_inputs",
]


# --- synthesis ------------------------------------------------------------------


@dataclass(frozen=True)
class ParticleTruth:
    """Ground-truth values behind one synthetic particle."""

    sigma_abs: float
    r_hydro: float
    d_strain: float
    beta_heat: float


@dataclass(frozen=True)
class SyntheticParticle:
    """One particle's synthetic measurement set.

    ``conditions`` holds (intensity W/m^2, pressure Pa) per spectrum, in
    the same order as ``spectra``; ``psd_pressure`` is the gas pressure at
    which the motional spectrum was taken.
    """

    truth: ParticleTruth
    conditions: tuple[tuple[float, float], ...]
    spectra: tuple[EsrSpectrum, ...]
    psd: MotionPsd
    psd_pressure: float


def measurement_grid(config: ExperimentConfig) -> tuple[tuple[float, float], ...]:
    """All (intensity, pressure) pairs of the configured heating grid.

    Pressure-major order; pressures below the stability floor are
    rejected rather than clamped.
    """
    for p in config.pressures_pa:
        if p < config.min_pressure_pa:
            raise DomainError(
                f"pressure {p} Pa below the stability floor {config.min_pressure_pa} Pa"
            )
    if config.psd_pressure_pa < config.min_pressure_pa:
        raise DomainError(
            f"psd_pressure_pa {config.psd_pressure_pa} Pa below the stability floor "
            f"{config.min_pressure_pa} Pa"
        )
    return tuple((i, p) for p in config.pressures_pa for i in config.intensities_w_m2)


def _particle_children(config: ExperimentConfig, index: int, n_conditions: int):
    # one child stream per stochastic ingredient: truth draw, motional
    # spectrum, then one per heating condition; spawn_key indexing makes
    # the tree identical whether particles run serially or in a pool
    root = np.random.SeedSequence(config.seed, spawn_key=(index,))
    return root.spawn(n_conditions + 2)


def _draw_truth(config: ExperimentConfig, seed) -> ParticleTruth:
    rng = np.random.default_rng(seed)
    r = math.exp(rng.uniform(math.log(config.radius_min), math.log(config.radius_max)))
    scatter = float(rng.normal(0.0, config.sigma_log))
    d_strain = float(rng.normal(0.0, config.d_strain_spread))
    sigma_abs = config.true_a_h * r**3 * math.exp(scatter)
    beta = beta_from_sigma(sigma_abs, config.geometry(r), config.gas())
    return ParticleTruth(sigma_abs=sigma_abs, r_hydro=r, d_strain=d_strain, beta_heat=beta)


def synthesize_particle(
    config: ExperimentConfig,
    index: int = 0,
    truth: ParticleTruth | None = None,
    target_rise: float | None = None,
) -> SyntheticParticle:
    """Generate one particle's spin-resonance scans and motional spectrum.

    Without an explicit ``truth`` the particle is drawn from the ensemble
    distributions (radius log-uniform, cross-section a_h * r^3 with
    lognormal scatter). ``target_rise`` rescales the configured
    intensities so the hottest condition sits at exactly that temperature
    rise; by default they are only capped to keep the internal
    temperature at or below ``config.max_temperature``.
    """
    grid = measurement_grid(config)
    children = _particle_children(config, index, len(grid))
    if truth is None:
        truth = _draw_truth(config, children[0])
    poly = config.poly()

    max_q = max(i / p for i, p in grid)
    if target_rise is not None:
        if not 0.0 < target_rise <= config.max_temperature - config.t0:
            raise DomainError(
                f"target_rise must be in (0, {config.max_temperature - config.t0}] K"
            )
        scale = target_rise / (truth.beta_heat * max_q)
    else:
        scale = min(1.0, (config.max_temperature - config.t0) / (truth.beta_heat * max_q))

    conditions = tuple((i * scale, p) for i, p in grid)
    spectra = []
    for j, (intensity, pressure) in enumerate(conditions):
        t_int = config.t0 + truth.beta_heat * intensity / pressure
        d_center = eval_zfs(poly, t_int) + truth.d_strain
        line = EsrLineParams(
            d_center=d_center,
            e_split=config.esr_e_split,
            contrast_minus=config.esr_contrast,
            contrast_plus=config.esr_contrast,
            width_minus=config.esr_width,
            width_plus=config.esr_width,
            base_rate=config.esr_rate,
        )
        scan = np.linspace(
            d_center - config.esr_scan_span / 2.0,
            d_center + config.esr_scan_span / 2.0,
            config.esr_scan_points,
        )
        spectra.append(
            synthesize_esr(
                line,
                scan,
                dwell=config.esr_dwell,
                seed=children[2 + j],
                shot_noise=not config.noiseless,
            )
        )

    gas_psd = config.gas()
    osc = OscillatorParams(
        resonance_omega=2.0 * math.pi * config.psd_resonance_hz,
        damping_gamma=damping_rate(truth.r_hydro, gas_psd, config.density),
        mass=config.geometry(truth.r_hydro).mass,
        temperature_cm=config.t0,
    )
    psd_grid = np.linspace(
        config.psd_resonance_hz / 3.0,
        config.psd_resonance_hz * 5.0 / 3.0,
        config.psd_points,
    )
    if config.noiseless:
        psd = MotionPsd(frequencies=psd_grid, psd_values=psd_model(osc, psd_grid))
    else:
        psd = synthesize_psd(osc, psd_grid, n_averages=config.psd_averages, seed=children[1])
    return SyntheticParticle(
        truth=truth,
        conditions=conditions,
        spectra=tuple(spectra),
        psd=psd,
        psd_pressure=config.psd_pressure_pa,
    )


# --- single-particle analysis ---------------------------------------------------


@dataclass(frozen=True)
class ParticleAnalysis:
    """Everything inferred about one particle, with inputs kept for reporting."""

    conditions: tuple[tuple[float, float], ...]
    spectra: tuple[EsrSpectrum, ...]
    psd: MotionPsd
    psd_pressure: float
    esr_fits: tuple[EsrFitResult, ...]
    heating: HeatingFitResult
    psd_fit: PsdFitResult
    beta_heat: float
    beta_uncertainty: float | None
    d_strain: float
    d_strain_uncertainty: float | None
    r_hydro: float
    r_uncertainty: float | None
    sigma_abs: float
    sigma_abs_uncertainty: float | None

    def record(self, particle_id: int) -> EnsembleRecord:
        return EnsembleRecord(
            particle_id=particle_id,
            beta_heat=self.beta_heat,
            r_hydro=self.r_hydro,
            sigma_abs=self.sigma_abs,
            beta_uncertainty=self.beta_uncertainty,
            sigma_abs_uncertainty=self.sigma_abs_uncertainty,
        )

    def to_dict(self) -> dict:
        esr = []
        for (intensity, pressure), f in zip(self.conditions, self.esr_fits):
            esr.append(
                {
                    "intensity_w_m2": float(intensity),
                    "pressure_pa": float(pressure),
                    "d_center_hz": float(f.params.d_center),
                    "e_split_hz": float(f.params.e_split),
                    "sigma_d_hz": float(f.sigma_d),
                    "contrast_minus": float(f.params.contrast_minus),
                    "contrast_plus": float(f.params.contrast_plus),
                    "width_minus_hz": float(f.params.width_minus),
                    "width_plus_hz": float(f.params.width_plus),
                    "base_rate_hz": float(f.params.base_rate),
                    "single_dip": bool(f.single_dip),
                    "iterations": int(f.fit.iterations),
                }
            )
        return {
            "beta_heat": float(self.beta_heat),
            "beta_uncertainty": _opt(self.beta_uncertainty),
            "d_strain_hz": float(self.d_strain),
            "d_strain_uncertainty_hz": _opt(self.d_strain_uncertainty),
            "r_hydro_m": float(self.r_hydro),
            "r_uncertainty_m": _opt(self.r_uncertainty),
            "sigma_abs_m2": float(self.sigma_abs),
            "sigma_abs_uncertainty_m2": _opt(self.sigma_abs_uncertainty),
            "psd_pressure_pa": float(self.psd_pressure),
            "esr": esr,
            "heating": {
                "fitted_temperatures_k": [float(t) for t in self.heating.fitted_temperatures],
                "iterations": int(self.heating.fit.iterations),
                "message": self.heating.fit.message,
            },
            "psd": {
                "amplitude_m2_hz": float(self.psd_fit.amplitude),
                "resonance_hz": float(self.psd_fit.resonance_omega / (2.0 * math.pi)),
                "damping_gamma": float(self.psd_fit.damping_gamma),
                "iterations": int(self.psd_fit.fit.iterations),
            },
        }


def _opt(v: float | None) -> float | None:
    return None if v is None else float(v)


def _maybe_stderr(fit, name: str) -> float | None:
    try:
        return fit.stderr(name)
    except FitFailure:
        return None


def _transport_uncertainties(
    heating: HeatingFitResult, psd_fit: PsdFitResult, r: float, sigma_abs: float
) -> tuple[float | None, float | None, float | None]:
    """First-order propagation into (beta, radius, cross-section) errors.

    r = const / gamma and sigma = const * beta * r^2, with the heating and
    damping fits independent.
    """
    beta_err = _maybe_stderr(heating.fit, "beta_heat")
    gamma_err = _maybe_stderr(psd_fit.fit, "damping_gamma")
    r_err = None if gamma_err is None else r * gamma_err / psd_fit.damping_gamma
    if beta_err is None or r_err is None or heating.beta_heat <= 0.0:
        sigma_err = None
    else:
        sigma_err = sigma_abs * math.sqrt(
            (beta_err / heating.beta_heat) ** 2 + (2.0 * r_err / r) ** 2
        )
    return beta_err, r_err, sigma_err


def analyze_particle(
    config: ExperimentConfig,
    conditions: tuple[tuple[float, float], ...],
    spectra: tuple[EsrSpectrum, ...],
    psd: MotionPsd,
    psd_pressure: float | None = None,
) -> ParticleAnalysis:
    """Run the full inversion chain on one particle's measurements.

    Per-condition dip fits give the splitting and its shot-noise
    uncertainty, the joint heat-balance fit gives the heating coefficient
    and strain offset, the motional spectrum gives the damping rate and
    hence the hydrodynamic radius, and the two combine into the
    absorption cross-section. First-order covariance transport propagates
    the fit uncertainties into the radius and cross-section.
    """
    if len(conditions) != len(spectra):
        raise DomainError("conditions and spectra must pair up one to one")
    if len(conditions) < 4:
        raise DomainError(f"need at least 4 heating conditions, got {len(conditions)}")
    tols = dict(
        step_tol=config.fit_step_tol,
        grad_tol=config.fit_grad_tol,
        max_iterations=config.fit_max_iterations,
    )
    esr_fits = tuple(fit_esr(s, **tols) for s in spectra)
    d_hz = np.array([f.params.d_center for f in esr_fits])
    sigma_d = np.array([f.sigma_d for f in esr_fits])
    # exact synthetic data can drive the shot-noise estimate to zero;
    # fall back to an unweighted fit rather than infinite weights
    weights = sigma_d if np.all(sigma_d > 0.0) else None
    intensity = np.array([c[0] for c in conditions])
    pressure = np.array([c[1] for c in conditions])
    heating = fit_heating(
        intensity, pressure, d_hz, sigma_d=weights, poly=config.poly(), gas=config.gas(), **tols
    )
    psd_fit = fit_psd(psd, **tols)
    gas_psd = config.gas(psd_pressure if psd_pressure is not None else config.psd_pressure_pa)
    r = radius_from_damping(psd_fit.damping_gamma, gas_psd, config.density)
    sigma_abs = sigma_from_beta_radius(heating.beta_heat, r, config.gas())
    beta_err, r_err, sigma_err = _transport_uncertainties(heating, psd_fit, r, sigma_abs)
    return ParticleAnalysis(
        conditions=tuple(conditions),
        spectra=tuple(spectra),
        psd=psd,
        psd_pressure=psd_pressure if psd_pressure is not None else config.psd_pressure_pa,
        esr_fits=esr_fits,
        heating=heating,
        psd_fit=psd_fit,
        beta_heat=heating.beta_heat,
        beta_uncertainty=beta_err,
        d_strain=heating.d_strain,
        d_strain_uncertainty=_maybe_stderr(heating.fit, "d_strain"),
        r_hydro=r,
        r_uncertainty=r_err,
        sigma_abs=sigma_abs,
        sigma_abs_uncertainty=sigma_err,
    )


def _stage(stage: str, input_name: str | None, fn):
    try:
        return fn()
    except StageError:
        raise
    except LevithermError as exc:
        raise StageError(stage, str(exc), input_name) from exc


def run_particle(config: ExperimentConfig) -> ParticleAnalysis:
    """Analyze one particle from the files named in the config.

    Each ``condition`` line contributes one spin-resonance scan;
    ``psd_path`` names the motional spectrum. Any failure is wrapped into
    a stage error naming the pipeline stage and the offending input.
    """
    if len(config.conditions) < 4:
        raise StageError(
            "validate-config",
            f"need at least 4 ESR conditions, got {len(config.conditions)}",
        )
    if not config.psd_path:
        raise StageError("validate-config", "no psd_path configured")
    spectra = tuple(
        _stage("ingest-esr", c.path, lambda path=c.path: read_esr_csv(path))
        for c in config.conditions
    )
    psd = _stage("ingest-psd", config.psd_path, lambda: read_psd_csv(config.psd_path))
    conditions = tuple((c.intensity, c.pressure) for c in config.conditions)

    tols = dict(
        step_tol=config.fit_step_tol,
        grad_tol=config.fit_grad_tol,
        max_iterations=config.fit_max_iterations,
    )
    esr_fits = tuple(
        _stage("fit-esr", c.path, lambda s=s: fit_esr(s, **tols))
        for c, s in zip(config.conditions, spectra)
    )
    d_hz = np.array([f.params.d_center for f in esr_fits])
    sigma_d = np.array([f.sigma_d for f in esr_fits])
    weights = sigma_d if np.all(sigma_d > 0.0) else None
    heating = _stage(
        "fit-heating",
        None,
        lambda: fit_heating(
            np.array([c[0] for c in conditions]),
            np.array([c[1] for c in conditions]),
            d_hz,
            sigma_d=weights,
            poly=config.poly(),
            gas=config.gas(),
            **tols,
        ),
    )
    psd_fit = _stage("fit-psd", config.psd_path, lambda: fit_psd(psd, **tols))
    gas_psd = config.gas()
    r = _stage(
        "invert-radius",
        config.psd_path,
        lambda: radius_from_damping(psd_fit.damping_gamma, gas_psd, config.density),
    )
    sigma_abs = _stage(
        "invert-cross-section",
        None,
        lambda: sigma_from_beta_radius(heating.beta_heat, r, config.gas()),
    )
    beta_err, r_err, sigma_err = _transport_uncertainties(heating, psd_fit, r, sigma_abs)
    return ParticleAnalysis(
        conditions=conditions,
        spectra=spectra,
        psd=psd,
        psd_pressure=config.psd_pressure_pa,
        esr_fits=esr_fits,
        heating=heating,
        psd_fit=psd_fit,
        beta_heat=heating.beta_heat,
        beta_uncertainty=beta_err,
        d_strain=heating.d_strain,
        d_strain_uncertainty=_maybe_stderr(heating.fit, "d_strain"),
        r_hydro=r,
        r_uncertainty=r_err,
        sigma_abs=sigma_abs,
        sigma_abs_uncertainty=sigma_err,
    )


# --- ensemble -------------------------------------------------------------------


def _ensemble_task(args: tuple[ExperimentConfig, int]) -> EnsembleRecord:
    config, index = args
    # hottest condition pinned to half the allowed rise: strong absorbers
    # are attenuated and weak ones probed harder, as in the experiment
    particle = synthesize_particle(
        config, index=index, target_rise=0.5 * (config.max_temperature - config.t0)
    )
    analysis = analyze_particle(
        config, particle.conditions, particle.spectra, particle.psd, particle.psd_pressure
    )
    return analysis.record(particle_id=index)


@dataclass(frozen=True)
class EnsembleResult:
    """Batch analysis: per-particle records plus the power-law reduction."""

    config: ExperimentConfig
    records: tuple[EnsembleRecord, ...]
    comparison: ExponentComparison
    eps_imag_center: float
    eps_imag_lower: float
    eps_imag_upper: float
    bulk_per_m_center: float
    bulk_per_m_lower: float
    bulk_per_m_upper: float

    def to_report(self) -> dict:
        fixed3 = self.comparison.fixed_three
        config_echo = self.config.to_dict()
        # pool width changes how the run executes, not what it computes;
        # serial and parallel runs must emit identical reports
        config_echo.pop("workers")
        return {
            "config": config_echo,
            "n_records": len(self.records),
            "records": [
                {
                    "particle_id": rec.particle_id,
                    "beta_heat": float(rec.beta_heat),
                    "beta_uncertainty": _opt(rec.beta_uncertainty),
                    "r_hydro_m": float(rec.r_hydro),
                    "sigma_abs_m2": float(rec.sigma_abs),
                    "sigma_abs_uncertainty_m2": _opt(rec.sigma_abs_uncertainty),
                }
                for rec in self.records
            ],
            "power_law": {
                "free": _power_law_dict(self.comparison.free),
                "fixed_n2": _power_law_dict(self.comparison.fixed_two),
                "fixed_n3": _power_law_dict(fixed3),
                "preferred_fixed_exponent": self.comparison.better_fixed_exponent,
            },
            "band": {
                "amplitude": float(fixed3.amplitude),
                "a_minus": float(fixed3.a_minus),
                "a_plus": float(fixed3.a_plus),
                "sigma_log": float(fixed3.sigma_log),
                "half_width_factor": float(math.exp(2.0 * fixed3.sigma_log)),
            },
            "dielectric": {
                "eps_real": float(self.config.eps_real),
                "wavelength_m": float(self.config.wavelength),
                "eps_imag": {
                    "center": float(self.eps_imag_center),
                    "lower": float(self.eps_imag_lower),
                    "upper": float(self.eps_imag_upper),
                },
                "bulk_absorption_per_m": {
                    "center": float(self.bulk_per_m_center),
                    "lower": float(self.bulk_per_m_lower),
                    "upper": float(self.bulk_per_m_upper),
                },
                "bulk_absorption_per_cm": {
                    "center": float(self.bulk_per_m_center / 100.0),
                    "lower": float(self.bulk_per_m_lower / 100.0),
                    "upper": float(self.bulk_per_m_upper / 100.0),
                },
            },
        }

    def histogram_table(self, bins: int = 12) -> list[tuple[float, float, int]]:
        betas = np.array([r.beta_heat for r in self.records])
        counts, edges = np.histogram(betas, bins=bins)
        return [
            (float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))
        ]

    def band_table(self, n_points: int = 101) -> list[tuple[float, float, float, float, float]]:
        fixed3 = self.comparison.fixed_three
        free = self.comparison.free
        radii = np.array([r.r_hydro for r in self.records])
        grid = np.logspace(math.log10(radii.min()), math.log10(radii.max()), n_points)
        center = fixed3.predict(grid)
        lo = center * (fixed3.a_minus / fixed3.amplitude)
        hi = center * (fixed3.a_plus / fixed3.amplitude)
        return [
            (float(g), float(c), float(l), float(h), float(f))
            for g, c, l, h, f in zip(grid, center, lo, hi, free.predict(grid))
        ]


def _power_law_dict(fit) -> dict:
    return {
        "amplitude": float(fit.amplitude),
        "amplitude_units": fit.amplitude_units,
        "exponent": float(fit.exponent),
        "fixed_exponent": bool(fit.fixed_exponent),
        "sigma_log": float(fit.sigma_log),
        "rss_log": float(fit.rss_log),
        "n_records": int(fit.n_records),
    }


def run_ensemble(config: ExperimentConfig) -> EnsembleResult:
    """Synthesize and analyze a batch, then reduce it to the power law.

    The fixed-cube band is inverted into the imaginary dielectric
    constant through the cross-section per volume 3 a / (4 pi) and on
    into the bulk absorption coefficient. Worker processes (``workers``
    > 1) each own a particle index; results are identical to a serial
    run because seeding depends only on (seed, index).
    """
    n = config.particle_count
    if n < 3:
        raise DomainError(f"insufficient records for a power-law fit: need at least 3, got {n}")
    tasks = [(config, i) for i in range(n)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, n)) as pool:
            records = tuple(pool.map(_ensemble_task, tasks))
    else:
        records = tuple(_ensemble_task(t) for t in tasks)

    radii = np.array([r.r_hydro for r in records])
    sigmas = np.array([r.sigma_abs for r in records])
    comparison = compare_exponents(radii, sigmas)
    fixed3 = comparison.fixed_three

    eps = []
    for amplitude in (fixed3.amplitude, fixed3.a_minus, fixed3.a_plus):
        # sigma = a r^3 and V = 4 pi r^3 / 3 give sigma/V = 3 a / (4 pi)
        ratio = 3.0 * amplitude / (4.0 * math.pi)
        eps.append(epsilon_imag_from_sigma_ratio(ratio, config.eps_real, config.wavelength))
    bulk = [
        bulk_absorption_coefficient(
            DielectricConstant(eps_imag=e, eps_real=config.eps_real), config.wavelength
        )
        for e in eps
    ]
    return EnsembleResult(
        config=config,
        records=records,
        comparison=comparison,
        eps_imag_center=eps[0],
        eps_imag_lower=eps[1],
        eps_imag_upper=eps[2],
        bulk_per_m_center=bulk[0],
        bulk_per_m_lower=bulk[1],
        bulk_per_m_upper=bulk[2],
    )


# --- report writing -------------------------------------------------------------


class _AtomicDir:
    """Collects files under temporary names, then renames them all at once.

    A failure before commit removes every temporary, leaving the target
    directory untouched.
    """

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.pending: list[tuple[str, str]] = []
        os.makedirs(out_dir, exist_ok=True)

    def tmp_path(self, name: str) -> str:
        final = os.path.join(self.out_dir, name)
        tmp = final + ".tmp"
        self.pending.append((tmp, final))
        return tmp

    def write_text(self, name: str, content: str) -> None:
        with open(self.tmp_path(name), "w", newline="") as fh:
            fh.write(content)

    def commit(self) -> list[str]:
        finals = []
        for tmp, final in self.pending:
            os.replace(tmp, final)
            finals.append(final)
        return finals

    def abort(self) -> None:
        for tmp, _ in self.pending:
            try:
                os.remove(tmp)
            except OSError:
                pass


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_particle_outputs(
    out_dir: str, analysis: ParticleAnalysis, render_figures: bool = True
) -> list[str]:
    """Write the single-particle report, fit table, and figures atomically."""
    writer = _AtomicDir(out_dir)
    try:
        writer.write_text("particle_report.json", _json_text(analysis.to_dict()))
        rows = []
        for (intensity, pressure), f, t in zip(
            analysis.conditions, analysis.esr_fits, analysis.heating.fitted_temperatures
        ):
            rows.append(
                (
                    float(intensity),
                    float(pressure),
                    float(f.params.d_center),
                    float(f.sigma_d),
                    float(t),
                )
            )
        writer.write_text(
            "heating_fit.csv",
            _csv_text(["intensity_w_m2", "pressure_pa", "d_hz", "sigma_d_hz", "t_fit_k"], rows),
        )
        if render_figures:
            from .figures import render_esr_fits, render_psd_fit

            render_esr_fits(
                writer.tmp_path("esr_fits.png"),
                analysis.conditions,
                analysis.spectra,
                analysis.esr_fits,
            )
            render_psd_fit(writer.tmp_path("psd_fit.png"), analysis.psd, analysis.psd_fit)
    except BaseException:
        writer.abort()
        raise
    return writer.commit()


def write_ensemble_outputs(
    out_dir: str, result: EnsembleResult, render_figures: bool = True
) -> list[str]:
    """Write the ensemble report, plot-ready tables, and figures atomically."""
    writer = _AtomicDir(out_dir)
    try:
        writer.write_text("ensemble_report.json", _json_text(result.to_report()))
        write_ensemble_csv(writer.tmp_path("ensemble_records.csv"), list(result.records))
        hist = result.histogram_table()
        writer.write_text(
            "beta_histogram.csv", _csv_text(["beta_low", "beta_high", "count"], hist)
        )
        band = result.band_table()
        writer.write_text(
            "power_law_band.csv",
            _csv_text(
                ["r_m", "sigma_center_m2", "sigma_lower_m2", "sigma_upper_m2", "sigma_free_m2"],
                band,
            ),
        )
        if render_figures:
            from .figures import render_beta_histogram, render_cross_section_band

            render_beta_histogram(writer.tmp_path("beta_histogram.png"), hist)
            render_cross_section_band(
                writer.tmp_path("cross_section_fit.png"), result.records, band
            )
    except BaseException:
        writer.abort()
        raise
    return writer.commit()


def write_synthetic_inputs(out_dir: str, config: ExperimentConfig) -> list[str]:
    """Generate one particle's files plus a ready-to-run analysis config.

    The particle takes its truth from the ``true_*`` config fields. File
    paths inside the emitted config are relative to the output directory,
    so the directory can be moved as a unit.
    """
    import dataclasses as _dc

    from .dataio import EnsembleCondition

    truth = ParticleTruth(
        sigma_abs=config.true_sigma_abs,
        r_hydro=config.true_radius,
        d_strain=config.true_d_strain,
        beta_heat=beta_from_sigma(
            config.true_sigma_abs, config.geometry(config.true_radius), config.gas()
        ),
    )
    particle = synthesize_particle(config, index=0, truth=truth)
    writer = _AtomicDir(out_dir)
    try:
        conditions = []
        for j, ((intensity, pressure), spec) in enumerate(
            zip(particle.conditions, particle.spectra)
        ):
            name = f"esr_{j:02d}.csv"
            write_esr_csv(writer.tmp_path(name), spec)
            conditions.append(EnsembleCondition(intensity=intensity, pressure=pressure, path=name))
        write_psd_csv(writer.tmp_path("psd.csv"), particle.psd)
        run_config = _dc.replace(config, conditions=tuple(conditions), psd_path="psd.csv")
        write_config(writer.tmp_path("particle_config.txt"), run_config)
    except BaseException:
        writer.abort()
        raise
    return writer.commit()
