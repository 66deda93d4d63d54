"""Thermometry and absorption analysis for optically levitated nanodiamonds.

The package covers the full chain from raw spin-resonance spectra to
material absorption numbers: spin-resonance and motional spectrum fitting,
internal-temperature inference, heat-balance estimation of heating
coefficients and absorption cross-sections, and ensemble-level power-law
analysis with synthetic data generation for validation.
"""

from .constants import K_B, R_GAS, pa_from_hpa
from .dataio import (
    EnsembleCondition,
    EnsembleRecord,
    ExperimentConfig,
    parse_config,
    read_calibration_csv,
    read_ensemble_csv,
    read_esr_csv,
    read_heating_csv,
    read_psd_csv,
    write_calibration_csv,
    write_config,
    write_ensemble_csv,
    write_esr_csv,
    write_heating_csv,
    write_psd_csv,
)
from .errors import DomainError, FitFailure, LevithermError, ParseError, StageError
from .fitting import (
    CalibrationResult,
    ExponentComparison,
    FitProblem,
    FitResult,
    HeatingFitResult,
    PowerLawFit,
    compare_exponents,
    confidence_band,
    finite_difference_jacobian,
    fit_calibration_alpha,
    fit_heating,
    fit_power_law,
    least_squares_solve,
)
from .physics import (
    DielectricConstant,
    EsrSensitivityInputs,
    GasConditions,
    ParticleGeometry,
    ZfsPolynomial,
    absorbed_power,
    beta_from_sigma,
    bulk_absorption_coefficient,
    conduction_power,
    damping_rate,
    epsilon_imag_from_sigma_ratio,
    equilibrium_temperature,
    esr_sensitivity,
    eval_zfs,
    invert_zfs,
    radius_from_damping,
    rayleigh_sigma,
    sigma_from_beta_radius,
    temperature_uncertainty,
    zfs_slope,
)
from .pipeline import (
    EnsembleResult,
    ParticleAnalysis,
    ParticleTruth,
    SyntheticParticle,
    analyze_particle,
    measurement_grid,
    run_ensemble,
    run_particle,
    synthesize_particle,
    write_ensemble_outputs,
    write_particle_outputs,
    write_synthetic_inputs,
)
from .spectra import (
    EsrFitResult,
    EsrLineParams,
    EsrSpectrum,
    MotionPsd,
    OscillatorParams,
    PsdFitResult,
    esr_model,
    fit_esr,
    fit_psd,
    psd_model,
    synthesize_esr,
    synthesize_psd,
)

__version__ = "0.1.0"

__all__ = [
    "K_B",
    "R_GAS",
    "pa_from_hpa",
    "LevithermError",
    "DomainError",
    "ParseError",
    "FitFailure",
    "StageError",
    "ZfsPolynomial",
    "GasConditions",
    "ParticleGeometry",
    "DielectricConstant",
    "EsrSensitivityInputs",
    "eval_zfs",
    "zfs_slope",
    "invert_zfs",
    "temperature_uncertainty",
    "absorbed_power",
    "conduction_power",
    "equilibrium_temperature",
    "beta_from_sigma",
    "sigma_from_beta_radius",
    "rayleigh_sigma",
    "epsilon_imag_from_sigma_ratio",
    "bulk_absorption_coefficient",
    "damping_rate",
    "radius_from_damping",
    "esr_sensitivity",
    "FitProblem",
    "FitResult",
    "finite_difference_jacobian",
    "least_squares_solve",
    "CalibrationResult",
    "fit_calibration_alpha",
    "HeatingFitResult",
    "fit_heating",
    "PowerLawFit",
    "fit_power_law",
    "confidence_band",
    "ExponentComparison",
    "compare_exponents",
    "EsrLineParams",
    "EsrSpectrum",
    "OscillatorParams",
    "MotionPsd",
    "esr_model",
    "psd_model",
    "synthesize_esr",
    "synthesize_psd",
    "EsrFitResult",
    "fit_esr",
    "PsdFitResult",
    "fit_psd",
    "ExperimentConfig",
    "EnsembleCondition",
    "EnsembleRecord",
    "parse_config",
    "write_config",
    "read_esr_csv",
    "write_esr_csv",
    "read_psd_csv",
    "write_psd_csv",
    "read_heating_csv",
    "write_heating_csv",
    "read_calibration_csv",
    "write_calibration_csv",
    "read_ensemble_csv",
    "write_ensemble_csv",
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
    "__version__",
]
