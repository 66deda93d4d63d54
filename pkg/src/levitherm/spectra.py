"""Spectral models for the two measured signals.

Covers the spin-resonance photoluminescence dip spectrum (bi-Lorentzian
in count rate) and the motional power spectral density of the trapped
particle (damped-oscillator response), each with a seeded synthetic
generator and a least-squares fitter built on the estimation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import K_B
from .errors import DomainError, FitFailure
from .fitting import FitProblem, FitResult, least_squares_solve

Array = np.ndarray

DEFAULT_DWELL = 1.5  # s per scan point

SeedLike = "int | np.random.SeedSequence | np.random.Generator"


@dataclass(frozen=True)
class EsrLineParams:
    """Bi-Lorentzian dip spectrum parameters.

    Widths are full width at half maximum. The two dips sit at
    d_center -/+ e_split and may differ in contrast and width.
    """

    d_center: float
    e_split: float
    contrast_minus: float
    contrast_plus: float
    width_minus: float
    width_plus: float
    base_rate: float

    def __post_init__(self):
        if self.e_split < 0.0:
            raise DomainError(f"e_split must be non-negative, got {self.e_split}")
        for label, c in (("contrast_minus", self.contrast_minus), ("contrast_plus", self.contrast_plus)):
            if not 0.0 <= c < 1.0:
                raise DomainError(f"{label} must be in [0, 1), got {c}")
        # sum < 1 keeps the rate positive even for fully overlapping dips
        if self.contrast_minus + self.contrast_plus >= 1.0:
            raise DomainError("combined dip contrast must stay below 1")
        for label, w in (("width_minus", self.width_minus), ("width_plus", self.width_plus)):
            if w <= 0.0:
                raise DomainError(f"{label} must be positive, got {w}")
        if self.base_rate <= 0.0:
            raise DomainError(f"base_rate must be positive, got {self.base_rate}")

    @property
    def f_minus(self) -> float:
        return self.d_center - self.e_split

    @property
    def f_plus(self) -> float:
        return self.d_center + self.e_split


@dataclass(frozen=True)
class EsrSpectrum:
    """A measured or synthetic dip spectrum.

    Counts are non-negative reals: shot-noise synthesis produces integer
    values, while noiseless model evaluation keeps exact means.
    """

    frequencies: Array
    counts: Array
    dwell_per_point: float = DEFAULT_DWELL

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        c = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "counts", c)
        if f.ndim != 1 or f.shape != c.shape:
            raise DomainError("frequencies and counts must be 1-D arrays of equal length")
        if f.size >= 2 and not np.all(np.diff(f) > 0.0):
            raise DomainError("frequencies must be strictly increasing")
        if np.any(c < 0.0):
            raise DomainError("counts must be non-negative")
        if self.dwell_per_point <= 0.0:
            raise DomainError(f"dwell_per_point must be positive, got {self.dwell_per_point}")


@dataclass(frozen=True)
class OscillatorParams:
    """Trapped-oscillator model: resonance, damping, mass, mode temperature."""

    resonance_omega: float
    damping_gamma: float
    mass: float
    temperature_cm: float

    def __post_init__(self):
        for label, v in (
            ("resonance_omega", self.resonance_omega),
            ("damping_gamma", self.damping_gamma),
            ("mass", self.mass),
            ("temperature_cm", self.temperature_cm),
        ):
            if v <= 0.0:
                raise DomainError(f"{label} must be positive, got {v}")

    @property
    def underdamped(self) -> bool:
        return self.resonance_omega > self.damping_gamma / 2.0


@dataclass(frozen=True)
class MotionPsd:
    """One-sided displacement power spectral density."""

    frequencies: Array
    psd_values: Array

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.psd_values, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "psd_values", v)
        if f.ndim != 1 or f.shape != v.shape:
            raise DomainError("frequencies and psd_values must be 1-D arrays of equal length")
        if f.size >= 2 and not np.all(np.diff(f) > 0.0):
            raise DomainError("frequencies must be strictly increasing")
        if np.any(v < 0.0):
            raise DomainError("psd_values must be non-negative")


# --- forward models -----------------------------------------------------------


def _lorentz_unit(f, f0: float, fwhm: float):
    half_sq = (fwhm / 2.0) ** 2
    return half_sq / ((np.asarray(f, dtype=float) - f0) ** 2 + half_sq)


def esr_model(params: EsrLineParams, f):
    """Photon count rate (counts/s) of the dip spectrum at frequency f."""
    rate = params.base_rate * (
        1.0
        - params.contrast_minus * _lorentz_unit(f, params.f_minus, params.width_minus)
        - params.contrast_plus * _lorentz_unit(f, params.f_plus, params.width_plus)
    )
    return rate


def psd_model(params: OscillatorParams, f):
    """Displacement PSD (m^2/Hz) of a damped thermal oscillator at frequency f.

    S(omega) = (2 k_B T Gamma / m) / ((Omega0^2 - omega^2)^2 + Gamma^2 omega^2)
    with omega = 2 pi f, a density symmetric in frequency; its integral over
    the full frequency line is the position variance k_B T / (m Omega0^2).
    """
    omega = 2.0 * math.pi * np.asarray(f, dtype=float)
    num = 2.0 * K_B * params.temperature_cm * params.damping_gamma / params.mass
    return num / (
        (params.resonance_omega**2 - omega**2) ** 2 + (params.damping_gamma * omega) ** 2
    )


# --- synthetic generators -------------------------------------------------------


def synthesize_esr(
    params: EsrLineParams,
    scan: Sequence[float],
    dwell: float = DEFAULT_DWELL,
    seed=None,
    shot_noise: bool = True,
) -> EsrSpectrum:
    """Draw a dip spectrum with Poisson counts of mean model*dwell.

    With ``shot_noise=False`` the exact means are returned instead. The
    draw is deterministic for a fixed seed.
    """
    f = np.asarray(scan, dtype=float)
    if dwell <= 0.0:
        raise DomainError(f"dwell must be positive, got {dwell}")
    mean = esr_model(params, f) * dwell
    if shot_noise:
        rng = np.random.default_rng(seed)
        counts = rng.poisson(mean).astype(float)
    else:
        counts = mean
    return EsrSpectrum(frequencies=f, counts=counts, dwell_per_point=dwell)


def synthesize_psd(
    params: OscillatorParams,
    grid: Sequence[float],
    n_averages: int = 1,
    seed=None,
) -> MotionPsd:
    """Draw an averaged periodogram: model * chi^2(2 n) / (2 n) per bin."""
    if n_averages < 1:
        raise DomainError(f"n_averages must be at least 1, got {n_averages}")
    f = np.asarray(grid, dtype=float)
    model = psd_model(params, f)
    rng = np.random.default_rng(seed)
    dof = 2 * int(n_averages)
    values = model * rng.chisquare(dof, size=f.size) / dof
    return MotionPsd(frequencies=f, psd_values=values)


# --- ESR fitting ---------------------------------------------------------------


@dataclass(frozen=True)
class EsrFitResult:
    """Fitted dip-spectrum parameters with the splitting uncertainty.

    ``sigma_d`` propagates the dip-frequency covariance into the center
    frequency (f_minus + f_plus) / 2. ``single_dip`` marks the degenerate
    fallback where only one merged dip was resolvable and e_split is 0.
    """

    params: EsrLineParams
    covariance: Array
    sigma_d: float
    single_dip: bool
    fit: FitResult


def _moving_average(y: Array, width: int = 5) -> Array:
    w = min(width, y.size)
    kernel = np.ones(w)
    num = np.convolve(y, kernel, mode="same")
    den = np.convolve(np.ones_like(y), kernel, mode="same")
    return num / den


def _local_minima(y: Array) -> list[int]:
    idx = []
    for i in range(1, y.size - 1):
        if y[i] <= y[i - 1] and y[i] <= y[i + 1] and (y[i] < y[i - 1] or y[i] < y[i + 1]):
            idx.append(i)
    return idx


def _minimum_prominence(y: Array, i: int) -> float:
    # barrier height to the nearest lower point on each side (or the edge);
    # sub-minima inside one dip basin get only their local wiggle height
    barrier_left = y[i]
    j = i - 1
    while j >= 0 and y[j] >= y[i]:
        barrier_left = max(barrier_left, y[j])
        j -= 1
    barrier_right = y[i]
    j = i + 1
    while j < y.size and y[j] >= y[i]:
        barrier_right = max(barrier_right, y[j])
        j += 1
    return min(barrier_left, barrier_right) - y[i]


def _width_estimate(f: Array, y: Array, i_min: int, baseline: float) -> float:
    # walk out from the minimum to the half-depth crossings
    half = baseline - 0.5 * (baseline - y[i_min])
    left = i_min
    while left > 0 and y[left] < half:
        left -= 1
    right = i_min
    while right < y.size - 1 and y[right] < half:
        right += 1
    width = f[right] - f[left]
    if width <= 0.0:
        width = (f[-1] - f[0]) / max(y.size - 1, 1)
    return width


def fit_esr(
    spec: EsrSpectrum,
    *,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-12,
    max_iterations: int = 200,
) -> EsrFitResult:
    """Fit the bi-Lorentzian dip model to a spectrum.

    Detection first: the spectrum is smoothed with a 5-point moving
    average and up to two minima deeper than twice the shot-noise
    standard deviation seed the dip frequencies. One resolvable minimum
    falls back to a single merged dip with e_split fixed at 0, flagged on
    the result. No qualifying minimum is a failure.

    Points are weighted by the shot-noise standard deviation
    max(sqrt(counts), 1).
    """
    f = spec.frequencies
    counts = spec.counts
    if f.size < 8:
        raise DomainError(f"need at least 8 points to fit, got {f.size}")
    dwell = spec.dwell_per_point

    smooth = _moving_average(counts)
    baseline = float(np.median(smooth))
    shot_sigma = math.sqrt(max(baseline, 1.0))
    minima = [
        i
        for i in _local_minima(smooth)
        if baseline - smooth[i] > 2.0 * shot_sigma
        and _minimum_prominence(smooth, i) > 2.0 * shot_sigma
    ]
    if not minima:
        raise FitFailure(
            "no detectable dip below the baseline",
            diagnostics={"baseline": baseline, "shot_sigma": shot_sigma},
        )
    minima.sort(key=lambda i: smooth[i])
    seeds = [minima[0]]
    for i in minima[1:]:
        if abs(i - seeds[0]) >= 2:
            seeds.append(i)
            break

    sigma = np.maximum(np.sqrt(counts), 1.0)
    span = f[-1] - f[0]
    rate0 = baseline / dwell
    f_lo, f_hi = f[0] - span, f[-1] + span
    w_lo = span / max(f.size - 1, 1) / 10.0
    w_hi = 10.0 * span

    if len(seeds) == 2:
        i_a, i_b = sorted(seeds)
        depth_a = 1.0 - smooth[i_a] / baseline
        depth_b = 1.0 - smooth[i_b] / baseline
        init = np.array(
            [
                rate0,
                np.clip(depth_a, 0.01, 0.9),
                np.clip(depth_b, 0.01, 0.9),
                f[i_a],
                f[i_b],
                _width_estimate(f, smooth, i_a, baseline),
                _width_estimate(f, smooth, i_b, baseline),
            ]
        )

        def residual(p):
            rate, c1, c2, fa, fb, w1, w2 = p
            model = rate * (1.0 - c1 * _lorentz_unit(f, fa, w1) - c2 * _lorentz_unit(f, fb, w2))
            return (counts - model * dwell) / sigma

        names = ("base_rate", "c_minus", "c_plus", "f_minus", "f_plus", "w_minus", "w_plus")
        lower = np.array([rate0 * 1e-6, 0.0, 0.0, f_lo, f_lo, w_lo, w_lo])
        upper = np.array([rate0 * 1e6, 0.99, 0.99, f_hi, f_hi, w_hi, w_hi])
        result = least_squares_solve(
            FitProblem(
                residual=residual,
                names=names,
                initial=init,
                lower=lower,
                upper=upper,
                sigma_scaled=True,
                step_tol=step_tol,
                grad_tol=grad_tol,
                max_iterations=max_iterations,
            )
        )
        if not result.converged:
            raise FitFailure(
                "dip-spectrum fit did not converge",
                diagnostics={"message": result.message, "iterations": result.iterations},
            )
        p = result.params.copy()
        cov = result.covariance.copy()
        if p[3] > p[4]:
            # canonical order: lower dip first
            perm = [0, 2, 1, 4, 3, 6, 5]
            p = p[perm]
            cov = cov[np.ix_(perm, perm)]
        rate, c1, c2, fa, fb, w1, w2 = p
        if not (f[0] <= fa <= f[-1] and f[0] <= fb <= f[-1]):
            raise FitFailure(
                "fitted dip frequencies left the scan window",
                diagnostics={"f_minus": fa, "f_plus": fb},
            )
        d_center = (fa + fb) / 2.0
        e_split = (fb - fa) / 2.0
        var_d = (cov[3, 3] + cov[4, 4] + 2.0 * cov[3, 4]) / 4.0
        try:
            params = EsrLineParams(
                d_center=d_center,
                e_split=e_split,
                contrast_minus=c1,
                contrast_plus=c2,
                width_minus=w1,
                width_plus=w2,
                base_rate=rate,
            )
        except DomainError as exc:
            raise FitFailure(f"fitted parameters are unphysical: {exc}") from exc
        return EsrFitResult(
            params=params,
            covariance=cov,
            sigma_d=math.sqrt(max(var_d, 0.0)),
            single_dip=False,
            fit=result,
        )

    # single merged dip: 4-parameter Lorentzian, splitting reported as zero
    i0 = seeds[0]
    init = np.array(
        [
            rate0,
            np.clip(1.0 - smooth[i0] / baseline, 0.01, 0.9),
            f[i0],
            _width_estimate(f, smooth, i0, baseline),
        ]
    )

    def residual_single(p):
        rate, c, f0, w = p
        model = rate * (1.0 - c * _lorentz_unit(f, f0, w))
        return (counts - model * dwell) / sigma

    result = least_squares_solve(
        FitProblem(
            residual=residual_single,
            names=("base_rate", "contrast", "f_center", "width"),
            initial=init,
            lower=np.array([rate0 * 1e-6, 0.0, f_lo, w_lo]),
            upper=np.array([rate0 * 1e6, 0.99, f_hi, w_hi]),
            sigma_scaled=True,
            step_tol=step_tol,
            grad_tol=grad_tol,
            max_iterations=max_iterations,
        )
    )
    if not result.converged:
        raise FitFailure(
            "single-dip fallback fit did not converge",
            diagnostics={"message": result.message, "iterations": result.iterations},
        )
    rate, c, f0, w = result.params
    if not f[0] <= f0 <= f[-1]:
        raise FitFailure("fitted dip frequency left the scan window", diagnostics={"f_center": f0})
    try:
        params = EsrLineParams(
            d_center=float(f0),
            e_split=0.0,
            contrast_minus=c / 2.0,
            contrast_plus=c / 2.0,
            width_minus=float(w),
            width_plus=float(w),
            base_rate=float(rate),
        )
    except DomainError as exc:
        raise FitFailure(f"fitted parameters are unphysical: {exc}") from exc
    return EsrFitResult(
        params=params,
        covariance=result.covariance,
        sigma_d=math.sqrt(max(float(result.covariance[2, 2]), 0.0)),
        single_dip=True,
        fit=result,
    )


# --- PSD fitting -----------------------------------------------------------------


@dataclass(frozen=True)
class PsdFitResult:
    """Fitted oscillator response.

    The spectrum determines only the amplitude 2 k_B T Gamma / m as a
    whole; mode temperature and mass are not separately identifiable, so
    they are reported through ``temperature_from_mass``.
    """

    amplitude: float
    resonance_omega: float
    damping_gamma: float
    covariance: Array
    fit: FitResult

    def temperature_from_mass(self, mass: float) -> float:
        if mass <= 0.0:
            raise DomainError(f"mass must be positive, got {mass}")
        return self.amplitude * mass / (2.0 * K_B * self.damping_gamma)


def fit_psd(
    psd: MotionPsd,
    *,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-12,
    max_iterations: int = 200,
) -> PsdFitResult:
    """Fit the oscillator response to a measured PSD.

    The fit runs in log-amplitude space on a window of +/- 5 estimated
    linewidths around the detected peak, which suppresses sensitivity to
    broadband background far from resonance. Requires a visible peak
    (maximum above 5x the median).
    """
    f = psd.frequencies
    values = psd.psd_values
    if f.size < 8:
        raise DomainError(f"need at least 8 points to fit, got {f.size}")
    med = float(np.median(values))
    i_peak = int(np.argmax(values))
    if med <= 0.0 or values[i_peak] < 5.0 * med:
        raise FitFailure(
            "no visible resonance peak (maximum below 5x median)",
            diagnostics={"max": float(values[i_peak]), "median": med},
        )

    smooth = _moving_average(values)
    i_sm = int(np.argmax(smooth))
    half = smooth[i_sm] / 2.0
    left = i_sm
    while left > 0 and smooth[left] > half:
        left -= 1
    right = i_sm
    while right < f.size - 1 and smooth[right] > half:
        right += 1
    fwhm_f = max(f[right] - f[left], (f[-1] - f[0]) / max(f.size - 1, 1))

    f_peak = f[i_sm]
    window = (f >= f_peak - 5.0 * fwhm_f) & (f <= f_peak + 5.0 * fwhm_f)
    if np.count_nonzero(window) < 8:
        window = np.ones_like(f, dtype=bool)
    fw = f[window]
    vw = values[window]
    positive = vw > 0.0
    fw = fw[positive]
    vw = vw[positive]
    if fw.size < 8:
        raise FitFailure("too few positive bins around the peak to fit")
    log_v = np.log(vw)

    omega0_init = 2.0 * math.pi * f_peak
    gamma_init = 2.0 * math.pi * fwhm_f
    log_a_init = math.log(values[i_peak] * max(gamma_init, 1e-30) ** 2 * omega0_init**2)

    def residual(p):
        log_a, omega0, gamma = p
        omega = 2.0 * math.pi * fw
        denom = (omega0**2 - omega**2) ** 2 + (gamma * omega) ** 2
        return log_v - (log_a - np.log(denom))

    result = least_squares_solve(
        FitProblem(
            residual=residual,
            names=("log_amplitude", "resonance_omega", "damping_gamma"),
            initial=np.array([log_a_init, omega0_init, gamma_init]),
            lower=np.array([-np.inf, 1e-6, 1e-9]),
            step_tol=step_tol,
            grad_tol=grad_tol,
            max_iterations=max_iterations,
        )
    )
    if not result.converged:
        raise FitFailure(
            "oscillator-response fit did not converge",
            diagnostics={"message": result.message, "iterations": result.iterations},
        )
    log_a, omega0, gamma = result.params
    return PsdFitResult(
        amplitude=math.exp(log_a),
        resonance_omega=float(omega0),
        damping_gamma=float(gamma),
        covariance=result.covariance,
        fit=result,
    )
