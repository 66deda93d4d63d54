"""Closed-form physics of levitated-nanodiamond thermometry.

Pure, deterministic functions: the cubic zero-field-splitting thermometer
and its inversion, the absorbed-power / gas-conduction balance, the
heating-coefficient and cross-section conversions, Rayleigh absorption and
the complex dielectric constant, gas damping and the hydrodynamic radius,
and the ESR temperature sensitivity.

Internal units are strict SI (Hz, K, Pa, m, W, kg).  GHz and mbar exist
only at I/O boundaries.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import R_GAS
from .errors import DomainError

# Cubic D(T) coefficients of the bulk-diamond calibration, in Hz, Hz/K, Hz/K^2, Hz/K^3.
ZFS_A0 = 2.8697e9
ZFS_A1 = 9.7e4
ZFS_A2 = -3.7e2
ZFS_A3 = 0.17


@dataclass(frozen=True)
class ZfsPolynomial:
    """Cubic temperature dependence of the NV zero-field splitting.

    D(T) = d_strain + a0 + a1*T + a2*T^2 + a3*T^3, strictly decreasing on
    ``valid_temperature_range``.  The default coefficients place the cubic's
    stationary points near 146 K and 1305 K, so the default range
    [150, 1000] K is monotone with margin.
    """

    a0: float = ZFS_A0
    a1: float = ZFS_A1
    a2: float = ZFS_A2
    a3: float = ZFS_A3
    d_strain: float = 0.0
    valid_temperature_range: tuple[float, float] = (150.0, 1000.0)

    def __post_init__(self):
        t_min, t_max = self.valid_temperature_range
        if not t_min < t_max:
            raise DomainError(f"invalid temperature range [{t_min}, {t_max}] K")
        # D'(T) must stay negative on the whole range: check endpoints and
        # any interior stationary point of the quadratic derivative.
        probes = [t_min, t_max]
        if self.a3 != 0.0:
            t_star = -self.a2 / (3.0 * self.a3)
            if t_min < t_star < t_max:
                probes.append(t_star)
        for t in probes:
            if self.slope(t) >= 0.0:
                raise DomainError(
                    f"D(T) is not strictly decreasing on [{t_min}, {t_max}] K "
                    f"(D'({t:.6g}) = {self.slope(t):.6g} Hz/K)"
                )

    def value(self, temperature):
        """Raw polynomial evaluation, no range check.  Accepts arrays."""
        t = np.asarray(temperature, dtype=float)
        d = self.d_strain + self.a0 + t * (self.a1 + t * (self.a2 + t * self.a3))
        return d if d.ndim else float(d)

    def slope(self, temperature):
        """Raw dD/dT, no range check.  Accepts arrays."""
        t = np.asarray(temperature, dtype=float)
        s = self.a1 + t * (2.0 * self.a2 + t * 3.0 * self.a3)
        return s if s.ndim else float(s)

    def _check_range(self, temperature):
        t_min, t_max = self.valid_temperature_range
        t = np.asarray(temperature, dtype=float)
        if np.any(t < t_min) or np.any(t > t_max):
            raise DomainError(
                f"temperature {temperature} K outside valid range [{t_min}, {t_max}] K"
            )


@dataclass(frozen=True)
class GasConditions:
    """Ambient gas state around the trapped particle.

    t0 ambient temperature (K), c_bar mean thermal speed (m/s), gamma
    specific-heat ratio, alpha_acc accommodation coefficient, p_gas
    pressure (Pa), molar_mass (kg/mol, dry air default).
    """

    p_gas: float
    t0: float = 294.0
    c_bar: float = 503.0
    gamma: float = 7.0 / 5.0
    alpha_acc: float = 1.0
    molar_mass: float = 0.02897

    def __post_init__(self):
        for name in ("p_gas", "t0", "c_bar", "molar_mass"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.gamma <= 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not 0.0 < self.alpha_acc <= 1.0:
            raise DomainError(f"alpha_acc must lie in (0, 1], got {self.alpha_acc}")


@dataclass(frozen=True)
class ParticleGeometry:
    """Spherical particle of hydrodynamic radius r_hydro and bulk density."""

    r_hydro: float
    density: float = 3500.0

    def __post_init__(self):
        if self.r_hydro <= 0.0:
            raise DomainError(f"r_hydro must be positive, got {self.r_hydro}")
        if self.density <= 0.0:
            raise DomainError(f"density must be positive, got {self.density}")

    @property
    def surface(self) -> float:
        return 4.0 * math.pi * self.r_hydro**2

    @property
    def volume(self) -> float:
        return (4.0 / 3.0) * math.pi * self.r_hydro**3

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass(frozen=True)
class DielectricConstant:
    """Relative dielectric constant eps_real + i*eps_imag."""

    eps_imag: float
    eps_real: float = 5.7

    def __post_init__(self):
        if self.eps_real <= 1.0:
            raise DomainError(f"eps_real must exceed 1, got {self.eps_real}")
        if self.eps_imag < 0.0:
            raise DomainError(f"eps_imag must be non-negative, got {self.eps_imag}")


@dataclass(frozen=True)
class EsrSensitivityInputs:
    """Linewidth (Hz), contrast, photon count rate (1/s), dwell per point (s)."""

    linewidth: float
    contrast: float
    count_rate: float
    dwell_per_point: float = 1.5

    def __post_init__(self):
        for name in ("linewidth", "contrast", "count_rate", "dwell_per_point"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.contrast >= 1.0:
            raise DomainError(f"contrast must be below 1, got {self.contrast}")


def eval_zfs(poly: ZfsPolynomial, temperature):
    """Zero-field splitting D (Hz) at the given temperature (K).

    Accepts a scalar or array; temperature must lie within the polynomial's
    valid range.
    """
    poly._check_range(temperature)
    return poly.value(temperature)


def zfs_slope(poly: ZfsPolynomial, temperature):
    """dD/dT (Hz/K); negative everywhere on the valid range."""
    poly._check_range(temperature)
    return poly.slope(temperature)


def invert_zfs(poly: ZfsPolynomial, d_measured, tol_kelvin: float = 1e-6):
    """Temperature (K) at which the polynomial equals ``d_measured`` (Hz).

    Safeguarded Newton iteration on the bracketing interval given by the
    valid temperature range; falls back to bisection whenever a Newton step
    leaves the bracket.  Converges to |dT| < ``tol_kelvin``.  Accepts a
    scalar or array of measured splittings.
    """
    t_min, t_max = poly.valid_temperature_range
    d = np.atleast_1d(np.asarray(d_measured, dtype=float))
    d_hi = poly.value(t_min)  # decreasing: highest D at lowest T
    d_lo = poly.value(t_max)
    if np.any(d > d_hi) or np.any(d < d_lo):
        raise DomainError(
            f"d_measured outside attainable range [{d_lo:.6g}, {d_hi:.6g}] Hz "
            f"for temperatures in [{t_min}, {t_max}] K"
        )

    lo = np.full(d.shape, t_min)
    hi = np.full(d.shape, t_max)
    t = 0.5 * (lo + hi)
    # 'f(t) = value(t) - d' is decreasing: f > 0 left of the root.
    for _ in range(200):
        f = poly.value(t) - d
        pos = f > 0.0
        lo = np.where(pos, t, lo)
        hi = np.where(pos, hi, t)
        step = f / poly.slope(t)
        t_newton = t - step
        inside = (t_newton > lo) & (t_newton < hi)
        t_next = np.where(inside, t_newton, 0.5 * (lo + hi))
        if np.all((hi - lo) < tol_kelvin) and np.all(np.abs(t_next - t) < tol_kelvin):
            t = t_next
            break
        t = t_next
    result = np.asarray(t)
    return result if np.ndim(d_measured) else float(result[0])


def temperature_uncertainty(sigma_d: float, poly: ZfsPolynomial, temperature: float) -> float:
    """Temperature uncertainty (K) from a splitting uncertainty (Hz)."""
    if sigma_d < 0.0:
        raise DomainError(f"sigma_d must be non-negative, got {sigma_d}")
    return sigma_d / abs(zfs_slope(poly, temperature))


def absorbed_power(sigma_abs: float, intensity: float) -> float:
    """Absorbed laser power (W) = cross-section (m^2) times intensity (W/m^2)."""
    if sigma_abs < 0.0 or intensity < 0.0:
        raise DomainError("sigma_abs and intensity must be non-negative")
    return sigma_abs * intensity


def conduction_power(geom: ParticleGeometry, gas: GasConditions, t_int: float) -> float:
    """Heat (W) carried away by gas conduction in the free-molecular regime.

    Negative when t_int < ambient (net heating of the particle by the gas).
    """
    return (
        gas.alpha_acc
        * geom.surface
        * (gas.p_gas * gas.c_bar / (8.0 * gas.t0))
        * ((gas.gamma + 1.0) / (gas.gamma - 1.0))
        * (t_int - gas.t0)
    )


def equilibrium_temperature(beta_heat: float, intensity: float, gas: GasConditions) -> float:
    """Steady-state internal temperature (K): T0 + beta * I / p."""
    return gas.t0 + beta_heat * intensity / gas.p_gas


def beta_from_sigma(sigma_abs: float, geom: ParticleGeometry, gas: GasConditions) -> float:
    """Heating coefficient (K Pa m^2/W) of a particle with the given cross-section.

    Uses the prefactor 8*T0/(alpha_acc*S*c_bar) that makes the absorbed-power,
    conduction and cross-section relations mutually consistent (the printed
    2*T0/c_bar variant is available as :func:`beta_from_sigma_as_printed`).
    """
    if sigma_abs < 0.0:
        raise DomainError(f"sigma_abs must be non-negative, got {sigma_abs}")
    return (
        8.0 * gas.t0 * sigma_abs
        / (gas.alpha_acc * geom.surface * gas.c_bar)
        * ((gas.gamma - 1.0) / (gas.gamma + 1.0))
    )


def beta_from_sigma_as_printed(sigma_abs: float, geom: ParticleGeometry, gas: GasConditions) -> float:
    """Literal published form of the heating coefficient, kept for documentation.

    Smaller than :func:`beta_from_sigma` by exactly 4*(1/alpha_acc); it does
    not close the energy balance and is not used by the pipeline.
    """
    if sigma_abs < 0.0:
        raise DomainError(f"sigma_abs must be non-negative, got {sigma_abs}")
    return (
        (sigma_abs / geom.surface)
        * (2.0 * gas.t0 / gas.c_bar)
        * ((gas.gamma - 1.0) / (gas.gamma + 1.0))
    )


def sigma_from_beta_radius(beta_heat: float, r_hydro: float, gas: GasConditions) -> float:
    """Absorption cross-section (m^2) from the heating coefficient and radius.

    Exact inverse of :func:`beta_from_sigma` for a sphere (S = 4 pi r^2);
    reduces to the published expression when alpha_acc = 1.
    """
    if r_hydro <= 0.0:
        raise DomainError(f"r_hydro must be positive, got {r_hydro}")
    return (
        gas.alpha_acc
        * beta_heat
        * r_hydro**2
        * (math.pi * gas.c_bar / (2.0 * gas.t0))
        * ((gas.gamma + 1.0) / (gas.gamma - 1.0))
    )


def rayleigh_sigma(
    geom: ParticleGeometry, eps: DielectricConstant, wavelength: float
) -> tuple[float, bool]:
    """Rayleigh absorption cross-section (m^2) of a uniform dielectric sphere.

    sigma = 6 pi (V/lambda) Im((eps-1)/(eps+2)), exact complex arithmetic.
    Returns ``(sigma, size_warning)``; the flag is True when r_hydro exceeds
    wavelength/10 and the Rayleigh assumption is questionable.
    """
    if wavelength <= 0.0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    e = complex(eps.eps_real, eps.eps_imag)
    sigma = 6.0 * math.pi * (geom.volume / wavelength) * ((e - 1.0) / (e + 2.0)).imag
    return sigma, geom.r_hydro > wavelength / 10.0


def epsilon_imag_from_sigma_ratio(
    sigma_over_volume: float, eps_real: float, wavelength: float
) -> float:
    """Imaginary dielectric constant from a cross-section per volume (1/m).

    Inverts the Rayleigh expression; of the two roots of the quadratic in
    eps_imag the smaller positive one is returned (the physical small-loss
    branch), and it round-trips with :func:`rayleigh_sigma`.
    """
    if sigma_over_volume < 0.0:
        raise DomainError(f"sigma_over_volume must be non-negative, got {sigma_over_volume}")
    if sigma_over_volume == 0.0:
        return 0.0
    # ratio = (6 pi / lambda) * 3 e'' / ((e'+2)^2 + e''^2)  =>
    # r e''^2 - (18 pi / lambda) e'' + r (e'+2)^2 = 0
    b = 18.0 * math.pi / wavelength
    disc = b * b - 4.0 * sigma_over_volume**2 * (eps_real + 2.0) ** 2
    if disc < 0.0:
        raise DomainError(
            f"sigma/V = {sigma_over_volume:.6g} 1/m exceeds the Rayleigh maximum "
            f"{b / (2.0 * (eps_real + 2.0)):.6g} 1/m for eps_real = {eps_real}"
        )
    # smaller root via the root product, stable when disc ~ b^2
    return 2.0 * sigma_over_volume * (eps_real + 2.0) ** 2 / (b + math.sqrt(disc))


def bulk_absorption_coefficient(eps: DielectricConstant, wavelength: float) -> float:
    """Bulk absorption coefficient (1/m): 4 pi Im(sqrt(eps)) / lambda."""
    if wavelength <= 0.0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    kappa = cmath.sqrt(complex(eps.eps_real, eps.eps_imag)).imag
    return 4.0 * math.pi * kappa / wavelength


def damping_rate(r: float, gas: GasConditions, density: float = 3500.0) -> float:
    """Gas damping rate (1/s) of a sphere of radius r (m) in a rarefied gas."""
    if r <= 0.0:
        raise DomainError(f"radius must be positive, got {r}")
    if density <= 0.0:
        raise DomainError(f"density must be positive, got {density}")
    return (
        0.619
        * (9.0 / (math.sqrt(2.0 * math.pi) * density))
        * math.sqrt(gas.molar_mass / (R_GAS * gas.t0))
        * gas.p_gas
        / r
    )


def radius_from_damping(gamma: float, gas: GasConditions, density: float = 3500.0) -> float:
    """Hydrodynamic radius (m): exact algebraic inverse of :func:`damping_rate`."""
    if gamma <= 0.0:
        raise DomainError(f"damping rate must be positive, got {gamma}")
    return (
        0.619
        * (9.0 / (math.sqrt(2.0 * math.pi) * density))
        * math.sqrt(gas.molar_mass / (R_GAS * gas.t0))
        * gas.p_gas
        / gamma
    )


def esr_sensitivity(inp: EsrSensitivityInputs, slope: float) -> tuple[float, float]:
    """Shot-noise temperature sensitivity of the ESR thermometer.

    Returns ``(eta_t, resolution)``: eta_t = linewidth / (contrast *
    sqrt(count_rate) * |dD/dT|) in K/sqrt(Hz), and the single-point
    resolution eta_t / sqrt(dwell_per_point) in K.
    """
    if slope == 0.0:
        raise DomainError("slope must be nonzero")
    eta_t = inp.linewidth / (inp.contrast * math.sqrt(inp.count_rate) * abs(slope))
    return eta_t, eta_t / math.sqrt(inp.dwell_per_point)
