"""Unit tests for the closed-form physics layer.

Expected values are computed inside the tests from independent expressions
(direct arithmetic, finite differences, complex arithmetic) rather than by
calling the code under test.
"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levitherm.errors import DomainError
from levitherm.physics import (
    DielectricConstant,
    EsrSensitivityInputs,
    GasConditions,
    ParticleGeometry,
    ZfsPolynomial,
    absorbed_power,
    beta_from_sigma,
    beta_from_sigma_as_printed,
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

TOYLI = ZfsPolynomial()


def toyli_direct(t):
    # independent oracle: plain arithmetic with the published coefficients
    return 2.8697e9 + 9.7e4 * t - 3.7e2 * t**2 + 0.17 * t**3


class TestZfsPolynomial:
    def test_eval_at_300(self):
        assert eval_zfs(TOYLI, 300.0) == pytest.approx(2.87009e9, rel=1e-12)

    def test_eval_at_294(self):
        assert eval_zfs(TOYLI, 294.0) == pytest.approx(2870556751.28, rel=1e-12)
        assert eval_zfs(TOYLI, 294.0) == pytest.approx(2.8705568e9, rel=1e-7)

    def test_eval_at_650(self):
        assert eval_zfs(TOYLI, 650.0) == pytest.approx(2823111250.0, rel=1e-12)

    def test_eval_matches_direct_polynomial(self):
        for t in np.linspace(150.0, 1000.0, 23):
            assert eval_zfs(TOYLI, t) == pytest.approx(toyli_direct(t), rel=1e-14)

    def test_strain_offset_adds(self):
        poly = ZfsPolynomial(d_strain=3e6)
        assert eval_zfs(poly, 300.0) == pytest.approx(2.87009e9 + 3e6, rel=1e-12)

    def test_out_of_range_raises_and_names_range(self):
        with pytest.raises(DomainError, match=r"150"):
            eval_zfs(TOYLI, 100.0)
        with pytest.raises(DomainError):
            eval_zfs(TOYLI, 1200.0)

    def test_constructor_rejects_nonmonotone_range(self):
        # cubic turns over near 146 K and 1305 K
        with pytest.raises(DomainError):
            ZfsPolynomial(valid_temperature_range=(100.0, 1000.0))
        with pytest.raises(DomainError):
            ZfsPolynomial(valid_temperature_range=(150.0, 1400.0))

    def test_frozen(self):
        with pytest.raises(Exception):
            TOYLI.a0 = 0.0

    @given(st.floats(min_value=151.0, max_value=999.0))
    @settings(max_examples=50, deadline=None)
    def test_strictly_decreasing(self, t):
        assert eval_zfs(TOYLI, t + 1.0) < eval_zfs(TOYLI, t)


class TestZfsSlope:
    def test_at_294(self):
        assert zfs_slope(TOYLI, 294.0) == pytest.approx(-76477.64, rel=1e-10)

    def test_at_300(self):
        # analytic derivative: a1 + 2 a2 T + 3 a3 T^2 = 97000 - 222000 + 45900
        assert zfs_slope(TOYLI, 300.0) == pytest.approx(-79100.0, rel=1e-12)

    def test_matches_finite_difference(self):
        h = 1e-3
        for t in (200.0, 294.0, 500.0, 900.0):
            fd = (toyli_direct(t + h) - toyli_direct(t - h)) / (2.0 * h)
            assert zfs_slope(TOYLI, t) == pytest.approx(fd, rel=1e-6)

    def test_negative_on_valid_range(self):
        assert np.all(zfs_slope(TOYLI, np.linspace(150.0, 1000.0, 200)) < 0.0)

    @given(st.floats(min_value=-1e5, max_value=-1.0), st.floats(min_value=160.0, max_value=900.0))
    @settings(max_examples=25, deadline=None)
    def test_linear_case_constant_slope(self, a1, t):
        poly = ZfsPolynomial(a1=a1, a2=0.0, a3=0.0)
        assert zfs_slope(poly, t) == a1

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            zfs_slope(TOYLI, 1100.0)


class TestInvertZfs:
    def test_example_300k(self):
        assert invert_zfs(TOYLI, 2.87009e9) == pytest.approx(300.0, abs=1e-6)

    def test_round_trip_random(self):
        rng = np.random.default_rng(42)
        temps = rng.uniform(200.0, 700.0, size=50)
        for t in temps:
            assert invert_zfs(TOYLI, eval_zfs(TOYLI, t)) == pytest.approx(t, abs=1e-6)

    def test_round_trip_vectorized(self):
        rng = np.random.default_rng(7)
        temps = rng.uniform(200.0, 700.0, size=1000)
        back = invert_zfs(TOYLI, eval_zfs(TOYLI, temps))
        assert np.max(np.abs(back - temps)) < 1e-6

    def test_above_attainable_raises(self):
        with pytest.raises(DomainError, match="attainable"):
            invert_zfs(TOYLI, 3.0e9)

    def test_below_attainable_raises(self):
        with pytest.raises(DomainError):
            invert_zfs(TOYLI, 2.5e9)


class TestTemperatureUncertainty:
    def test_paper_scale(self):
        # 150 kHz / 76.47764 kHz/K
        assert temperature_uncertainty(1.5e5, TOYLI, 294.0) == pytest.approx(1.9614, abs=2e-4)

    def test_zero(self):
        assert temperature_uncertainty(0.0, TOYLI, 400.0) == 0.0

    def test_unit_case(self):
        assert temperature_uncertainty(76477.64, TOYLI, 294.0) == pytest.approx(1.0, rel=1e-9)

    def test_negative_sigma_rejected(self):
        with pytest.raises(DomainError):
            temperature_uncertainty(-1.0, TOYLI, 294.0)


GAS_3000 = GasConditions(p_gas=3000.0)
GEOM_100 = ParticleGeometry(r_hydro=100e-9)


class TestPowerBalance:
    def test_absorbed_power(self):
        assert absorbed_power(4e-18, 1e10) == pytest.approx(4e-8, rel=1e-12)
        assert absorbed_power(0.0, 5e9) == 0.0
        assert absorbed_power(3e-18, 0.0) == 0.0

    def test_absorbed_power_rejects_negative(self):
        with pytest.raises(DomainError):
            absorbed_power(-1e-18, 1e10)

    def test_conduction_power_example(self):
        # independent arithmetic: S * (p c / 8 T0) * 6 * dT with S = 4 pi r^2
        s = 4.0 * math.pi * (100e-9) ** 2
        expected = s * (3000.0 * 503.0 / (8.0 * 294.0)) * 6.0 * 100.0
        got = conduction_power(GEOM_100, GAS_3000, 394.0)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(4.838e-8, rel=1e-3)

    def test_conduction_zero_at_ambient(self):
        assert conduction_power(GEOM_100, GAS_3000, 294.0) == 0.0

    def test_conduction_scales_with_surface(self):
        p1 = conduction_power(ParticleGeometry(r_hydro=50e-9), GAS_3000, 400.0)
        p2 = conduction_power(ParticleGeometry(r_hydro=100e-9), GAS_3000, 400.0)
        assert p2 == pytest.approx(4.0 * p1, rel=1e-12)

    def test_conduction_negative_below_ambient(self):
        assert conduction_power(GEOM_100, GAS_3000, 200.0) < 0.0

    def test_equilibrium_temperature(self):
        assert equilibrium_temperature(2.4807e-5, 1e10, GAS_3000) == pytest.approx(376.69, abs=0.01)
        assert equilibrium_temperature(1e-5, 0.0, GAS_3000) == 294.0
        assert equilibrium_temperature(0.0, 1e12, GAS_3000) == 294.0

    def test_beta_from_sigma_example(self):
        beta = beta_from_sigma(4e-18, GEOM_100, GAS_3000)
        assert beta == pytest.approx(2.4807e-5, rel=1e-4)
        assert beta_from_sigma(0.0, GEOM_100, GAS_3000) == 0.0

    def test_beta_inverse_with_surface(self):
        b1 = beta_from_sigma(4e-18, ParticleGeometry(r_hydro=100e-9), GAS_3000)
        # halving the surface means radius / sqrt(2)
        b2 = beta_from_sigma(4e-18, ParticleGeometry(r_hydro=100e-9 / math.sqrt(2.0)), GAS_3000)
        assert b2 == pytest.approx(2.0 * b1, rel=1e-12)

    def test_printed_variant_is_quarter(self):
        b = beta_from_sigma(4e-18, GEOM_100, GAS_3000)
        b_printed = beta_from_sigma_as_printed(4e-18, GEOM_100, GAS_3000)
        assert b_printed == pytest.approx(b / 4.0, rel=1e-12)

    def test_sigma_from_beta_example(self):
        sigma = sigma_from_beta_radius(2.480665514593359e-05, 100e-9, GAS_3000)
        assert sigma == pytest.approx(4e-18, rel=1e-9)
        assert sigma_from_beta_radius(0.0, 50e-9, GAS_3000) == 0.0

    def test_sigma_beta_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            sigma = 10.0 ** rng.uniform(-20, -16)
            r = 10.0 ** rng.uniform(-8, -6.5)
            alpha = rng.uniform(0.3, 1.0)
            gas = GasConditions(p_gas=rng.uniform(1500, 9000), alpha_acc=alpha)
            geom = ParticleGeometry(r_hydro=r)
            beta = beta_from_sigma(sigma, geom, gas)
            assert sigma_from_beta_radius(beta, r, gas) == pytest.approx(sigma, rel=1e-12)

    def test_energy_balance_closes(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            sigma = 10.0 ** rng.uniform(-20, -16)
            r = 10.0 ** rng.uniform(-8, -6.5)
            gas = GasConditions(
                p_gas=rng.uniform(1500, 9000),
                t0=rng.uniform(280, 310),
                alpha_acc=rng.uniform(0.2, 1.0),
            )
            geom = ParticleGeometry(r_hydro=r)
            intensity = 10.0 ** rng.uniform(8, 11)
            beta = beta_from_sigma(sigma, geom, gas)
            t_eq = equilibrium_temperature(beta, intensity, gas)
            p_abs = absorbed_power(sigma, intensity)
            p_cond = conduction_power(geom, gas, t_eq)
            assert p_cond == pytest.approx(p_abs, rel=1e-10)


class TestRayleigh:
    def test_sigma_over_volume_example(self):
        eps = DielectricConstant(eps_imag=2.4e-4)
        geom = ParticleGeometry(r_hydro=50e-9)
        sigma, warn = rayleigh_sigma(geom, eps, 1550e-9)
        e = complex(5.7, 2.4e-4)
        expected = 6.0 * math.pi * geom.volume / 1550e-9 * ((e - 1) / (e + 2)).imag
        assert sigma == pytest.approx(expected, rel=1e-14)
        assert sigma / geom.volume == pytest.approx(147.7, abs=0.05)
        assert not warn

    def test_size_warning(self):
        _, warn = rayleigh_sigma(ParticleGeometry(r_hydro=200e-9), DielectricConstant(0.01), 1550e-9)
        assert warn

    def test_lossless_is_zero(self):
        sigma, _ = rayleigh_sigma(GEOM_100, DielectricConstant(eps_imag=0.0), 1550e-9)
        assert sigma == 0.0

    def test_linear_in_volume(self):
        eps = DielectricConstant(eps_imag=1e-3)
        s1, _ = rayleigh_sigma(ParticleGeometry(r_hydro=40e-9), eps, 1550e-9)
        s2, _ = rayleigh_sigma(ParticleGeometry(r_hydro=80e-9), eps, 1550e-9)
        assert s2 == pytest.approx(8.0 * s1, rel=1e-12)

    def test_epsilon_inversion_example(self):
        assert epsilon_imag_from_sigma_ratio(147.6795874876694, 5.7, 1550e-9) == pytest.approx(
            2.4e-4, rel=1e-6
        )
        assert epsilon_imag_from_sigma_ratio(0.0, 5.7, 1550e-9) == 0.0

    def test_epsilon_round_trip(self):
        for eps_imag in 10.0 ** np.linspace(-6, -1, 40):
            eps = DielectricConstant(eps_imag=eps_imag)
            sigma, _ = rayleigh_sigma(GEOM_100, eps, 1550e-9)
            back = epsilon_imag_from_sigma_ratio(sigma / GEOM_100.volume, 5.7, 1550e-9)
            assert back == pytest.approx(eps_imag, rel=1e-10)

    def test_epsilon_inversion_rejects_unreachable_ratio(self):
        with pytest.raises(DomainError, match="Rayleigh maximum"):
            epsilon_imag_from_sigma_ratio(1e7, 5.7, 1550e-9)


class TestBulkAbsorption:
    def test_lower_endpoint(self):
        a = bulk_absorption_coefficient(DielectricConstant(eps_imag=2.4e-4), 1550e-9)
        expected = 4.0 * math.pi * cmath.sqrt(complex(5.7, 2.4e-4)).imag / 1550e-9
        assert a == pytest.approx(expected, rel=1e-14)
        assert a / 100.0 == pytest.approx(4.08, rel=0.02)  # cm^-1

    def test_upper_endpoint(self):
        a = bulk_absorption_coefficient(DielectricConstant(eps_imag=3.9e-2), 1550e-9)
        assert a / 100.0 == pytest.approx(662.0, rel=0.01)

    def test_lossless(self):
        assert bulk_absorption_coefficient(DielectricConstant(eps_imag=0.0), 1550e-9) == 0.0

    def test_small_loss_approximation(self):
        # 2 pi eps'' / (sqrt(eps') lambda) within 0.1 % below eps'' = 1e-2
        for eps_imag in (1e-6, 1e-4, 1e-3, 9e-3):
            exact = bulk_absorption_coefficient(DielectricConstant(eps_imag=eps_imag), 1550e-9)
            approx = 2.0 * math.pi * eps_imag / (math.sqrt(5.7) * 1550e-9)
            assert exact == pytest.approx(approx, rel=1e-3)


class TestDamping:
    def test_example(self):
        # independent arithmetic with R = N_A k_B
        expected = (
            0.619 * 9.0 / (math.sqrt(2.0 * math.pi) * 3500.0)
            * math.sqrt(0.02897 / (8.314462618 * 294.0)) * 3000.0 / 100e-9
        )
        got = damping_rate(100e-9, GAS_3000, density=3500.0)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(6.558e4, rel=1e-3)

    def test_proportional_to_pressure(self):
        g1 = damping_rate(100e-9, GasConditions(p_gas=2000.0))
        g2 = damping_rate(100e-9, GasConditions(p_gas=4000.0))
        assert g2 == pytest.approx(2.0 * g1, rel=1e-12)

    def test_inverse_in_radius(self):
        g1 = damping_rate(100e-9, GAS_3000)
        g2 = damping_rate(200e-9, GAS_3000)
        assert g2 == pytest.approx(g1 / 2.0, rel=1e-12)

    def test_radius_inverse_example(self):
        gamma = damping_rate(100e-9, GAS_3000)
        assert radius_from_damping(gamma, GAS_3000) == pytest.approx(100e-9, rel=1e-12)

    def test_round_trip_random(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            r = 10.0 ** rng.uniform(-8, -6)
            gas = GasConditions(p_gas=rng.uniform(1000, 9000))
            assert radius_from_damping(damping_rate(r, gas), gas) == pytest.approx(r, rel=1e-12)

    def test_zero_damping_rejected(self):
        with pytest.raises(DomainError):
            radius_from_damping(0.0, GAS_3000)


class TestSensitivity:
    def test_paper_numbers(self):
        inp = EsrSensitivityInputs(linewidth=10e6, contrast=0.07, count_rate=2e5, dwell_per_point=1.5)
        eta, res = esr_sensitivity(inp, -7.4e4)
        assert eta == pytest.approx(10e6 / (0.07 * math.sqrt(2e5) * 7.4e4), rel=1e-14)
        assert eta == pytest.approx(4.32, abs=0.01)
        assert res == pytest.approx(eta / math.sqrt(1.5), rel=1e-14)
        assert res == pytest.approx(3.52, abs=0.01)

    def test_contrast_halves_eta(self):
        base = EsrSensitivityInputs(linewidth=10e6, contrast=0.05, count_rate=2e5)
        double = EsrSensitivityInputs(linewidth=10e6, contrast=0.10, count_rate=2e5)
        assert esr_sensitivity(double, -7.4e4)[0] == pytest.approx(
            esr_sensitivity(base, -7.4e4)[0] / 2.0, rel=1e-12
        )

    def test_zero_slope_rejected(self):
        inp = EsrSensitivityInputs(linewidth=10e6, contrast=0.07, count_rate=2e5)
        with pytest.raises(DomainError):
            esr_sensitivity(inp, 0.0)


class TestTypeInvariants:
    def test_geometry_derived_quantities(self):
        g = ParticleGeometry(r_hydro=75e-9)
        assert g.surface == pytest.approx(4.0 * math.pi * 75e-9**2, rel=1e-15)
        assert g.volume == pytest.approx(4.0 / 3.0 * math.pi * 75e-9**3, rel=1e-15)

    def test_geometry_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            ParticleGeometry(r_hydro=0.0)

    def test_gas_invariants(self):
        with pytest.raises(DomainError):
            GasConditions(p_gas=-1.0)
        with pytest.raises(DomainError):
            GasConditions(p_gas=1000.0, gamma=0.9)
        with pytest.raises(DomainError):
            GasConditions(p_gas=1000.0, alpha_acc=1.5)
        with pytest.raises(DomainError):
            GasConditions(p_gas=1000.0, alpha_acc=0.0)

    def test_dielectric_invariants(self):
        with pytest.raises(DomainError):
            DielectricConstant(eps_imag=-0.1)
        with pytest.raises(DomainError):
            DielectricConstant(eps_imag=0.1, eps_real=0.9)

    def test_sensitivity_inputs(self):
        with pytest.raises(DomainError):
            EsrSensitivityInputs(linewidth=0.0, contrast=0.1, count_rate=1e5)
        with pytest.raises(DomainError):
            EsrSensitivityInputs(linewidth=1e6, contrast=1.2, count_rate=1e5)

    def test_purity(self):
        a = conduction_power(GEOM_100, GAS_3000, 400.0)
        b = conduction_power(GEOM_100, GAS_3000, 400.0)
        assert a == b
