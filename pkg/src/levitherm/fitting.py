"""Damped least-squares engine and the named fits built on it.

The solver is a Levenberg-Marquardt style damped Gauss-Newton iteration
with a central finite-difference Jacobian. On top of it sit the four
estimation tasks of the analysis chain: the alpha-corrected temperature
calibration, the joint heating fit over laser intensity and gas pressure,
the ensemble power-law fit with its multiplicative confidence band, and
the fixed-exponent model comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, FitFailure
from .physics import GasConditions, ZfsPolynomial, invert_zfs

Array = np.ndarray

# Damping bounds for the Levenberg-Marquardt loop. Outside this window the
# step is either effectively Gauss-Newton or effectively zero.
_LAMBDA_INIT = 1e-3
_LAMBDA_MIN = 1e-15
_LAMBDA_MAX = 1e15


@dataclass
class FitProblem:
    """A weighted nonlinear least-squares problem.

    ``residual`` maps a parameter vector to the weighted residual vector;
    the solver minimizes its squared norm. ``sigma_scaled`` declares that
    the residuals are already in units of their standard deviation, in
    which case the covariance is the plain normal-equations inverse
    instead of being rescaled by the residual variance.
    """

    residual: Callable[[Array], Array]
    names: tuple[str, ...]
    initial: Array
    lower: Array | None = None
    upper: Array | None = None
    step_tol: float = 1e-10
    grad_tol: float = 1e-12
    max_iterations: int = 200
    sigma_scaled: bool = False


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    params: Array
    covariance: Array | None
    residual_norm: float
    iterations: int
    converged: bool
    singular: bool
    message: str

    def param(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def stderr(self, name: str) -> float:
        if self.covariance is None:
            raise FitFailure("no covariance available: fit did not converge")
        j = self.names.index(name)
        return math.sqrt(max(float(self.covariance[j, j]), 0.0))


def finite_difference_jacobian(residual: Callable[[Array], Array], params: Array) -> Array:
    """Central-difference Jacobian with per-parameter step max(1e-6|p|, 1e-12)."""
    p = np.asarray(params, dtype=float)
    r0 = np.asarray(residual(p), dtype=float)
    jac = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = max(1e-6 * abs(p[j]), 1e-12)
        up = p.copy()
        dn = p.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (np.asarray(residual(up), float) - np.asarray(residual(dn), float)) / (2.0 * h)
    return jac


def least_squares_solve(problem: FitProblem) -> FitResult:
    """Minimize the squared residual norm by damped Gauss-Newton iteration.

    The damping term is lambda * diag(J^T J), adapted by a factor of 10 on
    each rejected or accepted step, which keeps the iteration equivariant
    under parameter rescaling. Convergence is declared on a scaled relative
    step below ``step_tol`` or a gradient norm below ``grad_tol`` times its
    initial value. Hitting the iteration cap returns a non-converged result
    with diagnostics rather than raising. A singular normal matrix is
    handled by the damped pseudo-solution and flagged on the result.
    """
    p = np.asarray(problem.initial, dtype=float).copy()
    n = p.size
    if p.ndim != 1 or n == 0:
        raise DomainError("initial parameters must be a non-empty 1-D vector")
    if len(problem.names) != n:
        raise DomainError(f"{len(problem.names)} names for {n} parameters")
    for bound in (problem.lower, problem.upper):
        if bound is not None and np.asarray(bound).shape != p.shape:
            raise DomainError("bounds must match the parameter vector shape")
    if problem.lower is not None and np.any(p < problem.lower):
        raise DomainError("initial parameters below lower bounds")
    if problem.upper is not None and np.any(p > problem.upper):
        raise DomainError("initial parameters above upper bounds")

    r = np.asarray(problem.residual(p), dtype=float)
    if r.ndim != 1:
        raise DomainError("residual evaluator must return a 1-D vector")
    if r.size < n:
        raise DomainError(f"residual dimension {r.size} below parameter dimension {n}")
    if not np.all(np.isfinite(r)):
        raise DomainError("initial residuals are not finite")

    rss = float(r @ r)
    lam = _LAMBDA_INIT
    iterations = 0
    converged = rss == 0.0
    singular = False
    message = "zero residual at start" if converged else ""
    grad_norm0: float | None = None

    while not converged and iterations < problem.max_iterations:
        jac = finite_difference_jacobian(problem.residual, p)
        normal = jac.T @ jac
        grad = jac.T @ r
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm0 is None:
            grad_norm0 = grad_norm
        if grad_norm <= problem.grad_tol * grad_norm0:
            converged = True
            message = "gradient criterion"
            break

        diag = np.diag(normal).copy()
        dead = diag <= 0.0
        if np.any(dead):
            # a parameter the residuals do not respond to: damp it on an
            # absolute scale so the system stays solvable, flag the result
            singular = True
            diag[dead] = 1.0
        scale = np.sqrt(diag)

        accepted = False
        saw_finite_trial = False
        while lam <= _LAMBDA_MAX:
            try:
                delta = np.linalg.solve(normal + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                singular = True
                delta = np.linalg.lstsq(normal + lam * np.diag(diag), -grad, rcond=None)[0]
            trial = p + delta
            if problem.lower is not None:
                trial = np.maximum(trial, problem.lower)
            if problem.upper is not None:
                trial = np.minimum(trial, problem.upper)
            r_trial = np.asarray(problem.residual(trial), dtype=float)
            if np.all(np.isfinite(r_trial)):
                rss_trial = float(r_trial @ r_trial)
                saw_finite_trial = True
            else:
                rss_trial = math.inf
            if rss_trial < rss:
                step = trial - p
                p, r, rss = trial, r_trial, rss_trial
                lam = max(lam / 10.0, _LAMBDA_MIN)
                iterations += 1
                accepted = True
                step_measure = float(np.linalg.norm(scale * step))
                param_measure = float(np.linalg.norm(scale * p))
                if rss == 0.0:
                    converged = True
                    message = "zero residual"
                elif step_measure <= problem.step_tol * max(param_measure, 1e-300):
                    converged = True
                    message = "step criterion"
                break
            lam *= 10.0
        if not accepted:
            # steps of every damped length fail to reduce the squared norm:
            # either the minimum is resolved to machine precision, or the
            # residuals blow up around the current point
            if saw_finite_trial:
                converged = True
                message = "no descent within floating-point resolution"
            else:
                message = "residuals not finite near current point"
            break

    if not converged and iterations >= problem.max_iterations:
        message = "maximum iterations reached"

    covariance: Array | None = None
    if converged:
        jac = finite_difference_jacobian(problem.residual, p)
        normal = jac.T @ jac
        try:
            cov = np.linalg.inv(normal)
        except np.linalg.LinAlgError:
            singular = True
            cov = np.linalg.pinv(normal)
        if not problem.sigma_scaled:
            dof = max(r.size - n, 1)
            cov = cov * (rss / dof)
        covariance = (cov + cov.T) / 2.0

    return FitResult(
        names=tuple(problem.names),
        params=p,
        covariance=covariance,
        residual_norm=math.sqrt(rss),
        iterations=iterations,
        converged=converged,
        singular=singular,
        message=message,
    )


# --- temperature calibration ------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    """Zero-field-splitting calibration against setpoint temperatures.

    The model keeps the cubic temperature coefficients fixed and frees the
    constant term ``a0`` together with a temperature correction ``alpha``:
    D(T_set) = a0 + a1(alpha T) + a2(alpha T)^2 + a3(alpha T)^3.
    """

    a0: float
    alpha: float
    covariance: Array
    fit: FitResult

    @property
    def d_strain(self) -> float:
        """Constant offset relative to the reference splitting."""
        return self.a0 - ZfsPolynomial().a0

    def corrected_temperature(self, t_set):
        return self.alpha * np.asarray(t_set, dtype=float)


def fit_calibration_alpha(
    t_set: Sequence[float],
    d_measured: Sequence[float],
    poly: ZfsPolynomial | None = None,
    *,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-12,
    max_iterations: int = 200,
) -> CalibrationResult:
    """Fit (a0, alpha) of the splitting polynomial to setpoint data.

    Needs at least 3 pairs spanning at least 50 K of setpoint temperature.
    """
    base = poly if poly is not None else ZfsPolynomial()
    t = np.asarray(t_set, dtype=float)
    d = np.asarray(d_measured, dtype=float)
    if t.shape != d.shape or t.ndim != 1:
        raise DomainError("t_set and d_measured must be 1-D arrays of equal length")
    if t.size < 3:
        raise DomainError(f"need at least 3 calibration pairs, got {t.size}")
    span = float(np.max(t) - np.min(t))
    if span < 50.0:
        raise DomainError(f"degenerate temperature span {span:.1f} K, need at least 50 K")

    def residual(params: Array) -> Array:
        a0, alpha = params
        ts = alpha * t
        model = a0 + ts * (base.a1 + ts * (base.a2 + ts * base.a3))
        return d - model

    result = least_squares_solve(
        FitProblem(
            residual=residual,
            names=("a0", "alpha"),
            initial=np.array([base.a0, 1.0]),
            step_tol=step_tol,
            grad_tol=grad_tol,
            max_iterations=max_iterations,
        )
    )
    if not result.converged:
        raise FitFailure(
            "calibration fit did not converge",
            diagnostics={"message": result.message, "iterations": result.iterations},
        )
    return CalibrationResult(
        a0=result.param("a0"),
        alpha=result.param("alpha"),
        covariance=result.covariance,
        fit=result,
    )


# --- joint heating fit --------------------------------------------------------


@dataclass(frozen=True)
class HeatingFitResult:
    """Heating coefficient and strain offset from spin-resonance data.

    ``beta_heat`` (K Pa m^2/W) scales internal temperature rise with
    intensity over pressure; ``d_strain`` (Hz) is the splitting offset at
    vanishing laser power.
    """

    beta_heat: float
    d_strain: float
    covariance: Array
    fitted_temperatures: Array
    fit: FitResult


def fit_heating(
    intensity: Sequence[float],
    pressure: Sequence[float],
    d_measured: Sequence[float],
    sigma_d: Sequence[float] | None = None,
    poly: ZfsPolynomial | None = None,
    gas: GasConditions | None = None,
    *,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-12,
    max_iterations: int = 200,
) -> HeatingFitResult:
    """Jointly fit (beta_heat, d_strain) over intensity and pressure.

    Model: d_i = D(T0 + beta * I_i / p_i) + d_strain, with the polynomial
    temperature coefficients fixed. Only the ambient temperature is taken
    from ``gas``; pressures enter per point. Points are weighted by
    1/sigma_d when uncertainties are given, in which case the covariance
    is not rescaled by the residual variance.
    """
    base = poly if poly is not None else ZfsPolynomial()
    if base.d_strain != 0.0:
        base = replace(base, d_strain=0.0)
    t0 = gas.t0 if gas is not None else 294.0
    intens = np.asarray(intensity, dtype=float)
    press = np.asarray(pressure, dtype=float)
    d = np.asarray(d_measured, dtype=float)
    if not (intens.shape == press.shape == d.shape) or intens.ndim != 1:
        raise DomainError("intensity, pressure, d_measured must be 1-D arrays of equal length")
    if intens.size < 4:
        raise DomainError(f"need at least 4 heating points, got {intens.size}")
    if np.any(press <= 0.0):
        raise DomainError("pressures must be positive")
    if np.any(intens < 0.0):
        raise DomainError("intensities must be non-negative")
    if np.all(intens == 0.0):
        raise DomainError("all intensities are zero: beta_heat is unidentifiable")
    if np.unique(press).size < 2 or np.unique(intens).size < 2:
        raise DomainError("need at least 2 distinct pressures and 2 distinct intensities")
    if sigma_d is not None:
        sig = np.asarray(sigma_d, dtype=float)
        if sig.shape != d.shape:
            raise DomainError("sigma_d must match d_measured in shape")
        if np.any(sig <= 0.0):
            raise DomainError("sigma_d must be positive")
        weights = 1.0 / sig
    else:
        weights = np.ones_like(d)

    quotient = intens / press

    def residual(params: Array) -> Array:
        beta, d_strain = params
        model = base.value(t0 + beta * quotient) + d_strain
        return (d - model) * weights

    # initialize from the lowest-heating point (offset) and a median of
    # per-point inversions (slope)
    t_lo, t_hi = base.valid_temperature_range
    d_strain0 = float(d[np.argmin(quotient)] - base.value(t0))
    corrected = np.clip(d - d_strain0, base.value(t_hi) + 1.0, base.value(t_lo) - 1.0)
    t_est = invert_zfs(base, corrected)
    positive = quotient > 0.0
    slopes = (t_est[positive] - t0) / quotient[positive]
    beta0 = float(np.median(slopes[slopes > 0.0])) if np.any(slopes > 0.0) else 0.0

    result = least_squares_solve(
        FitProblem(
            residual=residual,
            names=("beta_heat", "d_strain"),
            initial=np.array([beta0, d_strain0]),
            sigma_scaled=sigma_d is not None,
            step_tol=step_tol,
            grad_tol=grad_tol,
            max_iterations=max_iterations,
        )
    )
    if not result.converged:
        raise FitFailure(
            "heating fit did not converge",
            diagnostics={"message": result.message, "iterations": result.iterations},
        )
    beta = result.param("beta_heat")
    return HeatingFitResult(
        beta_heat=beta,
        d_strain=result.param("d_strain"),
        covariance=result.covariance,
        fitted_temperatures=t0 + beta * quotient,
        fit=result,
    )


# --- ensemble power law -------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    """Power law sigma = amplitude * r**exponent with a 2 sigma log band."""

    amplitude: float
    exponent: float
    fixed_exponent: bool
    sigma_log: float
    a_minus: float
    a_plus: float
    rss_log: float
    n_records: int

    @property
    def amplitude_units(self) -> str:
        """Units of the amplitude for sigma in m^2 and r in m."""
        return f"m^({2.0 - self.exponent:g})"

    def predict(self, r) -> Array:
        return self.amplitude * np.asarray(r, dtype=float) ** self.exponent


def _validate_power_law_input(r_hydro, sigma_abs) -> tuple[Array, Array]:
    r = np.asarray(r_hydro, dtype=float)
    s = np.asarray(sigma_abs, dtype=float)
    if r.shape != s.shape or r.ndim != 1:
        raise DomainError("r_hydro and sigma_abs must be 1-D arrays of equal length")
    if r.size < 3:
        raise DomainError(f"need at least 3 records, got {r.size}")
    if np.any(r <= 0.0) or np.any(s <= 0.0):
        raise DomainError("power-law fit needs strictly positive radii and cross-sections")
    return r, s


def fit_power_law(
    r_hydro: Sequence[float],
    sigma_abs: Sequence[float],
    exponent: float | None = None,
) -> PowerLawFit:
    """Fit sigma = a * r**n in log-log space.

    With ``exponent=None`` both log(a) and n come from a linear least
    squares on (log r, log sigma); with a fixed exponent only the log
    amplitude is fitted (the mean log ratio). The residual sum of squares
    is reported in log space for model comparison.
    """
    r, s = _validate_power_law_input(r_hydro, sigma_abs)
    x = np.log(r)
    y = np.log(s)
    if exponent is None:
        design = np.column_stack([x, np.ones_like(x)])
        (n, log_a), *_ = np.linalg.lstsq(design, y, rcond=None)
        n = float(n)
        log_a = float(log_a)
    else:
        n = float(exponent)
        log_a = float(np.mean(y - n * x))
    resid = y - (log_a + n * x)
    sigma_log = float(np.std(resid))
    amplitude = math.exp(log_a)
    return PowerLawFit(
        amplitude=amplitude,
        exponent=n,
        fixed_exponent=exponent is not None,
        sigma_log=sigma_log,
        a_minus=amplitude * math.exp(-2.0 * sigma_log),
        a_plus=amplitude * math.exp(2.0 * sigma_log),
        rss_log=float(resid @ resid),
        n_records=int(r.size),
    )


def confidence_band(
    fit: PowerLawFit,
    r_hydro: Sequence[float],
    sigma_abs: Sequence[float],
) -> tuple[float, float]:
    """2 sigma multiplicative band around the fitted amplitude.

    sigma_log is the standard deviation of the log residuals of the given
    records against the fit; the band is amplitude * exp(-/+ 2 sigma_log),
    so a_plus/a equals a/a_minus exactly.
    """
    r, s = _validate_power_law_input(r_hydro, sigma_abs)
    resid = np.log(s) - (math.log(fit.amplitude) + fit.exponent * np.log(r))
    sigma_log = float(np.std(resid))
    return (
        fit.amplitude * math.exp(-2.0 * sigma_log),
        fit.amplitude * math.exp(2.0 * sigma_log),
    )


@dataclass(frozen=True)
class ExponentComparison:
    """Free-exponent fit next to fixed n=2 and n=3 alternatives."""

    free: PowerLawFit
    fixed_two: PowerLawFit
    fixed_three: PowerLawFit

    @property
    def better_fixed_exponent(self) -> int:
        """Fixed exponent with the lower log-space residual sum."""
        return 3 if self.fixed_three.rss_log < self.fixed_two.rss_log else 2


def compare_exponents(
    r_hydro: Sequence[float],
    sigma_abs: Sequence[float],
) -> ExponentComparison:
    """Run the power-law fit free and with n fixed to 2 and to 3."""
    return ExponentComparison(
        free=fit_power_law(r_hydro, sigma_abs, exponent=None),
        fixed_two=fit_power_law(r_hydro, sigma_abs, exponent=2.0),
        fixed_three=fit_power_law(r_hydro, sigma_abs, exponent=3.0),
    )
