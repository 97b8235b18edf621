"""Damped Gauss-Newton least squares and the two experiment-specific fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .constants import RB87
from .optics import BeamMode, TrenchGeometry
from .signals import (
    SaturationCurvePoint,
    ZeemanScenario,
    saturation_fractions,
    weak_absorption_coefficient,
    zeeman_spectrum,
)

__all__ = [
    "FitResult",
    "FitError",
    "ConvergenceError",
    "SingularCurvatureError",
    "DegenerateDataError",
    "least_squares",
    "fit_saturation",
    "fit_zeeman",
    "format_fit_report",
]


class FitError(RuntimeError):
    pass


class ConvergenceError(FitError):
    """Iteration budget exhausted before the convergence tests passed."""


class SingularCurvatureError(FitError):
    """The curvature matrix cannot be inverted: a parameter is not constrained by the data."""


class DegenerateDataError(FitError, ValueError):
    pass


@dataclass
class FitResult:
    params: dict[str, float]
    sigmas: dict[str, float]
    chi2: float
    n_points: int
    converged: bool
    n_iter: int = 0
    chi2_initial: float = math.nan
    gradient_norm: float = math.nan
    covariance: np.ndarray = field(default=None, repr=False)

    @property
    def dof(self) -> int:
        return self.n_points - len(self.params)

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan


# parameter bounds are handled by transforms: x = forward(p), p = inverse(x)
def _identity():
    return (lambda p: p), (lambda x: x), (lambda x: 1.0)


def _positive():
    return math.log, math.exp, math.exp


def _unit():
    def fwd(p):
        p = min(max(p, 1e-12), 1 - 1e-12)
        return math.log(p / (1 - p))

    def inv(x):
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)

    def deriv(x):
        p = inv(x)
        return p * (1 - p)

    return fwd, inv, deriv


_TRANSFORMS = {None: _identity, "free": _identity, "positive": _positive, "unit": _unit}


def least_squares(
    model: Callable[[Mapping[str, float]], np.ndarray],
    data: Sequence[float],
    sigmas: Sequence[float] | None,
    initial_params: Mapping[str, float],
    bounds: Mapping[str, str | None] | None = None,
    max_iter: int = 200,
    rel_step: float = 1e-6,
    ftol: float = 1e-12,
    gtol: float = 1e-6,
    weighted: bool = True,
) -> FitResult:
    """Minimise sum(((data - model(params)) / sigmas)^2).

    Gauss-Newton steps in transformed parameter space with step halving
    whenever chi^2 would increase. The Jacobian comes from central
    differences with relative step ``rel_step``. Bounds per parameter are
    ``"positive"`` (log map), ``"unit"`` (logistic map onto [0, 1]) or None.
    Uncertainties are the square roots of the inverse curvature, carried
    back to the natural parameters by the delta method. With
    ``weighted=False`` all sigmas are 1 and the covariance is scaled by the
    reduced chi^2.
    """
    names = list(initial_params)
    y = np.asarray(data, dtype=float)
    if y.size < len(names):
        raise DegenerateDataError("fewer data points than parameters")
    if not weighted or sigmas is None:
        s = np.ones_like(y)
    else:
        s = np.asarray(sigmas, dtype=float)
        if s.shape != y.shape or np.any(s <= 0):
            raise ValueError("sigmas must be positive and match the data")
    bounds = bounds or {}
    tf = {n: _TRANSFORMS[bounds.get(n)]() for n in names}
    theta = np.array([tf[n][0](float(initial_params[n])) for n in names])

    def unpack(th):
        return {n: tf[n][1](t) for n, t in zip(names, th)}

    def resid(th):
        pred = np.asarray(model(unpack(th)), dtype=float)
        return (y - pred) / s

    def jacobian(th):
        cols = []
        for i in range(th.size):
            h = rel_step * max(abs(th[i]), 1.0)
            tp = th.copy()
            tm = th.copy()
            tp[i] += h
            tm[i] -= h
            # (d model / d theta) / s, i.e. minus the residual derivative
            cols.append((resid(tm) - resid(tp)) / (2 * h))
        return np.column_stack(cols)

    r = resid(theta)
    chi2 = float(r @ r)
    chi2_0 = chi2
    converged = False
    n_iter = 0
    grad_norm = math.nan
    for n_iter in range(1, max_iter + 1):
        jac = jacobian(theta)
        jtj = jac.T @ jac
        grad = jac.T @ r  # -(1/2) d chi2 / d theta
        grad_norm = float(np.max(np.abs(grad)))
        _check_curvature(jtj, names)
        step = np.linalg.solve(jtj, grad)
        lam = 1.0
        accepted = False
        for _ in range(40):
            trial = theta + lam * step
            r_trial = resid(trial)
            chi2_trial = float(r_trial @ r_trial)
            if np.isfinite(chi2_trial) and chi2_trial <= chi2:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # no descent left along the Gauss-Newton direction
            converged = grad_norm <= gtol * max(1.0, math.sqrt(chi2))
            break
        decrease = chi2 - chi2_trial
        theta, r, chi2 = trial, r_trial, chi2_trial
        small_step = np.all(np.abs(lam * step) <= 1e-10 * np.maximum(np.abs(theta), 1.0))
        if decrease <= ftol * max(chi2, 1e-300) or small_step or chi2 == 0.0:
            jac = jacobian(theta)
            grad_norm = float(np.max(np.abs(jac.T @ r)))
            converged = grad_norm <= gtol * max(1.0, math.sqrt(chi2))
            if converged:
                break
    if not converged:
        raise ConvergenceError(f"no convergence after {n_iter} iterations (chi2={chi2:.6g}, |grad|={grad_norm:.3g})")

    jac = jacobian(theta)
    jtj = jac.T @ jac
    _check_curvature(jtj, names)
    cov_t = np.linalg.inv(jtj)
    if not weighted or sigmas is None:
        dof = y.size - len(names)
        cov_t = cov_t * (chi2 / dof if dof > 0 else 1.0)
    d = np.array([tf[n][2](t) for n, t in zip(names, theta)])
    cov = cov_t * np.outer(d, d)
    params = unpack(theta)
    sig = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    return FitResult(params, sig, chi2, int(y.size), True, n_iter, chi2_0, grad_norm, cov)


def _check_curvature(jtj: np.ndarray, names) -> None:
    eig = np.linalg.eigvalsh(jtj)
    if eig[-1] <= 0 or eig[0] <= 1e-12 * eig[-1]:
        diag = np.diag(jtj)
        flat = [n for n, dd in zip(names, diag) if dd <= 1e-12 * max(diag.max(), 1e-300)]
        which = f" (no sensitivity to {', '.join(flat)})" if flat else ""
        raise SingularCurvatureError(f"curvature matrix is singular{which}")


def fit_saturation(
    points: Sequence[SaturationCurvePoint],
    pumping_model=None,
    mode: BeamMode = BeamMode(),
    geometry: TrenchGeometry = TrenchGeometry(),
    fixed_ratio: float | None = None,
    initial_ratio: float = 6.0,
    weighted: bool = True,
    constants=RB87,
) -> FitResult:
    """Fit density and trench/detector power ratio to absorbed fraction vs detected power.

    The density sets the absorption scale and the ratio rescales the power
    axis. With ``fixed_ratio`` only the density is fitted.
    """
    p = np.array([pt.detected_power for pt in points], dtype=float)
    f = np.array([pt.absorbed_fraction for pt in points], dtype=float)
    sig = np.array([pt.sigma_f for pt in points], dtype=float)
    if p.size < 2 or np.ptp(p) == 0:
        raise DegenerateDataError("saturation fit needs at least two distinct detected powers")
    if weighted and np.any(sig <= 0):
        raise ValueError("weighted fit needs positive sigma_f on every point")
    k = int(np.argmin(p))
    rho0 = max(f[k], 1e-6) / weak_absorption_coefficient(None, geometry.length, constants)

    if fixed_ratio is None:

        def model(par):
            return saturation_fractions(p, par["rho"], par["power_ratio"], pumping_model, mode, geometry, constants=constants)

        init = {"rho": rho0, "power_ratio": initial_ratio}
        bounds = {"rho": "positive", "power_ratio": "positive"}
    else:

        def model(par):
            return saturation_fractions(p, par["rho"], fixed_ratio, pumping_model, mode, geometry, constants=constants)

        init = {"rho": rho0}
        bounds = {"rho": "positive"}
    return least_squares(model, f, sig if weighted else None, init, bounds, weighted=weighted)


def fit_zeeman(
    detuning_mhz,
    absorption,
    sigmas,
    b_field: float,
    initial_fraction: float = 0.5,
    weighted: bool = True,
    constants=RB87,
) -> FitResult:
    """Fit overall normalisation and sigma+ power fraction to a weak-probe spectrum.

    At zero field every line sits at the origin and the fraction has no
    effect on the model, which surfaces as SingularCurvatureError.
    """
    d = np.asarray(detuning_mhz, dtype=float)
    a = np.asarray(absorption, dtype=float)

    # normalisation guess from the peak, assuming the unresolved spectrum height
    probe = zeeman_spectrum(ZeemanScenario(b_field, initial_fraction, 1.0, d), constants=constants)
    norm0 = max(a.max(), 1e-12) / max(probe.max(), 1e-12)

    def model(par):
        sc = ZeemanScenario(b_field, par["sigma_plus_fraction"], par["normalization"], d)
        return zeeman_spectrum(sc, constants=constants)

    return least_squares(
        model,
        a,
        sigmas if weighted else None,
        {"normalization": norm0, "sigma_plus_fraction": initial_fraction},
        {"normalization": "positive", "sigma_plus_fraction": "unit"},
        weighted=weighted,
    )


def format_fit_report(result: FitResult, prefix: str = "") -> list[str]:
    """``key = value`` lines describing a fit."""
    lines = []
    for name, value in result.params.items():
        lines.append(f"{prefix}{name} = {value:.8g}")
        lines.append(f"{prefix}{name}_sigma = {result.sigmas[name]:.8g}")
    lines.append(f"{prefix}chi2 = {result.chi2:.8g}")
    lines.append(f"{prefix}n_points = {result.n_points}")
    lines.append(f"{prefix}converged = {str(result.converged).lower()}")
    return lines
