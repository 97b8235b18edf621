"""Optical pumping of the F=2 ground sublevels by sigma+/sigma- light.

Excited states are adiabatically eliminated: each ground sublevel mF is
excited on the sigma^q line at the saturated single-line rate and the
atom returns to mF' - 1, mF', mF' + 1 with 3-j branching ratios. The
steady state of this 5x5 Markov generator is the pumped distribution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .atomic import (
    GROUND_SUBLEVELS,
    TransitionComponent,
    decay_branching,
    relative_strength,
    zeeman_shift,
)
from .constants import RB87, PhysicalConstants

__all__ = [
    "PumpConditions",
    "PopulationDistribution",
    "ConvergenceError",
    "scattering_rate_per_atom",
    "component_rates",
    "rate_matrix",
    "steady_state",
    "mean_scattering_rate",
    "polarization_fractions",
    "ensemble_rate",
    "effective_isat",
    "low_intensity_isat",
    "PumpingModel",
    "TwoLevelModel",
    "default_pumping_model",
]

N_GROUND = len(GROUND_SUBLEVELS)
HELICITIES = (1, -1)


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve exhausts its budget."""


@dataclass(frozen=True)
class PumpConditions:
    i_plus: float  # pW/um^2
    i_minus: float  # pW/um^2
    detuning: float = 0.0  # Hz, from the unshifted line
    b_field: float = 0.0  # T

    def __post_init__(self):
        if self.i_plus < 0 or self.i_minus < 0:
            raise ValueError("intensities must be non-negative")
        if self.b_field < 0:
            raise ValueError("b_field must be non-negative")

    @classmethod
    def from_total(cls, intensity, sigma_plus_fraction, detuning=0.0, b_field=0.0):
        return cls(
            intensity * sigma_plus_fraction,
            intensity * (1.0 - sigma_plus_fraction),
            detuning,
            b_field,
        )

    def intensity(self, q: int) -> float:
        return self.i_plus if q == 1 else self.i_minus


@dataclass(frozen=True)
class PopulationDistribution:
    """Ground-state weights ordered mF = -2 .. +2."""

    p: np.ndarray = field(repr=True)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (N_GROUND,):
            raise ValueError(f"expected {N_GROUND} populations, got shape {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("populations must be non-negative and sum to 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def equal(cls) -> "PopulationDistribution":
        return cls(np.full(N_GROUND, 1.0 / N_GROUND))

    def __getitem__(self, mF: int) -> float:
        return float(self.p[mF + GROUND_SUBLEVELS[-1]])


def scattering_rate_per_atom(
    component: TransitionComponent,
    intensity,
    detuning=0.0,
    b_field: float = 0.0,
    constants: PhysicalConstants = RB87,
):
    """Photon scattering rate (1/s) of one atom driven on a single line.

    Saturated Lorentzian: (Gamma/2) s / (1 + s + (2 delta/Gamma)^2) with
    s = I / I_sat(line) and delta measured from the Zeeman-shifted line.
    """
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensity must be non-negative")
    s = intensity / component.isat
    delta = np.asarray(detuning, dtype=float) - component.shift(b_field)
    x = 2 * delta / constants.gamma_hz
    rate = constants.gamma / 2 * s / (1 + s + x * x)
    return float(rate) if rate.ndim == 0 else rate


def component_rates(conditions: PumpConditions, constants: PhysicalConstants = RB87) -> np.ndarray:
    """Excitation rate of every line, shape (5, 2); columns are q = +1, -1.

    Each line saturates on its own. With both helicities present a
    sublevel can therefore scatter up to Gamma in the strong-field limit,
    an overestimate outside the intensity range where I_sat is defined.
    """
    rates = np.zeros((N_GROUND, 2))
    gamma_hz = constants.gamma_hz
    for i, mF in enumerate(GROUND_SUBLEVELS):
        for j, q in enumerate(HELICITIES):
            intensity = conditions.intensity(q)
            if intensity == 0.0:
                continue
            s = intensity * float(relative_strength(mF, q)) / constants.isat_cycling
            delta = conditions.detuning - zeeman_shift(mF, q, conditions.b_field, constants)
            x = 2 * delta / gamma_hz
            rates[i, j] = constants.gamma / 2 * s / (1 + s + x * x)
    return rates


@lru_cache(maxsize=None)
def _branching_matrix() -> np.ndarray:
    # [q index, from ground i, to ground k]: probability of landing in k after
    # being excited from i on the sigma^q line
    out = np.zeros((2, N_GROUND, N_GROUND))
    for j, q in enumerate(HELICITIES):
        for i, mF in enumerate(GROUND_SUBLEVELS):
            mp = mF + q
            for k, m_to in enumerate(GROUND_SUBLEVELS):
                out[j, i, k] = float(decay_branching(mp, m_to))
    out.setflags(write=False)
    return out


def rate_matrix(conditions: PumpConditions, constants: PhysicalConstants = RB87) -> np.ndarray:
    """Generator A with dp/dt = A @ p for the ground populations."""
    rates = component_rates(conditions, constants)
    branch = _branching_matrix()
    a = np.zeros((N_GROUND, N_GROUND))
    for j in range(2):
        a += (branch[j] * rates[:, j][:, None]).T
    a -= np.diag(rates.sum(axis=1))
    return a


def steady_state(
    conditions: PumpConditions,
    constants: PhysicalConstants = RB87,
    tol: float = 1e-10,
    max_iter: int = 8,
) -> PopulationDistribution:
    """Stationary populations: null vector of the rate matrix, normalised.

    The direct solve is polished by iterative refinement until the
    relative max-norm of dp/dt falls below ``tol``.
    """
    if conditions.i_plus <= 0 and conditions.i_minus <= 0:
        raise ValueError("at least one intensity must be positive")
    a = rate_matrix(conditions, constants)
    scale = np.abs(a).max()
    if scale == 0.0:
        raise ValueError("light does not couple to any sublevel")
    m = a / scale
    # replace one balance equation by the normalisation condition
    lhs = m.copy()
    lhs[-1, :] = 1.0
    rhs = np.zeros(N_GROUND)
    rhs[-1] = 1.0
    p = np.linalg.solve(lhs, rhs)
    for _ in range(max_iter):
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        resid = m @ p
        if np.abs(resid).max() < tol:
            return PopulationDistribution(p)
        corr = np.zeros(N_GROUND)
        corr[:-1] = -resid[:-1]
        p = p + np.linalg.solve(lhs, corr)
    raise ConvergenceError(f"steady state not reached in {max_iter} refinement steps")


def mean_scattering_rate(
    populations: PopulationDistribution,
    conditions: PumpConditions,
    constants: PhysicalConstants = RB87,
) -> float:
    """Population-weighted sum of all line rates (1/s)."""
    rates = component_rates(conditions, constants)
    return float(populations.p @ rates.sum(axis=1))


def polarization_fractions(n: int = 64, rule: str = "uniform", seed: int | None = None) -> np.ndarray:
    """sigma+ power fractions representing a shot-to-shot polarisation ensemble.

    ``uniform`` uses the midpoints of n equal strata of [0, 1], or n random
    uniform draws when a seed is given. ``sigma_plus``/``sigma_minus`` are the
    pure limits.
    """
    if rule == "uniform":
        if n < 1:
            raise ValueError("need at least one sample")
        if seed is None:
            return (np.arange(n) + 0.5) / n
        return np.random.default_rng(seed).uniform(0.0, 1.0, n)
    if rule == "sigma_plus":
        return np.array([1.0])
    if rule == "sigma_minus":
        return np.array([0.0])
    raise ValueError(f"unknown polarisation rule {rule!r}")


def ensemble_rate(intensity, fractions, detuning=0.0, b_field=0.0, constants=RB87) -> float:
    """Pumped scattering rate averaged over the polarisation ensemble."""
    if intensity <= 0:
        return 0.0
    total = 0.0
    for x in fractions:
        cond = PumpConditions.from_total(intensity, x, detuning, b_field)
        total += mean_scattering_rate(steady_state(cond, constants), cond, constants)
    return total / len(fractions)


def effective_isat(
    n_samples: int = 64,
    rule: str = "uniform",
    seed: int | None = None,
    fractions=None,
    constants: PhysicalConstants = RB87,
) -> float:
    """Intensity (pW/um^2) at which the ensemble-mean pumped rate is Gamma/4."""
    if fractions is None:
        fractions = polarization_fractions(n_samples, rule, seed)
    target = constants.gamma / 4

    def excess(i):
        return ensemble_rate(i, fractions, constants=constants) - target

    lo, hi = 0.1 * constants.isat_cycling, 10 * constants.isat_cycling
    while excess(hi) < 0:
        hi *= 4
    return brentq(excess, lo, hi, xtol=1e-10, rtol=1e-12)


def low_intensity_isat(populations: PopulationDistribution | None = None, fractions=None, constants=RB87) -> float:
    """Saturation intensity that reproduces the weak-light cross-section.

    With ``populations`` given (default: equal) the populations are held
    fixed; with ``fractions`` the atoms are pumped by each polarisation
    first and the cross-sections are averaged.
    """
    if fractions is not None:
        eps = 1e-6 * constants.isat_cycling
        rate = ensemble_rate(eps, fractions, constants=constants)
        return constants.gamma / 2 * eps / rate
    if populations is None:
        populations = PopulationDistribution.equal()
    # light split equally between helicities probes the average line
    weights = np.array(
        [0.5 * sum(float(relative_strength(m, q)) for q in HELICITIES) for m in GROUND_SUBLEVELS]
    )
    return constants.isat_cycling / float(populations.p @ weights)


class TwoLevelModel:
    """Scattering rate of a two-level atom with a fixed saturation intensity."""

    def __init__(self, isat: float, constants: PhysicalConstants = RB87):
        if isat <= 0:
            raise ValueError("isat must be positive")
        self.weak_isat = float(isat)
        self.constants = constants

    def isat(self) -> float:
        return self.weak_isat

    def rate(self, intensity):
        s = np.asarray(intensity, dtype=float) / self.weak_isat
        return self.constants.gamma / 2 * s / (1 + s)

    def rate_over_intensity(self, intensity):
        i = np.asarray(intensity, dtype=float)
        return self.constants.gamma / 2 / (self.weak_isat + i)


class PumpingModel:
    """Tabulated pumped, polarisation-averaged scattering rate vs intensity.

    The table stores rate/intensity on a log-intensity grid and is
    interpolated with a cubic spline; outside the grid the weak-light or
    fully saturated asymptote is used.
    """

    def __init__(
        self,
        fractions=None,
        constants: PhysicalConstants = RB87,
        i_min: float = 1e-4,
        i_max: float = 1e5,
        n_grid: int = 161,
    ):
        self.constants = constants
        self.fractions = polarization_fractions() if fractions is None else np.asarray(fractions, float)
        self.i_min, self.i_max = i_min, i_max
        log_i = np.linspace(np.log(i_min), np.log(i_max), n_grid)
        ratio = np.array([ensemble_rate(np.exp(li), self.fractions, constants=constants) for li in log_i])
        ratio /= np.exp(log_i)
        self._spline = CubicSpline(log_i, np.log(ratio))
        self._ratio_lo = ratio[0]
        self._rate_hi = ratio[-1] * i_max
        self.weak_isat = constants.gamma / 2 / self._ratio_lo

    def rate_over_intensity(self, intensity):
        """Scattering rate divided by intensity, (1/s) / (pW/um^2)."""
        i = np.asarray(intensity, dtype=float)
        li = np.log(np.clip(i, self.i_min, self.i_max))
        out = np.exp(self._spline(li))
        out = np.where(i > self.i_max, self._rate_hi / np.maximum(i, self.i_max), out)
        return out

    def rate(self, intensity):
        i = np.asarray(intensity, dtype=float)
        return i * self.rate_over_intensity(i)

    def isat(self) -> float:
        """Intensity where the tabulated rate crosses Gamma/4."""
        target = self.constants.gamma / 4
        return brentq(lambda i: float(self.rate(i)) - target, self.i_min, self.i_max, xtol=1e-12)


@lru_cache(maxsize=4)
def default_pumping_model(n_samples: int = 64) -> PumpingModel:
    return PumpingModel(polarization_fractions(n_samples))
