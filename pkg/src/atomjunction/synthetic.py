"""Synthetic data sets at the noise level of the measurements being modelled."""
from __future__ import annotations

import numpy as np

from .constants import RB87
from .detector import DetectorModel, absorbed_fraction_sigma, measured_rate, photon_flux
from .optics import BeamMode, TrenchGeometry
from .signals import SaturationCurvePoint, ZeemanScenario, saturation_fractions, weak_absorption_coefficient, zeeman_spectrum

__all__ = [
    "DEFAULT_SATURATION_POWERS",
    "DEFAULT_ZEEMAN_GRID",
    "attenuation_for",
    "saturation_sigmas",
    "saturation_data",
    "zeeman_normalization",
    "zeeman_data",
]

DEFAULT_SATURATION_POWERS = np.logspace(-1, 3, 17)  # pW at the detector
DEFAULT_ZEEMAN_GRID = np.arange(-25.0, 25.5, 1.0)  # MHz
MAX_COUNT_RATE = 1.5e7  # highest registered rate used; filters keep counts below it


def attenuation_for(power_pw: float, model: DetectorModel, max_rate: float = MAX_COUNT_RATE) -> float:
    """Strongest decade filter setting (1, 0.1, ...) that keeps the count rate below ``max_rate``."""
    att = 1.0
    while measured_rate(photon_flux(power_pw), DetectorModel(model.quantum_efficiency, model.dead_time, model.background_rate, att)) > max_rate:
        att /= 10
    return att


def saturation_sigmas(detected_powers, absorbed, model: DetectorModel = DetectorModel(), window: float = 2e-3, n_shots: int = 100):
    """Counting-statistics sigma of each absorbed fraction, with filters as needed."""
    out = []
    for p, f in zip(np.atleast_1d(detected_powers), np.atleast_1d(absorbed)):
        att = attenuation_for(p, model)
        m = DetectorModel(model.quantum_efficiency, model.dead_time, model.background_rate, att)
        rate = measured_rate(photon_flux(p), m)
        out.append(float(absorbed_fraction_sigma(rate, window, n_shots, m, absorbed=f)))
    return np.array(out)


def saturation_data(
    rho: float,
    power_ratio: float,
    seed=None,
    detected_powers=DEFAULT_SATURATION_POWERS,
    n_shots: int = 100,
    window: float = 2e-3,
    detector: DetectorModel = DetectorModel(),
    pumping_model=None,
    mode: BeamMode = BeamMode(),
    geometry: TrenchGeometry = TrenchGeometry(),
    noise: bool = True,
) -> list[SaturationCurvePoint]:
    """Absorbed fraction vs detected power with Gaussian counting noise."""
    p = np.asarray(detected_powers, dtype=float)
    f = saturation_fractions(p, rho, power_ratio, pumping_model, mode, geometry)
    sig = saturation_sigmas(p, f, detector, window, n_shots)
    if noise:
        f = f + np.random.default_rng(seed).normal(0.0, sig)
    return [SaturationCurvePoint(float(a), float(b), float(c)) for a, b, c in zip(p, f, sig)]


def zeeman_normalization(rho: float, geometry: TrenchGeometry = TrenchGeometry(), constants=RB87) -> float:
    """Spectrum scale: weak absorption the density would give on the strongest line alone."""
    return weak_absorption_coefficient(constants.isat_cycling, geometry.length, constants) * rho


def zeeman_data(
    b_field: float,
    sigma_plus_fraction: float,
    normalization: float,
    seed=None,
    detuning=DEFAULT_ZEEMAN_GRID,
    sigma: float = 1e-3,
    noise: bool = True,
):
    """(detuning MHz, absorption, sigma) for a weak-probe Zeeman spectrum."""
    d = np.asarray(detuning, dtype=float)
    a = zeeman_spectrum(ZeemanScenario(b_field, sigma_plus_fraction, normalization, d))
    s = np.full_like(d, sigma)
    if noise:
        a = a + np.random.default_rng(seed).normal(0.0, s)
    return d, a, s
