"""Observable signals: absorption, saturation, Zeeman spectra and fluorescence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .atomic import transition_strengths
from .cloud import CloudState, mean_density_in_junction, junction_nodes
from .constants import RB87, PhysicalConstants
from .optics import BeamMode, TrenchGeometry, beam_radius
from .pumping import TwoLevelModel, default_pumping_model

__all__ = [
    "SaturationCurvePoint",
    "ZeemanScenario",
    "AbsorptionTrace",
    "weak_absorption_coefficient",
    "absorbed_fraction_weak",
    "absorbed_fraction",
    "saturation_fractions",
    "saturation_curve",
    "half_absorption_power",
    "zeeman_lines",
    "zeeman_spectrum",
    "dominant_line",
    "spectrum_peak",
    "fluorescence_rate",
    "absorption_timeseries",
    "fwhm",
]

# W/pW
_PW = 1e12


def weak_absorption_coefficient(isat: float | None = None, length: float = 16.0, constants: PhysicalConstants = RB87) -> float:
    """hbar*omega*Gamma*L / (2 I_sat) in um^3; multiply by density to get f."""
    isat = constants.isat_effective if isat is None else isat
    return constants.hbar_omega * constants.gamma * length / (2 * isat) * _PW


def absorbed_fraction_weak(rho, isat: float | None = None, geometry: TrenchGeometry = TrenchGeometry(), constants=RB87):
    """Fraction of weak resonant light absorbed by atoms of density rho (1/um^3)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be non-negative")
    f = weak_absorption_coefficient(isat, geometry.length, constants) * rho
    return float(f) if f.ndim == 0 else f


def absorbed_fraction(intensity, rho, detuning=0.0, isat: float | None = None, geometry=TrenchGeometry(), constants=RB87):
    """Saturated absorption f0 / (1 + I/I_sat + (2 delta/Gamma)^2); detuning in Hz."""
    isat = constants.isat_effective if isat is None else isat
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensity must be non-negative")
    f0 = absorbed_fraction_weak(rho, isat, geometry, constants)
    x = 2 * np.asarray(detuning, dtype=float) / constants.gamma_hz
    f = f0 / (1 + intensity / isat + x * x)
    return float(f) if f.ndim == 0 else f


@dataclass(frozen=True)
class SaturationCurvePoint:
    """One point of absorbed fraction vs detected power.

    Measured fractions may stray slightly outside [0, 1] through noise;
    model points never do.
    """

    detected_power: float  # pW
    absorbed_fraction: float
    sigma_f: float = 0.0


class _SaturationGrid:
    """Fixed (axial, radial) quadrature over the Gaussian beam in the trench."""

    def __init__(self, mode: BeamMode, geometry: TrenchGeometry, n_radial: int = 64, n_axial: int = 32):
        xs, wx = np.polynomial.legendre.leggauss(n_axial)
        s = 0.5 * geometry.length * (xs + 1.0)
        self.wz = 0.5 * wx  # averages over the trench length
        self.u, self.wu = np.polynomial.laguerre.laggauss(n_radial)
        w = beam_radius(s, mode)
        self.peak_per_power = 2.0 / (math.pi * w * w)  # (pW/um^2) / pW
        self.length = geometry.length

    def mean_ratio(self, trench_power, model) -> np.ndarray:
        """Power-weighted mean of rate/intensity over the beam, per trench power."""
        p = np.atleast_1d(np.asarray(trench_power, dtype=float))
        i_loc = p[:, None, None] * self.peak_per_power[None, :, None] * np.exp(-self.u)[None, None, :]
        ratio = model.rate_over_intensity(i_loc)
        return np.einsum("pzu,z,u->p", ratio, self.wz, self.wu)


_GRID_CACHE: dict = {}


def _grid(mode, geometry, n_radial, n_axial):
    key = (mode.w0, mode.wavelength, geometry.length, n_radial, n_axial)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = _SaturationGrid(mode, geometry, n_radial, n_axial)
    return _GRID_CACHE[key]


def _resolve_model(pumping_model, constants):
    if pumping_model is None:
        return default_pumping_model()
    if isinstance(pumping_model, (int, float)):
        return TwoLevelModel(float(pumping_model), constants)
    return pumping_model


def saturation_fractions(
    detected_powers,
    rho: float,
    power_ratio: float,
    pumping_model=None,
    mode: BeamMode = BeamMode(),
    geometry: TrenchGeometry = TrenchGeometry(),
    grid: tuple[int, int] = (64, 32),
    constants: PhysicalConstants = RB87,
) -> np.ndarray:
    """Absorbed fraction vs detected power with the beam-profile average.

    The trench carries ``power_ratio`` times the detected power. Atoms are
    uniform over the junction, so the absorbed power is rho * hbar*omega
    times the volume integral of the local scattering rate. ``pumping_model``
    is a PumpingModel, a TwoLevelModel, or a number taken as a fixed I_sat.
    """
    f = rho * _fraction_per_density(detected_powers, power_ratio, pumping_model, mode, geometry, grid, constants)
    return np.minimum(f, 1.0)


def _fraction_per_density(detected_powers, power_ratio, pumping_model, mode, geometry, grid, constants) -> np.ndarray:
    """Unclipped absorbed fraction per unit density (um^3)."""
    if power_ratio <= 0:
        raise ValueError("power_ratio must be positive")
    model = _resolve_model(pumping_model, constants)
    g = _grid(mode, geometry, *grid)
    p_trench = power_ratio * np.asarray(detected_powers, dtype=float)
    return constants.hbar_omega * geometry.length * g.mean_ratio(p_trench, model) * _PW


def saturation_curve(detected_powers, rho, power_ratio, pumping_model=None, sigmas=None, **kw) -> list[SaturationCurvePoint]:
    f = saturation_fractions(detected_powers, rho, power_ratio, pumping_model, **kw)
    sig = np.zeros_like(f) if sigmas is None else np.asarray(sigmas, dtype=float)
    return [SaturationCurvePoint(float(p), float(fi), float(si)) for p, fi, si in zip(np.atleast_1d(detected_powers), f, sig)]


def half_absorption_power(rho, power_ratio, pumping_model=None, **kw) -> float:
    """Detected power (pW) at which the averaged absorption drops to half its weak value."""
    f0 = saturation_fractions([0.0], rho, power_ratio, pumping_model, **kw)[0]
    return brentq(
        lambda p: saturation_fractions([p], rho, power_ratio, pumping_model, **kw)[0] - f0 / 2,
        1e-6,
        1e6,
        xtol=1e-12,
        rtol=1e-12,
    )


@dataclass(frozen=True)
class ZeemanScenario:
    b_field: float  # T
    sigma_plus_fraction: float
    normalization: float = 1.0
    detuning_grid: np.ndarray = field(default_factory=lambda: np.linspace(-30.0, 30.0, 61))  # MHz

    def __post_init__(self):
        if not 0.0 <= self.sigma_plus_fraction <= 1.0:
            raise ValueError("sigma_plus_fraction must lie in [0, 1]")
        if self.normalization < 0:
            raise ValueError("normalization must be non-negative")
        if self.b_field < 0:
            raise ValueError("b_field must be non-negative")
        object.__setattr__(self, "detuning_grid", np.asarray(self.detuning_grid, dtype=float))


def zeeman_lines(b_field: float, sigma_plus_fraction: float, normalization: float = 1.0, constants=RB87):
    """(shift in MHz, peak weight) for all ten lines at equal populations."""
    out = []
    for c in transition_strengths(constants):
        frac = sigma_plus_fraction if c.q == 1 else 1.0 - sigma_plus_fraction
        out.append((c.shift(b_field) * 1e-6, normalization * 0.2 * c.rel_strength * frac))
    return out


def zeeman_spectrum(scenario: ZeemanScenario, detuning=None, constants: PhysicalConstants = RB87) -> np.ndarray:
    """Weak-probe absorption vs detuning (MHz): a sum of natural Lorentzians."""
    d = scenario.detuning_grid if detuning is None else np.asarray(detuning, dtype=float)
    half_width = constants.gamma_hz * 1e-6 / 2
    out = np.zeros_like(d, dtype=float)
    for shift, weight in zeeman_lines(scenario.b_field, scenario.sigma_plus_fraction, scenario.normalization, constants):
        x = (d - shift) / half_width
        out += weight / (1 + x * x)
    return out


def dominant_line(scenario: ZeemanScenario, constants=RB87) -> float:
    """Shift (MHz) of the line with the largest weight."""
    return max(zeeman_lines(scenario.b_field, scenario.sigma_plus_fraction, 1.0, constants), key=lambda sw: sw[1])[0]


def spectrum_peak(scenario: ZeemanScenario, constants=RB87, resolution: float = 1e-3) -> float:
    """Detuning (MHz) of the maximum of the blended spectrum."""
    lines = zeeman_lines(scenario.b_field, scenario.sigma_plus_fraction, 1.0, constants)
    lo = min(s for s, _ in lines) - 5
    hi = max(s for s, _ in lines) + 5
    d = np.arange(lo, hi + resolution, resolution)
    return float(d[np.argmax(zeeman_spectrum(scenario, d, constants))])


def fluorescence_rate(rho, scattering_rate, w0: float = 2.2, length: float = 16.0, eta: float = 1 / 12):
    """Detected fluorescence count rate (1/s) collected by the waveguide.

    Atoms in the mode volume pi w0^2 L each send a fraction ~w0^2/L^2 of
    their photons into the guide's numerical aperture, giving
    rho R pi w0^4 eta / L.
    """
    return rho * scattering_rate * math.pi * w0**4 * eta / length


@dataclass(frozen=True)
class AbsorptionTrace:
    times: np.ndarray  # ms
    density: np.ndarray  # junction density, 1/um^3
    absorbed: np.ndarray  # fraction
    transmitted: np.ndarray  # detected power, pW

    @property
    def dip_depth(self) -> float:
        return float(self.absorbed.max()) if self.absorbed.size else 0.0

    @property
    def dip_time(self) -> float:
        return float(self.times[np.argmax(self.absorbed)])

    def dip_fwhm(self) -> float:
        return fwhm(self.times, self.absorbed)


def fwhm(x, y) -> float:
    """Full width at half maximum of a single-peaked sampled curve (linear interpolation)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    k = int(np.argmax(y))
    half = y[k] / 2
    if y[k] <= 0:
        return 0.0
    left = np.flatnonzero(y[:k] < half)
    right = np.flatnonzero(y[k:] < half)
    if left.size == 0 or right.size == 0:
        return float("nan")
    i = left[-1]
    j = k + right[0]
    xl = np.interp(half, [y[i], y[i + 1]], [x[i], x[i + 1]])
    xr = np.interp(half, [y[j], y[j - 1]], [x[j], x[j - 1]])
    return float(xr - xl)


def absorption_timeseries(
    times,
    cloud: CloudState,
    detected_power: float,
    power_ratio: float,
    mode: BeamMode = BeamMode(),
    geometry: TrenchGeometry = TrenchGeometry(),
    pumping_model=None,
    constants: PhysicalConstants = RB87,
) -> AbsorptionTrace:
    """Detected power vs time (ms) as the cloud passes through the junction."""
    times = np.asarray(times, dtype=float)
    nodes = junction_nodes(mode, geometry)
    rho = np.asarray(mean_density_in_junction(times, cloud, geometry, mode, constants, nodes=nodes), dtype=float)
    rho = np.atleast_1d(rho)
    per_rho = _fraction_per_density([detected_power], power_ratio, pumping_model, mode, geometry, (64, 32), constants)[0]
    absorbed = np.clip(per_rho * rho, 0.0, 1.0)
    return AbsorptionTrace(times, rho, absorbed, detected_power * (1.0 - absorbed))
