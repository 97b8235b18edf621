"""Ballistic thermal cloud launched into the trench.

Coordinates are um with the trench centre at the origin. The guided beam
runs along x from the exit facet at x = -L/2 to the far facet at x = +L/2;
the cloud is pushed along +z. Cloud timescales are in ms, single-atom
transits in us.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .constants import RB87, PhysicalConstants
from .optics import BeamMode, TrenchGeometry, beam_radius, intensity_at

__all__ = [
    "CloudState",
    "AtomTransit",
    "thermal_velocity",
    "cloud_sigma",
    "density_at",
    "junction_nodes",
    "mean_density_in_junction",
    "atoms_in_mode",
    "arrival_rate",
    "expected_transits",
    "sample_transits",
    "transit_duration",
]


@dataclass(frozen=True)
class CloudState:
    rho_peak: float  # atoms/um^3 at t = 0
    center0: tuple[float, float, float] = (0.0, 0.0, -3000.0)
    v_launch: float = 400.0  # um/ms
    temperature: float = 1e-4  # K
    sigma0: float = 300.0  # rms radius, um

    def __post_init__(self):
        if self.rho_peak < 0:
            raise ValueError("rho_peak must be non-negative")
        if self.temperature <= 0 or self.sigma0 <= 0:
            raise ValueError("temperature and sigma0 must be positive")
        if len(self.center0) != 3:
            raise ValueError("center0 must be a 3-vector")
        object.__setattr__(self, "center0", tuple(float(c) for c in self.center0))

    @property
    def atom_number(self) -> float:
        return self.rho_peak * (2 * math.pi) ** 1.5 * self.sigma0**3

    def arrival_time(self) -> float:
        """Time (ms) at which the centre passes z = 0."""
        return -self.center0[2] / self.v_launch


@dataclass(frozen=True)
class AtomTransit:
    impact_parameter: float  # um
    axial_position: float  # distance from the exit facet, um
    speed: float  # um/us
    entry_time: float  # ms
    duration: float  # us
    mean_photons: float
    photons_scattered: int


def thermal_velocity(temperature: float, constants: PhysicalConstants = RB87) -> float:
    """One-dimensional rms velocity in um/ms."""
    return math.sqrt(constants.k_b * temperature / constants.mass_rb87) * 1e3


def cloud_sigma(t, cloud: CloudState, constants: PhysicalConstants = RB87):
    sv = thermal_velocity(cloud.temperature, constants)
    return np.sqrt(cloud.sigma0**2 + (sv * np.asarray(t, dtype=float)) ** 2)


def density_at(pos, t, cloud: CloudState, constants: PhysicalConstants = RB87):
    """Number density (atoms/um^3) at position(s) ``pos`` (..., 3) and time t (ms)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    pos = np.asarray(pos, dtype=float)
    sigma = cloud_sigma(t, cloud, constants)
    c = np.array(cloud.center0)
    dx = pos[..., 0] - c[0]
    dy = pos[..., 1] - c[1]
    dz = pos[..., 2] - (c[2] + cloud.v_launch * t)
    r2 = dx * dx + dy * dy + dz * dz
    rho = cloud.rho_peak * (cloud.sigma0 / sigma) ** 3 * np.exp(-r2 / (2 * sigma * sigma))
    return float(rho) if rho.ndim == 0 else rho


def junction_nodes(mode: BeamMode, geometry: TrenchGeometry, n_axial=16, n_radial=12, n_angle=8):
    """Quadrature points (N, 3) and intensity weights (N,) over the guided beam.

    Weights sum to one and are proportional to the local intensity, so a
    weighted sum of a density is what weak absorption responds to.
    """
    xs, wx = np.polynomial.legendre.leggauss(n_axial)
    s = 0.5 * geometry.length * (xs + 1.0)  # distance from the exit facet
    wx = 0.5 * wx
    us, wu = np.polynomial.laguerre.laggauss(n_radial)
    phi = 2 * np.pi * (np.arange(n_angle) + 0.5) / n_angle
    w = beam_radius(s, mode)
    r = w[:, None] * np.sqrt(us[None, :] / 2)
    x = np.broadcast_to((s - geometry.length / 2)[:, None, None], (n_axial, n_radial, n_angle))
    y = r[:, :, None] * np.cos(phi)[None, None, :]
    z = r[:, :, None] * np.sin(phi)[None, None, :]
    pts = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    weights = (wx[:, None, None] * wu[None, :, None] * np.full(n_angle, 1.0 / n_angle)).reshape(-1)
    return pts, weights


def mean_density_in_junction(t, cloud: CloudState, geometry: TrenchGeometry, mode: BeamMode, constants=RB87, nodes=None):
    """Intensity-weighted mean density in the guided mode at time(s) t (ms)."""
    pts, weights = junction_nodes(mode, geometry) if nodes is None else nodes
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([weights @ density_at(pts, ti, cloud, constants) for ti in ts])
    return float(out[0]) if scalar else out


def atoms_in_mode(rho: float, mode: BeamMode, geometry: TrenchGeometry) -> float:
    return rho * math.pi * mode.w0**2 * geometry.length / 2


def _mean_radius(mode: BeamMode, geometry: TrenchGeometry, n=16) -> float:
    xs, wx = np.polynomial.legendre.leggauss(n)
    s = 0.5 * geometry.length * (xs + 1.0)
    return float(0.5 * wx @ beam_radius(s, mode))


def transit_duration(w: float, speed: float) -> float:
    """Time (us) to cross a beam of 1/e radius w (um) at speed (um/us)."""
    return w / speed


def arrival_rate(t, cloud: CloudState, mode: BeamMode, geometry: TrenchGeometry, constants=RB87):
    """Atoms entering the beam per ms: flux rho*v through a 2w x L cross-section."""
    rho = np.atleast_1d(mean_density_in_junction(t, cloud, geometry, mode, constants))
    return rho * cloud.v_launch * 2 * _mean_radius(mode, geometry) * geometry.length


def expected_transits(window: float, cloud, mode, geometry, t_start=0.0, n_grid=257, constants=RB87) -> float:
    t = np.linspace(t_start, t_start + window, n_grid)
    return float(trapezoid(arrival_rate(t, cloud, mode, geometry, constants), t))


def _two_level_rate(intensity, constants=RB87):
    s = np.asarray(intensity) / constants.isat_cycling
    return constants.gamma / 2 * s / (1 + s)


def sample_transits(
    seed,
    window: float,
    cloud: CloudState,
    mode: BeamMode,
    geometry: TrenchGeometry,
    t_start: float = 0.0,
    rate_fn=None,
    n_grid: int = 257,
    constants: PhysicalConstants = RB87,
) -> list[AtomTransit]:
    """Monte Carlo single-atom crossings during [t_start, t_start + window] ms.

    Arrivals form an inhomogeneous Poisson process following the flux;
    each atom crosses at a uniformly drawn axial position and impact
    parameter and scatters a Poisson number of photons. ``rate_fn`` maps
    intensity (pW/um^2) to scattering rate (1/s); it defaults to the
    cycling line, which saturates at Gamma/2.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    rng = np.random.default_rng(seed)
    rate_fn = (lambda i: _two_level_rate(i, constants)) if rate_fn is None else rate_fn
    t = np.linspace(t_start, t_start + window, n_grid)
    lam = arrival_rate(t, cloud, mode, geometry, constants)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (lam[1:] + lam[:-1]) * np.diff(t))])
    total = cum[-1]
    if total <= 0:
        return []
    n = rng.poisson(total)
    if n == 0:
        return []
    entry = np.sort(np.interp(rng.uniform(0, total, n), cum, t))
    s = rng.uniform(0, geometry.length, n)
    w = beam_radius(s, mode)
    b = rng.uniform(-1.0, 1.0, n) * w
    speed = cloud.v_launch * 1e-3
    duration = w / speed
    peak_i = intensity_at(np.abs(b), s, mode)
    mean_ph = duration * 1e-6 * np.asarray(rate_fn(peak_i), dtype=float)
    photons = rng.poisson(mean_ph)
    return [
        AtomTransit(float(b[k]), float(s[k]), speed, float(entry[k]), float(duration[k]), float(mean_ph[k]), int(photons[k]))
        for k in range(n)
    ]
