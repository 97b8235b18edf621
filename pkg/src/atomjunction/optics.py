"""Gaussian waveguide mode across the trench and the optical power budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "BeamMode",
    "TrenchGeometry",
    "PowerBudget",
    "rayleigh_range",
    "beam_radius",
    "intensity_at",
    "mode_overlap",
    "budget_product",
    "illuminated_volume",
    "FIBRE_CHAIN",
    "DETECTION_CHAIN",
    "trench_to_detector_ratio",
]


@dataclass(frozen=True)
class BeamMode:
    w0: float = 2.2  # 1/e field radius at the exit facet, um
    wavelength: float = 0.780  # um
    power_in_trench: float = 0.0  # pW
    helicity_plus_fraction: float = 0.5

    def __post_init__(self):
        if self.w0 <= 0 or self.wavelength <= 0:
            raise ValueError("w0 and wavelength must be positive")
        if self.power_in_trench < 0:
            raise ValueError("power must be non-negative")
        if not 0.0 <= self.helicity_plus_fraction <= 1.0:
            raise ValueError("helicity_plus_fraction must lie in [0, 1]")

    def with_power(self, power: float) -> "BeamMode":
        return replace(self, power_in_trench=power)


@dataclass(frozen=True)
class TrenchGeometry:
    length: float = 16.0  # gap crossed by the beam, um
    depth: float = 22.0
    pitch: float = 10.0
    n_guides: int = 12

    def __post_init__(self):
        if min(self.length, self.depth, self.pitch) <= 0 or self.n_guides < 1:
            raise ValueError("trench dimensions must be positive")


def rayleigh_range(w0: float, wavelength: float) -> float:
    return math.pi * w0 * w0 / wavelength


def beam_radius(z, mode: BeamMode = BeamMode()):
    """1/e field radius (um) at distance z (um) from the exit facet."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be non-negative")
    zr = rayleigh_range(mode.w0, mode.wavelength)
    w = mode.w0 * np.sqrt(1.0 + (z / zr) ** 2)
    return float(w) if w.ndim == 0 else w


def intensity_at(r, z, mode: BeamMode):
    """Intensity (pW/um^2) at transverse radius r and distance z."""
    w = np.asarray(beam_radius(z, mode))
    r = np.asarray(r, dtype=float)
    out = 2 * mode.power_in_trench / (math.pi * w * w) * np.exp(-2 * r * r / (w * w))
    return float(out) if out.ndim == 0 else out


def mode_overlap(w1: float, w2: float, z: float = 0.0, wavelength: float = 0.780, offset: float = 0.0) -> float:
    """Power coupling of a beam launched from waist w1 into a mode of waist w2.

    The receiving waist sits a distance z from the launching one; ``offset``
    is a lateral misalignment of the two axes (um).
    """
    if w1 <= 0 or w2 <= 0:
        raise ValueError("mode radii must be positive")
    if z < 0:
        raise ValueError("separation must be non-negative")
    a = wavelength * z / math.pi
    eta0 = 4.0 / ((w1 / w2 + w2 / w1) ** 2 + (a / (w1 * w2)) ** 2)
    if offset == 0.0:
        return eta0
    s = w1 * w1 + w2 * w2
    return eta0 * math.exp(-2.0 * offset * offset * s / (s * s + a * a))


@dataclass(frozen=True)
class PowerBudget:
    """Ordered optical stages, each with a power transmission factor."""

    stages: tuple[tuple[str, float], ...]

    def __post_init__(self):
        stages = tuple((str(n), float(f)) for n, f in self.stages)
        names = [n for n, _ in stages]
        if len(set(names)) != len(names):
            raise ValueError("stage names must be unique")
        for name, f in stages:
            if not 0.0 < f <= 1.0:
                raise ValueError(f"stage {name!r}: factor {f} outside (0, 1]")
        object.__setattr__(self, "stages", stages)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.stages]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown stage {name!r}; known: {', '.join(self.names)}") from None

    def override(self, **factors: float) -> "PowerBudget":
        for name in factors:
            self.index(name)
        return PowerBudget(tuple((n, factors.get(n, f)) for n, f in self.stages))

    def total(self) -> float:
        return budget_product(self)


def budget_product(budget: PowerBudget, start: str | None = None, stop: str | None = None) -> float:
    """Product of the factors from ``start`` to ``stop`` inclusive."""
    i = 0 if start is None else budget.index(start)
    j = len(budget.stages) - 1 if stop is None else budget.index(stop)
    if j < i:
        raise ValueError(f"stage {stop!r} precedes {start!r}")
    return math.prod(f for _, f in budget.stages[i : j + 1])


# input fibre to output fibre
FIBRE_CHAIN = PowerBudget(
    (
        ("input_feedthrough", 0.50),
        ("input_interface", 0.60),
        ("trench_entry_face", 0.78),
        ("trench_exit_face", 0.78),
        ("mode_overlap", 0.83),
        ("output_interface", 0.60),
        ("output_feedthrough", 0.50),
    )
)

# light entering the trench to the APD
DETECTION_CHAIN = PowerBudget(
    (
        ("trench_exit_face", 0.78),
        ("mode_overlap", 0.83),
        ("fibre_couplers", 0.25),
    )
)


def trench_to_detector_ratio(budget: PowerBudget = DETECTION_CHAIN) -> float:
    """Power in the trench divided by power reaching the detector."""
    return 1.0 / budget.total()


def illuminated_volume(mode: BeamMode, geometry: TrenchGeometry) -> float:
    """Intensity-weighted mode volume, int I dV / I_peak = pi w0^2 L / 2 (um^3)."""
    return math.pi * mode.w0**2 * geometry.length / 2
