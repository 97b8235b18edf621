"""87Rb D2 constants used throughout the package.

Values live in ``data/constants.json`` so that documentation, tests and code
read the same table. Units inside the package are um, us/ms, pW, T and Hz;
this module also carries the SI values needed at the boundaries.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

__all__ = ["PhysicalConstants", "RB87", "load_table"]


def load_table() -> dict:
    """Return the raw constants table as a dict."""
    text = resources.files("atomjunction").joinpath("data/constants.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class PhysicalConstants:
    hbar_omega: float  # photon energy, J
    gamma: float  # upper-state decay rate, 1/s
    wavelength: float  # um
    mu_b_over_h: float  # Hz/T
    k_b: float  # J/K
    mass_rb87: float  # kg
    isat_cycling: float  # pW/um^2, strongest sigma+- line
    isat_effective: float  # pW/um^2, pumped random-polarisation value

    @property
    def gamma_hz(self) -> float:
        """Natural linewidth (FWHM) in Hz."""
        return self.gamma / (2 * math.pi)

    @property
    def saturated_rate(self) -> float:
        return self.gamma / 2

    @classmethod
    def from_table(cls, table: dict | None = None) -> "PhysicalConstants":
        t = load_table() if table is None else table
        h = t["planck_j_s"]
        nu = t["speed_of_light_m_per_s"] / (t["wavelength_um"] * 1e-6)
        return cls(
            hbar_omega=h * nu,
            gamma=2 * math.pi * t["gamma_over_2pi_hz"],
            wavelength=t["wavelength_um"],
            mu_b_over_h=t["mu_b_over_h_hz_per_t"],
            k_b=t["k_b_j_per_k"],
            mass_rb87=t["mass_rb87_kg"],
            isat_cycling=t["isat_cycling_pw_per_um2"],
            isat_effective=t["isat_effective_pw_per_um2"],
        )


RB87 = PhysicalConstants.from_table()
