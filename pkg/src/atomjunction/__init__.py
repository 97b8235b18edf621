"""Simulation and analysis of cold atoms crossing a waveguide trench.

The subpackages follow the measurement chain: atomic line strengths,
optical pumping, guided-beam optics, the falling cloud, the absorption
and fluorescence signals, photon counting, and curve fitting.
"""
__version__ = "0.1.0"

from .constants import RB87, PhysicalConstants
from .kernels import BACKEND

__all__ = ["RB87", "PhysicalConstants", "BACKEND", "__version__"]
