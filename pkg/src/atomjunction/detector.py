"""Photon counting with a non-paralyzable avalanche photodiode.

Rates are in 1/s and times in s inside this module; CSV output uses ms.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import kernels
from .constants import RB87, PhysicalConstants

__all__ = [
    "DetectorModel",
    "CountRecord",
    "photon_flux",
    "detection_rate",
    "measured_rate",
    "true_rate",
    "count_variance",
    "count_sigma",
    "lost_fraction",
    "power_from_counts",
    "absorbed_fraction_sigma",
    "simulate_count_array",
    "simulate_counts",
    "records_from_counts",
    "smooth",
    "write_counts_csv",
    "COUNT_COLUMNS",
]

COUNT_COLUMNS = ("time_ms", "counts", "corrected_rate_hz", "sigma_hz")


@dataclass(frozen=True)
class DetectorModel:
    quantum_efficiency: float = 0.5
    dead_time: float = 32e-9  # s
    background_rate: float = 130.0  # 1/s
    attenuation: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must lie in (0, 1]")
        if self.dead_time < 0:
            raise ValueError("dead_time must be non-negative")
        if self.background_rate < 0:
            raise ValueError("background_rate must be non-negative")
        if not 0.0 < self.attenuation <= 1.0:
            raise ValueError("attenuation must lie in (0, 1]")


@dataclass(frozen=True)
class CountRecord:
    time: float  # window start, s
    window: float  # s
    counts: int
    corrected_rate: float  # 1/s
    sigma: float  # 1/s


def photon_flux(power_pw, constants: PhysicalConstants = RB87):
    """Photons per second carried by ``power_pw`` picowatts."""
    return np.asarray(power_pw, dtype=float) * 1e-12 / constants.hbar_omega


def detection_rate(photon_rate, model: DetectorModel):
    """Rate of detection events (signal plus background) before dead time."""
    return model.quantum_efficiency * model.attenuation * np.asarray(photon_rate, dtype=float) + model.background_rate


def measured_rate(photon_rate, model: DetectorModel = DetectorModel()):
    """Registered count rate for an incident photon rate: n / (1 + n tau)."""
    photon_rate = np.asarray(photon_rate, dtype=float)
    if np.any(photon_rate < 0):
        raise ValueError("photon rate must be non-negative")
    n = detection_rate(photon_rate, model)
    m = n / (1 + n * model.dead_time)
    return float(m) if m.ndim == 0 else m


def true_rate(measured, model: DetectorModel = DetectorModel()):
    """Dead-time-corrected event rate m / (1 - m tau), background included."""
    m = np.asarray(measured, dtype=float)
    x = m * model.dead_time
    if np.any(x >= 1):
        raise ValueError("measured rate is at or above 1/dead_time")
    n = m / (1 - x)
    return float(n) if n.ndim == 0 else n


def lost_fraction(measured, model: DetectorModel = DetectorModel()) -> float:
    """Fraction of detection events lost to dead time at a measured rate."""
    return 1.0 - measured / true_rate(measured, model)


def power_from_counts(measured, model: DetectorModel = DetectorModel(), constants=RB87) -> float:
    """Optical power (pW) at the detector implied by a measured count rate."""
    n = true_rate(measured, model) - model.background_rate
    return n / (model.quantum_efficiency * model.attenuation) * constants.hbar_omega * 1e12


def count_variance(rate, window, dead_time):
    """Variance of counts in a window for event rate ``rate``: n T / (1 + n tau)^3."""
    rate = np.asarray(rate, dtype=float)
    return rate * window / (1 + rate * dead_time) ** 3


def count_sigma(counts, window: float, model: DetectorModel = DetectorModel()):
    """1-sigma uncertainty on a count recorded in ``window`` seconds."""
    if window <= 0:
        raise ValueError("window must be positive")
    n = true_rate(np.asarray(counts, dtype=float) / window, model)
    return np.sqrt(count_variance(n, window, model.dead_time))


def absorbed_fraction_sigma(measured, window: float, n_shots: int = 1, model: DetectorModel = DetectorModel(), absorbed: float = 0.0):
    """Statistical sigma of f = 1 - C/C0 when signal and reference are both averaged over n_shots.

    ``measured`` is the reference count rate without atoms.
    """
    m0 = np.asarray(measured, dtype=float)
    c0 = m0 * window
    m1 = m0 * (1 - absorbed)
    s0 = count_sigma(c0, window, model)
    s1 = count_sigma(m1 * window, window, model)
    ratio = m1 / m0
    rel = np.sqrt((s1 / (m1 * window)) ** 2 + (s0 / c0) ** 2)
    return ratio * rel / math.sqrt(n_shots)


def _windows_per_chunk(expected_per_window: float, target: int = 1 << 21) -> int:
    return int(max(1, min(1 << 16, target // max(expected_per_window, 1.0))))


def simulate_count_array(
    photon_rate_fn,
    n_windows: int,
    window: float,
    model: DetectorModel = DetectorModel(),
    seed=None,
    t_start: float = 0.0,
    substeps: int = 1,
) -> np.ndarray:
    """Counts registered in ``n_windows`` consecutive windows.

    Detection events form a Poisson process with rate
    qe * attenuation * photon_rate_fn(t) + background, sampled exactly for
    a rate held constant over each of ``substeps`` slices per window. The
    stream then passes the non-paralyzable dead-time filter, which carries
    its state across windows.
    """
    if window <= 0 or n_windows < 0:
        raise ValueError("window must be positive and n_windows non-negative")
    rng = np.random.default_rng(seed)
    counts = np.zeros(n_windows, dtype=np.int64)
    if n_windows == 0:
        return counts
    dt = window / substeps
    probe = detection_rate(np.asarray(photon_rate_fn(np.array([t_start + 0.5 * dt])), float), model)
    per_chunk = _windows_per_chunk(float(probe[0]) * window)
    last = -math.inf
    for w0 in range(0, n_windows, per_chunk):
        nw = min(per_chunk, n_windows - w0)
        edges = t_start + (w0 + np.arange(nw * substeps + 1) / substeps) * window
        mids = 0.5 * (edges[1:] + edges[:-1])
        lam = detection_rate(np.asarray(photon_rate_fn(mids), dtype=float), model)
        if np.any(lam < 0):
            raise ValueError("rate function must be non-negative")
        cum = np.concatenate([[0.0], np.cumsum(lam * dt)])
        total = cum[-1]
        if total <= 0:
            continue
        # unit-rate Poisson process mapped through the cumulative intensity
        pieces = []
        e = 0.0
        while True:
            k = int(total - e + 6 * math.sqrt(total - e + 1) + 16)
            u = e + np.cumsum(rng.standard_exponential(k))
            pieces.append(u[u < total])
            if u[-1] >= total:
                break
            e = u[-1]
        arr = np.concatenate(pieces)
        times = np.interp(arr, cum, edges)
        chunk_counts = np.zeros(nw, dtype=np.int64)
        last = kernels.deadtime_bin(times, model.dead_time, last, edges[0], window, chunk_counts)
        counts[w0 : w0 + nw] = chunk_counts
    return counts


def simulate_counts(photon_rate_fn, n_windows, window, model=DetectorModel(), seed=None, t_start=0.0, substeps=1) -> list[CountRecord]:
    """Simulated count stream with dead-time-corrected rates and error bars."""
    counts = simulate_count_array(photon_rate_fn, n_windows, window, model, seed, t_start, substeps)
    return records_from_counts(counts, window, model, t_start)


def records_from_counts(counts, window: float, model: DetectorModel = DetectorModel(), t_start: float = 0.0) -> list[CountRecord]:
    counts = np.asarray(counts)
    m = counts / window
    n = true_rate(m, model)
    sig_counts = np.sqrt(count_variance(n, window, model.dead_time))
    # d n / d m = 1 / (1 - m tau)^2
    sig_rate = sig_counts / window / (1 - m * model.dead_time) ** 2
    return [
        CountRecord(t_start + i * window, window, int(c), float(ni), float(si))
        for i, (c, ni, si) in enumerate(zip(counts, np.atleast_1d(n), np.atleast_1d(sig_rate)))
    ]


def smooth(values, n_bins: int) -> np.ndarray:
    """Centred moving average over ``n_bins`` samples."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    return uniform_filter1d(np.asarray(values, dtype=float), size=n_bins, mode="nearest")


def write_counts_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNT_COLUMNS)
        for r in records:
            w.writerow([repr(r.time * 1e3), r.counts, repr(r.corrected_rate), repr(r.sigma)])
