import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from atomjunction.detector import (
    COUNT_COLUMNS,
    DetectorModel,
    absorbed_fraction_sigma,
    count_sigma,
    count_variance,
    detection_rate,
    lost_fraction,
    measured_rate,
    photon_flux,
    power_from_counts,
    records_from_counts,
    simulate_count_array,
    simulate_counts,
    smooth,
    true_rate,
    write_counts_csv,
)

def test_measured_rate_hand_value():
    n = 0.5 * 1e7 + 130.0
    assert measured_rate(1e7) == pytest.approx(n / (1 + n * 32e-9))
    assert measured_rate(0.0) == pytest.approx(130.0 / (1 + 130.0 * 32e-9))
    with pytest.raises(ValueError):
        measured_rate(-1.0)


@given(st.floats(0.0, 1e9))
def test_true_rate_inverts_measured(photons):
    m = measured_rate(photons)
    assert true_rate(m) == pytest.approx(detection_rate(photons, DetectorModel()), rel=1e-9)


def test_true_rate_rejects_impossible_rates():
    with pytest.raises(ValueError):
        true_rate(1.01 / 32e-9)


def test_loss_fraction_is_m_tau():
    # 1 - m/n = m tau for the non-paralyzable model
    assert lost_fraction(1.5e7) == pytest.approx(1.5e7 * 32e-9)
    assert lost_fraction(1.5e7) == pytest.approx(0.48)


def test_power_from_counts_inverts_flux():
    for p in (0.5, 5.0, 40.0):
        assert power_from_counts(measured_rate(photon_flux(p))) == pytest.approx(p, rel=1e-10)


def test_photon_flux_hand_value():
    e = 6.62607015e-34 * 299792458.0 / 0.780241e-6
    assert photon_flux(1.0) == pytest.approx(1e-12 / e)


def test_count_variance_limits():
    assert count_variance(1e5, 2e-3, 0.0) == pytest.approx(200.0)
    assert count_variance(1e6, 2e-3, 32e-9) == pytest.approx(2000.0 / 1.032**3)


def test_count_sigma_poisson_limit():
    m = DetectorModel(dead_time=0.0, background_rate=0.0)
    assert count_sigma(400, 1e-3, m) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        count_sigma(400, 0.0, m)


def test_absorbed_fraction_sigma_scales_as_inverse_sqrt_shots():
    s1 = absorbed_fraction_sigma(1e6, 2e-3, 1, absorbed=0.02)
    s4 = absorbed_fraction_sigma(1e6, 2e-3, 4, absorbed=0.02)
    s100 = absorbed_fraction_sigma(1e6, 2e-3, 100, absorbed=0.02)
    assert s4 == pytest.approx(s1 / 2)
    assert s100 == pytest.approx(s1 / 10)


def test_absorbed_fraction_sigma_poisson_oracle():
    # no dead time, no absorption: sqrt(2/C) for two independent Poisson counts
    m = DetectorModel(dead_time=0.0, background_rate=0.0)
    assert absorbed_fraction_sigma(1e6, 1e-3, 1, m) == pytest.approx(math.sqrt(2 / 1000))


def test_simulated_mean_and_variance_match_theory():
    rate = 2e6
    model = DetectorModel()
    counts = simulate_count_array(lambda t: np.full_like(t, rate), 20000, 2e-4, model, seed=4).astype(float)
    m = measured_rate(rate, model)
    n = detection_rate(rate, model)
    var = count_variance(n, 2e-4, model.dead_time)
    assert abs(counts.mean() - m * 2e-4) < 4 * math.sqrt(var / counts.size)
    se = np.std((counts - counts.mean()) ** 2) / math.sqrt(counts.size)
    assert abs(counts.var(ddof=1) - var) < 4 * se


def test_no_dead_time_is_poisson():
    model = DetectorModel(quantum_efficiency=1.0, dead_time=0.0, background_rate=0.0)
    counts = simulate_count_array(lambda t: np.full_like(t, 5e5), 20000, 1e-4, model, seed=2).astype(float)
    assert counts.mean() == pytest.approx(50.0, abs=4 * math.sqrt(50 / 20000))
    assert counts.var(ddof=1) == pytest.approx(50.0, rel=0.05)


def test_time_varying_rate_follows_integral():
    model = DetectorModel(quantum_efficiency=1.0, dead_time=0.0, background_rate=0.0)
    window = 1e-4

    def ramp(t):
        return 1e6 * (1 + np.sin(2 * np.pi * t / 2e-3))

    runs = np.array([simulate_count_array(ramp, 20, window, model, seed=s, substeps=8) for s in range(300)], float)
    edges = np.arange(21) * window
    expected = 1e6 * (window - 2e-3 / (2 * np.pi) * (np.cos(2 * np.pi * edges[1:] / 2e-3) - np.cos(2 * np.pi * edges[:-1] / 2e-3)))
    np.testing.assert_allclose(runs.mean(axis=0), expected, atol=5 * np.sqrt(expected.max() / 300))


def test_simulation_is_deterministic():
    a = simulate_count_array(lambda t: np.full_like(t, 3e6), 500, 1e-4, seed=9)
    b = simulate_count_array(lambda t: np.full_like(t, 3e6), 500, 1e-4, seed=9)
    np.testing.assert_array_equal(a, b)
    assert simulate_count_array(lambda t: t, 0, 1e-4).size == 0
    with pytest.raises(ValueError):
        simulate_count_array(lambda t: t, 5, 0.0)


def test_records_and_csv(tmp_path):
    recs = simulate_counts(lambda t: np.full_like(t, 1e6), 5, 1e-3, seed=1)
    assert len(recs) == 5
    assert recs[2].time == pytest.approx(2e-3)
    for r in recs:
        assert r.corrected_rate == pytest.approx(true_rate(r.counts / 1e-3))
        assert r.sigma > 0
    path = tmp_path / "c.csv"
    write_counts_csv(path, recs)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == COUNT_COLUMNS
    assert len(rows) == 6
    assert int(rows[1][1]) == recs[0].counts


def test_rate_sigma_oracle():
    # d n / d m = 1/(1 - m tau)^2 carries the count sigma onto the corrected rate
    rec = records_from_counts([20000], 1e-3)[0]
    m = 2e7
    n = m / (1 - m * 32e-9)
    sig_c = math.sqrt(n * 1e-3 / (1 + n * 32e-9) ** 3)
    assert rec.sigma == pytest.approx(sig_c / 1e-3 / (1 - m * 32e-9) ** 2)


def test_smooth():
    x = np.array([0.0, 0.0, 3.0, 0.0, 0.0])
    np.testing.assert_allclose(smooth(x, 3), [0, 1, 1, 1, 0])
    np.testing.assert_allclose(smooth(x, 1), x)
    with pytest.raises(ValueError):
        smooth(x, 0)


def test_model_validation():
    with pytest.raises(ValueError):
        DetectorModel(quantum_efficiency=0.0)
    with pytest.raises(ValueError):
        DetectorModel(dead_time=-1e-9)
    with pytest.raises(ValueError):
        DetectorModel(attenuation=2.0)
