import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafocus import (
    DetectionChain,
    EmptyDatasetError,
    SaturationDataset,
    detection_budget,
    detection_rate,
    fit_coupling,
    load_dataset,
    pulsed_eta,
    s_gate,
    save_dataset,
    saturation_power,
    synthesize_dataset,
    YB174,
)
from parafocus.constants import mhz
from parafocus.saturation import max_rate, powers_for_rates

P_SAT = saturation_power(YB174.wavelength_exc_nm, YB174.gamma)
ETA = 0.0142


def test_saturation_power_values():
    assert P_SAT == pytest.approx(2.48e-11, rel=5e-3)
    assert saturation_power(YB174.wavelength_exc_nm, YB174.gamma, -mhz(14.2)) == pytest.approx(7.7e-11, rel=1e-2)
    # detuning enters squared
    assert saturation_power(369.5, YB174.gamma, mhz(5.0)) == saturation_power(369.5, YB174.gamma, -mhz(5.0))
    with pytest.raises(ValueError):
        saturation_power(0.0, YB174.gamma)


def test_rate_limits():
    assert detection_rate(0.0, 0.5, ETA) == 0.0
    assert detection_rate(1e3, 0.5, ETA) == pytest.approx(max_rate(ETA), rel=1e-9)
    assert detection_rate(P_SAT, 1.0, 1.0) == pytest.approx(0.5 * max_rate(1.0))
    with pytest.raises(ValueError):
        detection_rate(P_SAT, -0.1, ETA)


def test_rate_is_concave_and_increasing():
    p = np.linspace(0.0, 20 * P_SAT, 400)
    r = detection_rate(p, 0.3, ETA)
    assert np.all(np.diff(r) > 0.0)
    assert np.all(np.diff(r, 2) < 0.0)


def test_weak_excitation_is_nearly_linear():
    # below S = 0.1 the curve stays within 10 % of its tangent at the origin
    p = np.linspace(1e-3, 0.1, 50) * P_SAT / 0.4
    r = detection_rate(p, 0.4, ETA)
    linear = max_rate(ETA) * 0.4 * p / P_SAT
    assert np.all(r <= linear)
    assert np.all(1.0 - r / linear <= 0.1 / 1.1 + 1e-12)


def test_gate_threshold_rate():
    # S = 0.1 at the default detection efficiency sits near the 392 cps cut
    cut = max_rate(ETA) * 0.1 / 1.1
    assert cut == pytest.approx(392.0, rel=0.02)
    data = SaturationDataset(np.arange(1.0, 6.0), [100.0, 300.0, cut - 1.0, cut + 1.0, 500.0], 1.0)
    assert len(s_gate(data)) == 3
    with pytest.raises(EmptyDatasetError):
        s_gate(SaturationDataset([1.0], [500.0], 1.0))
    with pytest.raises(ValueError):
        s_gate(data, s_max=0.0)
    with pytest.raises(ValueError):
        s_gate(data, G_prior=0.1)


def test_model_gate_uses_prior():
    p = np.array([0.05, 0.1, 0.2]) * P_SAT / 0.5
    data = SaturationDataset(p, [1.0, 1.0, 1.0], 1.0)
    assert len(s_gate(data, 0.5, P_SAT)) == 2


@pytest.mark.parametrize("truth", [0.05, 0.137, 0.6])
def test_noiseless_fit_recovers_truth(truth):
    powers = powers_for_rates(np.linspace(39.2, 392.0, 10), truth, ETA)
    data = synthesize_dataset(truth, ETA, powers=powers, noiseless=True)
    fit = fit_coupling(data, eta_det=ETA)
    assert fit.G == pytest.approx(truth, abs=1e-6)
    assert fit.points_used == 10


def test_fit_with_background():
    powers = powers_for_rates(np.linspace(39.2, 350.0, 12), 0.2, ETA)
    data = synthesize_dataset(0.2, ETA, powers=powers, background=30.0, noiseless=True)
    assert fit_coupling(data, eta_det=ETA).G == pytest.approx(0.2, abs=1e-6)


def test_fit_ignores_saturated_records():
    truth = 0.137
    weak = powers_for_rates(np.linspace(39.2, 392.0, 8), truth, ETA)
    strong = weak[-1] * np.array([5.0, 20.0, 80.0])
    data = synthesize_dataset(truth, ETA, powers=np.concatenate([weak, strong]), noiseless=True)
    fit = fit_coupling(data, eta_det=ETA)
    assert fit.points_used == 8
    assert fit.G == pytest.approx(truth, abs=1e-6)


def test_fitted_coupling_scales_inversely_with_detection_efficiency():
    # in the weak limit the data fix G * eta_det
    powers = powers_for_rates(np.linspace(5.0, 40.0, 8), 0.2, ETA)
    data = synthesize_dataset(0.2, ETA, powers=powers, noiseless=True)
    g1 = fit_coupling(data, eta_det=ETA).G
    g2 = fit_coupling(data, eta_det=2 * ETA).G
    assert g1 / g2 == pytest.approx(2.0, rel=0.02)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_coupling(SaturationDataset([1e-12, 2e-12, 3e-12], [0.0, 0.0, 0.0], 1.0))
    p = powers_for_rates([100.0, 200.0], 0.1, ETA)
    with pytest.raises(EmptyDatasetError):
        fit_coupling(synthesize_dataset(0.1, ETA, powers=p, noiseless=True), eta_det=ETA)


def test_synthesis_is_seeded():
    p = powers_for_rates(np.linspace(39.2, 392.0, 10), 0.137, ETA)
    a = synthesize_dataset(0.137, ETA, powers=p, seed=5)
    b = synthesize_dataset(0.137, ETA, powers=p, seed=5)
    c = synthesize_dataset(0.137, ETA, powers=p, seed=6)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_synthesis_mean_approaches_model():
    p = np.full(4000, P_SAT)
    data = synthesize_dataset(0.1, ETA, powers=p, exposure=2.0, seed=1)
    expected = detection_rate(P_SAT, 0.1, ETA) * 2.0
    assert data.counts.mean() == pytest.approx(expected, rel=3 * math.sqrt(expected / 4000) / expected + 1e-3)


@settings(max_examples=25, deadline=None)
@given(rate=st.floats(1.0, 1000.0), g=st.floats(0.01, 1.0))
def test_powers_for_rates_inverts_model(rate, g):
    p = powers_for_rates([rate], g, ETA)
    assert detection_rate(p, g, ETA)[0] == pytest.approx(rate, rel=1e-9)


def test_dataset_round_trip(tmp_path):
    data = synthesize_dataset(0.137, ETA, powers=[1e-12, 2e-12, 5e-12], exposure=[1.0, 2.0, 0.5], seed=3)
    path = tmp_path / "d.csv"
    save_dataset(data, path)
    back = load_dataset(path)
    assert np.array_equal(back.p_exc, data.p_exc)
    assert np.array_equal(back.counts, data.counts)
    assert np.array_equal(back.exposure, data.exposure)


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("p,c,t\n", ":1:"),
        ("p_exc_watt,counts,exposure_s\n1e-12,5\n", ":2:"),
        ("p_exc_watt,counts,exposure_s\n1e-12,5,1\n\n1e-12,x,1\n", ":4:"),
        ("p_exc_watt,counts,exposure_s\n1e-12,-5,1\n", ":2:"),
        ("p_exc_watt,counts,exposure_s\n", "no data"),
    ],
)
def test_malformed_dataset(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ValueError, match=match):
        load_dataset(path)


def test_dataset_validation():
    with pytest.raises(ValueError):
        SaturationDataset([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ValueError):
        SaturationDataset([1.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        SaturationDataset([-1.0], [1.0], 1.0)


def test_detection_budget():
    assert detection_budget(DetectionChain()) == pytest.approx(0.67 * 0.13 * 0.81 * 0.43)
    assert detection_budget(DetectionChain({})) == 1.0
    with pytest.raises(ValueError):
        DetectionChain({"lossy": 1.2})


def test_pulsed_eta():
    assert pulsed_eta(142, 10000) == 0.0142
    assert pulsed_eta(150, 10000, background_rate=400.0, gate=2e-6) == pytest.approx(0.0142)
    with pytest.raises(ValueError):
        pulsed_eta(1, 0)
    with pytest.raises(ValueError):
        pulsed_eta(1, 100, background_rate=1e6, gate=1e-3)


def test_pulsed_eta_reproduces_synthetic_chain():
    rng = np.random.default_rng(11)
    detected = rng.binomial(200_000, 0.0142)
    assert pulsed_eta(detected, 200_000) == pytest.approx(0.0142, rel=0.05)


@pytest.mark.parametrize("truth", [0.086, 0.137])
def test_measured_regime_round_trip(truth):
    powers = powers_for_rates(np.linspace(39.2, 392.0, 10), truth, ETA)
    hits = 0
    for seed in range(40):
        g = fit_coupling(synthesize_dataset(truth, ETA, powers=powers, seed=seed), eta_det=ETA).G
        hits += abs(g - truth) <= 0.05 * truth
    assert hits >= 34
