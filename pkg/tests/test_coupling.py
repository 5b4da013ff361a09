import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafocus import (
    DonutBeam,
    FocusedBeam,
    GridTooCoarse,
    MirrorGeometry,
    QuadratureSpec,
    ThermalState,
    angular_domain,
    convolve_psf,
    dipole_reference,
    mode_overlap,
    plane_psf,
    predict_coupling,
    project_to_sphere,
    weighted_solid_angle_linear,
)
from parafocus.coupling import convolve_axis, convolve_grid, gaussian_kernel
from parafocus.focal_field import ScanProfile, fwhm

QUICK = QuadratureSpec(256, 128)


@pytest.fixture(scope="module")
def quick():
    geom = MirrorGeometry()
    beam = DonutBeam(waist=4.7584)
    return geom, beam, FocusedBeam(geom, beam, domain=angular_domain(geom), quad=QUICK), dipole_reference(quad=QUICK)


def test_kernel_properties():
    assert np.array_equal(gaussian_kernel(0.0, 5.0), np.ones(1))
    k = gaussian_kernel(30.0, 2.0)
    assert k.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(k, k[::-1])
    with pytest.raises(GridTooCoarse):
        gaussian_kernel(30.0, 10.5)
    with pytest.raises(ValueError):
        gaussian_kernel(-1.0, 1.0)


def test_zero_width_is_identity():
    values = np.random.default_rng(0).random(50)
    assert np.array_equal(convolve_axis(values, 1.0, 0.0), values)


def _gauss_profile(sigma, step=1.0, half=1500.0):
    x = step * np.arange(-round(half / step), round(half / step) + 1)
    return ScanProfile("x", x, np.exp(-0.5 * (x / sigma) ** 2), 2.0)


@settings(max_examples=15, deadline=None)
@given(s1=st.floats(20.0, 120.0), s2=st.floats(5.0, 80.0))
def test_gaussian_closure(s1, s2):
    eff = convolve_psf(_gauss_profile(s1), s2)
    total = math.hypot(s1, s2)
    assert fwhm(eff.as_profile()) == pytest.approx(2.35482 * total, rel=1e-3)
    assert eff.reduction == pytest.approx(s1 / total, rel=1e-3)


def test_convolution_conserves_integral():
    prof = _gauss_profile(60.0)
    eff = convolve_psf(prof, 45.0)
    before = np.sum(prof.intensity * prof.peak)
    after = np.sum(eff.intensity * eff.peak)
    assert after == pytest.approx(before, rel=1e-4)


def test_grid_convolution_matches_axis_by_axis():
    rng = np.random.default_rng(3)
    img = rng.random((40, 30))
    both = convolve_grid(img, (2.0, 3.0), (10.0, 0.0))
    assert np.allclose(both, convolve_axis(img, 2.0, 10.0, axis=0))


def test_coarse_profile_is_rejected():
    with pytest.raises(GridTooCoarse):
        convolve_psf(_gauss_profile(60.0, step=20.0), 30.0)
    x = np.array([0.0, 1.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        convolve_psf(ScanProfile("x", x, np.ones(4)), 5.0)


def test_reference_couples_to_itself(quick):
    *_, ref = quick
    pred = predict_coupling(ref, None, ref)
    assert pred.G >= 0.999 and pred.peak_ratio >= 0.999


def test_point_ion_ratio_is_overlap_times_omega(quick):
    geom, beam, system, ref = quick
    domain = angular_domain(geom)
    eta = mode_overlap(project_to_sphere(beam, geom), domain, QUICK.nodes_theta, QUICK.nodes_phi)
    bound = eta**2 * weighted_solid_angle_linear(domain, QUICK.nodes_theta, QUICK.nodes_phi)
    pred = predict_coupling(system, None, ref)
    assert pred.peak_ratio == pytest.approx(bound, rel=1e-6)
    assert pred.G == pytest.approx(pred.peak_ratio)
    assert pred.axis_ratios == pytest.approx((1.0, 1.0, 1.0))


def test_coupling_decreases_with_ion_spread(quick):
    *_, system, ref = quick
    values = []
    for scale in (0.25, 0.5, 1.0, 1.5):
        state = ThermalState((0.0, 0.0, 0.0), (49.0 * scale, 48.0 * scale, 28.0 * scale))
        values.append(predict_coupling(system, state, ref).G)
    assert all(b < a for a, b in zip(values, values[1:]))


def test_full_aperture_beats_half_aperture(prediction):
    assert prediction("fsa").G > prediction("hsa").G
    assert prediction("fsa").peak_ratio > prediction("hsa").peak_ratio


def test_prediction_validation(quick):
    geom, beam, system, _ = quick
    other = dipole_reference(wavelength=400.0, quad=QUICK)
    with pytest.raises(ValueError):
        predict_coupling(system, None, other)
    dark = FocusedBeam(geom, DonutBeam(waist=4.7584, power=0.0), domain=angular_domain(geom), quad=QUICK)
    with pytest.raises(ValueError):
        predict_coupling(dark, None, quick[3])


def test_plane_psf_point_ion(quick):
    *_, system, _ = quick
    psf = plane_psf(system, (0.0, 0.0, 0.0), "xz", 200.0, 50.0)
    assert psf.u.size == psf.v.size == 9
    assert psf.field.shape == (9, 9, 3)
    assert np.array_equal(psf.effective, psf.intensity)
    line = system.intensity(system.line("x", psf.u))
    assert np.allclose(psf.intensity[:, 4], line, rtol=1e-12)
    assert psf.points().shape == (81, 3)


def test_plane_psf_thermal_matches_direct_convolution(quick):
    *_, system, _ = quick
    state = ThermalState((0.0, 0.0, 0.0), (40.0, 40.0, 25.0))
    psf = plane_psf(system, (0.0, 0.0, 0.0), "xy", 150.0, 50.0, state)
    # brute-force 2D Gaussian average at the centre
    t = np.arange(-240.0, 241.0, 8.0)
    uu, vv = np.meshgrid(t, t, indexing="ij")
    pts = np.column_stack([uu.ravel(), vv.ravel(), np.zeros(uu.size)])
    w = np.exp(-0.5 * (uu.ravel() ** 2 + vv.ravel() ** 2) / 40.0**2)
    direct = np.sum(w * system.intensity(pts)) / np.sum(w)
    assert psf.effective[3, 3] == pytest.approx(direct, rel=2e-3)
    assert psf.effective[3, 3] < psf.intensity[3, 3]


def test_plane_psf_validation(quick):
    *_, system, _ = quick
    with pytest.raises(ValueError):
        plane_psf(system, (0.0, 0.0, 0.0), "yy", 100.0, 50.0)
    with pytest.raises(ValueError):
        plane_psf(system, (0.0, 0.0, 0.0), "xy", 100.0, 0.0)
