import math

import numpy as np
import pytest

from parafocus import (
    DonutBeam,
    FocusedBeam,
    MirrorGeometry,
    NoDistinctPeak,
    QuadratureError,
    QuadratureSpec,
    ZernikeMap,
    angular_domain,
    find_peak,
    focus_field,
    fwhm,
    scan,
    strehl_ratio,
)
from parafocus.focal_field import ScanProfile, try_fwhm

QUICK = QuadratureSpec(256, 128)


@pytest.fixture(scope="module")
def setup():
    geom = MirrorGeometry()
    return geom, DonutBeam(waist=4.7584), angular_domain(geom)


@pytest.fixture(scope="module")
def quick(setup):
    geom, beam, domain = setup
    return FocusedBeam(geom, beam, domain=domain, quad=QUICK)


def test_field_at_focus_is_axial(quick):
    e = quick.field(np.zeros((1, 3)))[0]
    assert abs(e[0]) < 1e-10 * abs(e[2]) and abs(e[1]) < 1e-10 * abs(e[2])


def test_peak_is_at_geometric_focus(quick):
    center, value = find_peak(quick)
    assert np.all(np.abs(center) < 1.0)
    assert value == pytest.approx(float(quick.intensity(np.zeros((1, 3)))[0]), rel=1e-6)


def test_field_scales_with_amplitude(setup):
    geom, beam, domain = setup
    pts = np.array([[0.0, 0.0, 0.0], [50.0, 20.0, -80.0], [-120.0, 0.0, 200.0]])
    one = FocusedBeam(geom, beam, domain=domain, quad=QUICK).field(pts)
    four = FocusedBeam(geom, DonutBeam(waist=beam.waist, power=4.0), domain=domain, quad=QUICK).field(pts)
    assert np.max(np.abs(four - 2.0 * one)) <= 1e-12 * np.max(np.abs(one))


def test_mirror_symmetry_of_the_spot(quick):
    # bores at phi = 0 and pi keep the domain symmetric under x -> -x and y -> -y
    xs = np.linspace(-400.0, 400.0, 33)
    for axis in ("x", "y"):
        prof = quick.intensity(quick.line(axis, xs))
        assert np.max(np.abs(prof - prof[::-1])) < 1e-3 * prof.max()


def test_side_lobes_are_weak(focused):
    prof = scan(focused("fsa"), "x", 1000.0, 10.0)
    y = prof.intensity
    i0 = int(np.argmax(y))
    # first minimum either side, then everything beyond it
    left = i0
    while left > 0 and y[left - 1] < y[left]:
        left -= 1
    right = i0
    while right < y.size - 1 and y[right + 1] < y[right]:
        right += 1
    outer = np.concatenate([y[:left], y[right + 1 :]])
    assert outer.max() < 0.35


def test_quadrature_convergence(setup, focused):
    geom, beam, domain = setup
    coarse = FocusedBeam(geom, beam, domain=domain, quad=QUICK)
    fine = focused("fsa")
    pts = np.array([[0.0, 0.0, 0.0], [70.0, 0.0, 0.0], [0.0, 0.0, 150.0], [40.0, -30.0, 90.0]])
    a, b = coarse.intensity(pts), fine.intensity(pts)
    assert np.max(np.abs(a - b)) / b.max() < 1e-4


def test_defocus_shifts_focus_symmetrically(setup):
    geom, beam, domain = setup
    ups = [find_peak(FocusedBeam(geom, beam, ZernikeMap(((2, 0, c),)), domain, QUICK))[0] for c in (0.1, -0.1)]
    assert abs(ups[0][2]) > 10.0
    assert ups[0][2] == pytest.approx(-ups[1][2], abs=0.5)


def test_points_outside_debye_range(quick):
    with pytest.raises(ValueError):
        quick.field(np.array([[0.0, 0.0, 5001.0]]))


def test_coarse_quadrature_is_rejected(setup):
    geom, beam, domain = setup
    coarse = FocusedBeam(geom, beam, domain=domain, quad=QuadratureSpec(16, 16))
    with pytest.raises(QuadratureError):
        coarse.field(np.array([[0.0, 0.0, 3000.0]]))
    with pytest.raises(ValueError):
        QuadratureSpec(8, 64)


def test_steep_aberration_needs_finer_quadrature(setup):
    geom, beam, domain = setup
    with pytest.raises(QuadratureError):
        FocusedBeam(geom, beam, ZernikeMap(((10, 0, 5.0),)), domain, QuadratureSpec(32, 32))


def _gauss(sigma, half=1000.0, step=1.0, shift=0.0):
    x = np.arange(-half, half + step, step)
    return ScanProfile("x", x, np.exp(-((x - shift) ** 2) / (2 * sigma**2)))


def test_fwhm_of_gaussian():
    assert fwhm(_gauss(100.0)) == pytest.approx(2 * math.sqrt(2 * math.log(2)) * 100.0, abs=0.5)
    assert fwhm(_gauss(100.0, step=7.0, shift=13.0)) == pytest.approx(235.48, abs=0.5)


def test_fwhm_split_focus():
    x = np.arange(-1000.0, 1001.0, 5.0)
    y = np.exp(-((x - 300) ** 2) / 2e4) + 0.8 * np.exp(-((x + 300) ** 2) / 2e4)
    with pytest.raises(NoDistinctPeak):
        fwhm(ScanProfile("z", x, y))
    assert try_fwhm(ScanProfile("z", x, y)) is None


def test_fwhm_weak_side_lobe_is_allowed():
    x = np.arange(-1000.0, 1001.0, 5.0)
    y = np.exp(-(x**2) / 2e4) + 0.3 * np.exp(-((x - 500) ** 2) / 2e4)
    assert fwhm(ScanProfile("z", x, y)) == pytest.approx(2.3548 * 100.0, abs=1.0)


def test_fwhm_truncated_profile():
    with pytest.raises(NoDistinctPeak):
        fwhm(_gauss(400.0, half=300.0))
    with pytest.raises(NoDistinctPeak):
        fwhm(ScanProfile("x", [0.0, 1.0], [1.0, 0.0]))


def test_scan_validation(quick):
    for args in (("x", 100.0, 0.0), ("x", 0.0, 10.0), ("w", 100.0, 10.0)):
        with pytest.raises(ValueError):
            scan(quick, *args, center=(0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        ScanProfile("x", [0.0, 0.0, 1.0], [1.0, 1.0, 1.0])


def test_strehl_ratio(setup):
    geom, beam, domain = setup
    pts = np.zeros((1, 3))
    ref = focus_field(geom, beam, None, domain, pts, QUICK)
    assert strehl_ratio(ref, ref) == pytest.approx(1.0)
    tilt = focus_field(geom, beam, ZernikeMap(((1, 1, 0.02),)), domain, pts, QUICK)
    assert 0.0 < strehl_ratio(tilt, ref) < 1.0
    with pytest.raises(ValueError):
        strehl_ratio(ref, tilt)
    other = focus_field(geom, beam, None, angular_domain(geom, geom.half_solid_angle_radius), pts, QUICK)
    with pytest.raises(ValueError):
        strehl_ratio(other, ref)
    shifted = focus_field(geom, beam, None, domain, pts + 10.0, QUICK)
    with pytest.raises(ValueError):
        strehl_ratio(shifted, ref)
    brighter = focus_field(geom, DonutBeam(waist=beam.waist, power=2.0), None, domain, pts, QUICK)
    with pytest.raises(ValueError):
        strehl_ratio(brighter, ref)
