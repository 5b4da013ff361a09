"""Shared, session-cached focusing problems; they dominate the suite's run time."""

import pytest

from parafocus import (
    ZERO_MAP,
    DonutBeam,
    FocusedBeam,
    MirrorGeometry,
    QuadratureSpec,
    angular_domain,
    dipole_reference,
    load_wavefront,
    optimize_waist,
    predict_coupling,
    synthetic_map_path,
    thermal_state,
)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def report():
    def _report(number, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return _report


@pytest.fixture(scope="session")
def geometry():
    return MirrorGeometry()


@pytest.fixture(scope="session")
def waist(geometry):
    return optimize_waist(geometry)


@pytest.fixture(scope="session")
def beam(waist):
    return DonutBeam(waist=waist)


@pytest.fixture(scope="session")
def doppler():
    return thermal_state()


@pytest.fixture(scope="session")
def reference():
    return dipole_reference()


@pytest.fixture(scope="session")
def synthetic_map():
    return load_wavefront(synthetic_map_path())


@pytest.fixture(scope="session")
def focused(geometry, beam):
    """``focused(aperture, wavefront, quad)`` with results cached per key."""
    cache = {}

    def get(aperture="fsa", wavefront=ZERO_MAP, quad=QuadratureSpec()):
        key = (aperture, wavefront, quad)
        if key not in cache:
            illum = geometry.half_solid_angle_radius if aperture == "hsa" else None
            cache[key] = FocusedBeam(geometry, beam, wavefront, angular_domain(geometry, illum), quad)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def prediction(focused, doppler, reference):
    """Doppler-ion coupling prediction at default settings, cached per scenario."""
    cache = {}

    def get(aperture="fsa", wavefront=ZERO_MAP):
        key = (aperture, wavefront)
        if key not in cache:
            cache[key] = predict_coupling(focused(aperture, wavefront), doppler, reference)
        return cache[key]

    return get
