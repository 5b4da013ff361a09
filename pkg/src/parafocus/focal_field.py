"""Vectorial Debye focusing over the mirror's angular domain.

The focal field is the angular-spectrum sum

    E(r) = sum_nodes w a(theta) exp(i Phi(theta, phi)) e_theta exp(i k . r)

over a product quadrature of the reference sphere, with the plane-wave
vector ``k`` pointing from the mirror point towards the focus. Positions
are in nm relative to the geometric focus; z is the optical axis.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .aberrations import ZERO_MAP, evaluate_phase
from .beams import project_to_sphere
from .geometry import angle_to_aperture

DEBYE_HALF_RANGE_NM = 5000.0
AXES = {"x": 0, "y": 1, "z": 2}


class QuadratureError(RuntimeError):
    """The angular quadrature is too coarse for the requested field region."""


class NoDistinctPeak(ValueError):
    """A profile has no single peak whose half-maximum width can be quoted."""


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_theta: int = 512
    nodes_phi: int = 256

    def __post_init__(self):
        if self.nodes_theta < 16 or self.nodes_phi < 16:
            raise ValueError("quadrature needs at least 16 nodes per direction")


@dataclass
class FocalFieldGrid:
    """Complex field vectors (arbitrary common units) at focal-region points (nm)."""

    points: np.ndarray
    field: np.ndarray
    wavelength: float
    domain: object
    wavefront: str
    beam: str = ""

    @property
    def intensity(self):
        return np.sum(np.abs(self.field) ** 2, axis=1)

    def metadata(self):
        return (self.wavelength, self.domain, self.beam)


@dataclass
class ScanProfile:
    """Normalised 1D intensity cut; ``peak`` keeps the absolute maximum."""

    axis: str
    positions: np.ndarray
    intensity: np.ndarray
    peak: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.positions.size > 1 and np.any(np.diff(self.positions) <= 0.0):
            raise ValueError("scan positions must be strictly increasing")


@dataclass
class FocusedBeam:
    """Pre-tabulated quadrature for one (geometry, beam, wavefront, domain) setting.

    Building the node tables once lets peak searches and scans evaluate the
    field at arbitrary points cheaply.
    """

    geometry: object
    beam: object
    wavefront: object = ZERO_MAP
    domain: object = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    amplitude: object = None
    backend: str = None

    def __post_init__(self):
        if self.domain is None:
            from .geometry import angular_domain

            self.domain = angular_domain(self.geometry)
        if self.amplitude is None:
            self.amplitude = project_to_sphere(self.beam, self.geometry)
        nodes = self.domain.nodes(self.quad.nodes_theta, self.quad.nodes_phi)
        theta, phi, w = nodes.active()
        self._theta = theta
        k = 2.0 * math.pi / self.wavelength
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        # plane waves travel from the mirror point (direction n) towards the focus
        self._kvec = -k * np.column_stack([st * cp, st * sp, ct])
        self._pol = np.column_stack([ct * cp, ct * sp, -st])
        coef = w * self.amplitude(theta)
        if not getattr(self.wavefront, "is_zero", False):
            h = angle_to_aperture(theta, self.geometry.focal_length)
            phase = evaluate_phase(self.wavefront, h, phi, self.geometry.front_aperture_radius)
            self._check_phase_sampling(phase.reshape(-1) if phase.ndim else phase, nodes)
            coef = coef * np.exp(1j * phase)
        self._coef = np.asarray(coef, dtype=complex)
        self._d_cos = float(math.cos(self.domain.theta_min) - math.cos(self.domain.theta_max))

    @property
    def wavelength(self):
        return self.amplitude.wavelength

    @property
    def power_on_domain(self):
        """Incident power reaching the focus through the domain (beam units)."""
        nodes = self.domain.nodes(self.quad.nodes_theta, self.quad.nodes_phi)
        return float(np.sum(nodes.weights * np.abs(self.amplitude(nodes.theta)) ** 2))

    def _check_phase_sampling(self, phase, nodes):
        # aberration phase must not jump by more than ~pi/2 between neighbouring nodes
        full = np.zeros(nodes.theta.size)
        full[nodes.mask] = phase
        grid = full.reshape(nodes.n_theta, nodes.n_phi)
        mask = nodes.mask.reshape(nodes.n_theta, nodes.n_phi)
        d_theta = np.abs(np.diff(grid, axis=0))[mask[1:] & mask[:-1]]
        d_phi = np.abs(np.diff(grid, axis=1))[mask[:, 1:] & mask[:, :-1]]
        worst = max(d_theta.max(initial=0.0), d_phi.max(initial=0.0))
        if worst > math.pi / 2:
            raise QuadratureError(
                f"aberration phase changes by {worst:.2f} rad between nodes; increase the quadrature"
            )

    def _check_points(self, points):
        if points.size == 0:
            return
        extent = np.max(np.abs(points))
        if extent > DEBYE_HALF_RANGE_NM:
            raise ValueError(f"points reach {extent:.0f} nm; the Debye integral is limited to +-5 um")
        k = 2.0 * math.pi / self.wavelength
        r_max = float(np.max(np.linalg.norm(points, axis=1)))
        # product rule resolves exp(i k r cos) once nodes exceed the phase excursion
        need_theta = 0.5 * k * r_max * self._d_cos + 8
        need_phi = k * r_max + 8
        if self.quad.nodes_theta < need_theta or self.quad.nodes_phi < need_phi:
            raise QuadratureError(
                f"quadrature {self.quad.nodes_theta}x{self.quad.nodes_phi} too coarse for r = {r_max:.0f} nm "
                f"(needs about {math.ceil(need_theta)}x{math.ceil(need_phi)})"
            )

    def field(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_points(points)
        return kernels.debye_sum(points, self._kvec, self._coef, self._pol, backend=self.backend)

    def intensity(self, points):
        return np.sum(np.abs(self.field(points)) ** 2, axis=1)

    def field_grid(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return FocalFieldGrid(
            points=points,
            field=self.field(points),
            wavelength=self.wavelength,
            domain=self.domain,
            wavefront=self.wavefront.describe(),
            beam=repr(self.beam),
        )

    def line(self, axis, positions, center=(0.0, 0.0, 0.0)):
        pts = np.tile(np.asarray(center, dtype=float), (len(positions), 1))
        pts[:, AXES[axis]] += positions
        return pts


def focus_field(geometry, beam, wavefront, domain, points, quad=None):
    """Field of ``beam`` focused by ``geometry`` over ``domain`` at ``points`` (nm)."""
    problem = FocusedBeam(geometry, beam, wavefront or ZERO_MAP, domain, quad or QuadratureSpec())
    return problem.field_grid(points)


def find_peak(problem, axial_range=2000.0, lateral_range=500.0, coarse_step=20.0):
    """Location (nm) and value of the intensity maximum near the focus.

    A coarse on-axis scan picks the axial lobe, a lateral scan follows the
    spot sideways, and bounded Brent refinement polishes each coordinate.
    """
    zs = np.arange(-axial_range, axial_range + 0.5 * coarse_step, coarse_step)
    iz = problem.intensity(problem.line("z", zs))
    center = np.array([0.0, 0.0, zs[int(np.argmax(iz))]])
    xs = np.arange(-lateral_range, lateral_range + 0.5 * coarse_step, coarse_step)
    for axis in ("x", "y"):
        ix = problem.intensity(problem.line(axis, xs, center))
        center[AXES[axis]] += xs[int(np.argmax(ix))]

    def value_along(axis, t):
        p = center.copy()
        p[AXES[axis]] += t
        return float(problem.intensity(p[None, :])[0])

    for _ in range(2):
        for axis in ("z", "x", "y"):
            res = minimize_scalar(
                lambda t: -value_along(axis, t),
                bounds=(-coarse_step, coarse_step),
                method="bounded",
                options={"xatol": 1e-3},
            )
            if -res.fun >= value_along(axis, 0.0):
                center[AXES[axis]] += res.x
    return center, float(problem.intensity(center[None, :])[0])


def scan(problem, axis, half_range, step, center=None):
    """Intensity profile along ``axis`` through ``center`` (default: the peak).

    The profile is normalised to its own maximum; the absolute maximum is kept
    in ``peak``.
    """
    if step <= 0.0:
        raise ValueError("scan step must be positive")
    if half_range <= 0.0:
        raise ValueError("scan half range must be positive")
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}")
    if center is None:
        center, _ = find_peak(problem)
    n = int(round(half_range / step))
    positions = step * np.arange(-n, n + 1)
    values = problem.intensity(problem.line(axis, positions, center))
    peak = float(values.max())
    if peak <= 0.0:
        raise ValueError("profile carries no intensity")
    return ScanProfile(axis, positions, values / peak, peak, tuple(float(c) for c in center))


def _local_maxima(values):
    interior = np.flatnonzero((values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])) + 1
    return interior


def fwhm(profile, prominence=0.05):
    """Linearly interpolated full width at half maximum (nm).

    Raises :class:`NoDistinctPeak` when a half crossing is missing or a second
    lobe, separated from the main one by a clear dip, reaches half maximum
    (a split focus).
    """
    x, y = profile.positions, profile.intensity
    if x.size < 3:
        raise NoDistinctPeak("profile too short")
    i0 = int(np.argmax(y))
    peak = y[i0]
    half = 0.5 * peak
    for i in _local_maxima(y):
        if i == i0 or y[i] < half:
            continue
        lo, hi = sorted((i, i0))
        dip = y[lo : hi + 1].min()
        if dip < (1.0 - prominence) * min(y[i], peak):
            raise NoDistinctPeak(f"secondary maximum of {y[i] / peak:.2f} at {x[i]:.0f} nm")
    left = i0
    while left > 0 and y[left] >= half:
        left -= 1
    right = i0
    while right < y.size - 1 and y[right] >= half:
        right += 1
    if y[left] >= half or y[right] >= half:
        raise NoDistinctPeak("half-maximum crossing outside the scanned range")
    xl = x[left] + (half - y[left]) * (x[left + 1] - x[left]) / (y[left + 1] - y[left])
    xr = x[right - 1] + (half - y[right - 1]) * (x[right] - x[right - 1]) / (y[right] - y[right - 1])
    return float(xr - xl)


def try_fwhm(profile):
    """:func:`fwhm`, with ``None`` for the no-distinct-peak outcome."""
    try:
        return fwhm(profile)
    except NoDistinctPeak:
        return None


def strehl_ratio(aberrated, reference):
    """Peak intensity of ``aberrated`` relative to the aberration-free ``reference``."""
    if aberrated.wavelength != reference.wavelength or aberrated.domain != reference.domain:
        raise ValueError("Strehl ratio needs fields of equal wavelength and angular domain")
    if aberrated.beam != reference.beam:
        raise ValueError("Strehl ratio needs fields of the same incident beam")
    if aberrated.points.shape != reference.points.shape or not np.allclose(aberrated.points, reference.points):
        raise ValueError("Strehl ratio needs fields on the same grid")
    if reference.wavefront != "zero":
        raise ValueError("reference field must be aberration free")
    return float(aberrated.intensity.max() / reference.intensity.max())


def peak_strehl(aberrated, reference):
    """Strehl ratio from refined peak searches of two :class:`FocusedBeam` objects."""
    _, i_ab = find_peak(aberrated)
    _, i_ref = find_peak(reference)
    return i_ab / i_ref
