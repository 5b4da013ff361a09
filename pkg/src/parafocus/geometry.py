"""Parabolic-mirror geometry and solid-angle bookkeeping.

Angles follow one convention everywhere in the package: the polar angle
``theta`` is measured from the optical axis pointing out of the open front
aperture, so the mirror vertex is seen from the focus at ``theta = pi`` and
the rim of a 2f-radius aperture at ``theta = pi/2``. The azimuth ``phi`` is
the azimuth of the mirror point in the aperture plane.

Lengths are in millimetres.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np


@dataclass(frozen=True)
class BoreSpec:
    """Circular hole in the mirror, described in the aperture plane."""

    center_radius: float
    radius: float
    azimuth: float = 0.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"bore radius must be positive, got {self.radius}")
        if self.center_radius < 0.0:
            raise ValueError("bore center radius must be non-negative")

    @property
    def on_axis(self):
        return self.center_radius == 0.0


def _default_bores():
    return (
        BoreSpec(0.0, 0.75),
        BoreSpec(1.5, 0.25, 0.0),
        BoreSpec(1.5, 0.25, math.pi),
    )


@dataclass(frozen=True)
class MirrorGeometry:
    """Deep parabolic mirror with its focus at the origin.

    The default bores reproduce the trap bore (1.5 mm diameter, on axis) and
    two 0.5 mm access bores, whose azimuthal placement is a free choice.
    """

    focal_length: float = 2.1
    front_aperture_radius: float = 10.0
    bores: tuple = field(default_factory=_default_bores)

    def __post_init__(self):
        if self.focal_length <= 0.0:
            raise ValueError(f"focal length must be positive, got {self.focal_length}")
        if self.front_aperture_radius <= 0.0:
            raise ValueError("front aperture radius must be positive")
        object.__setattr__(self, "bores", tuple(self.bores))
        for bore in self.bores:
            if bore.center_radius + bore.radius > self.front_aperture_radius:
                raise ValueError(f"bore {bore} does not lie inside the front aperture")

    @property
    def half_solid_angle_radius(self):
        """Aperture radius (2f) whose rim is seen from the focus at 90 degrees."""
        return 2.0 * self.focal_length

    def without_bores(self):
        return replace(self, bores=())


def aperture_to_angle(h, f):
    """Polar angle of the mirror point at aperture radius ``h``.

    Uses ``cos(theta) = (h^2/4f - f) / (h^2/4f + f)`` for the parabola
    ``z = h^2/4f - f``. Accepts scalars or arrays.
    """
    h = np.asarray(h, dtype=float)
    if f <= 0.0:
        raise ValueError(f"focal length must be positive, got {f}")
    if np.any(h < 0.0):
        raise ValueError("aperture radius must be non-negative")
    # 2*arctan(2f/h) is the same angle without cancellation near the vertex
    theta = np.pi - 2.0 * np.arctan(h / (2.0 * f))
    return theta if theta.ndim else float(theta)


def angle_to_aperture(theta, f):
    """Inverse of :func:`aperture_to_angle`: ``h = 2 f tan((pi - theta)/2)``."""
    theta = np.asarray(theta, dtype=float)
    h = 2.0 * f * np.tan(0.5 * (np.pi - theta))
    return h if h.ndim else float(h)


@dataclass(frozen=True)
class SphereNodes:
    """Product quadrature on a polar band of the unit sphere.

    ``theta`` and ``phi`` are flattened node coordinates, ``weights`` the
    solid-angle weights (already zeroed where the domain indicator vanishes).
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    mask: np.ndarray
    n_theta: int
    n_phi: int

    def active(self):
        """Node subset with non-zero weight."""
        keep = self.mask
        return self.theta[keep], self.phi[keep], self.weights[keep]


def _gauss_legendre_band(theta_lo, theta_hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    c_lo, c_hi = math.cos(theta_hi), math.cos(theta_lo)
    half = 0.5 * (c_hi - c_lo)
    cos_t = half * x + 0.5 * (c_hi + c_lo)
    return np.arccos(cos_t), w * half


@dataclass(frozen=True)
class AngularDomain:
    """Indicator of the directions covered by the focusing optics.

    The domain is a polar band ``theta_min <= theta <= theta_max`` with
    optional off-axis bores (exclusions mapped through the parabola) and an
    optional azimuthal sector list. Axisymmetric limits live in the band so
    the product Gauss-Legendre rule integrates them exactly.
    """

    theta_min: float = 0.0
    theta_max: float = math.pi
    bores: tuple = ()
    focal_length: float = None
    phi_sectors: tuple = None

    def __post_init__(self):
        if not 0.0 <= self.theta_min < self.theta_max <= math.pi + 1e-15:
            raise ValueError(f"invalid polar band [{self.theta_min}, {self.theta_max}]")
        if self.bores and self.focal_length is None:
            raise ValueError("off-axis bores need the focal length to be mapped")
        object.__setattr__(self, "bores", tuple(self.bores))

    @classmethod
    def full_sphere(cls):
        return cls(0.0, math.pi)

    @classmethod
    def cone(cls, theta_min, theta_max):
        return cls(theta_min, theta_max)

    def restricted(self, theta_min=None, theta_max=None, phi_sectors=None):
        """Sub-domain with a tighter band and/or an azimuthal sector list."""
        return replace(
            self,
            theta_min=self.theta_min if theta_min is None else max(theta_min, self.theta_min),
            theta_max=self.theta_max if theta_max is None else min(theta_max, self.theta_max),
            phi_sectors=self.phi_sectors if phi_sectors is None else tuple(phi_sectors),
        )

    def indicator(self, theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        inside = (theta >= self.theta_min) & (theta <= self.theta_max)
        if self.bores:
            h = angle_to_aperture(theta, self.focal_length)
            x, y = h * np.cos(phi), h * np.sin(phi)
            for bore in self.bores:
                bx = bore.center_radius * math.cos(bore.azimuth)
                by = bore.center_radius * math.sin(bore.azimuth)
                inside &= (x - bx) ** 2 + (y - by) ** 2 > bore.radius**2
        if self.phi_sectors is not None:
            wrapped = np.mod(phi, 2.0 * np.pi)
            in_sector = np.zeros_like(inside)
            for lo, hi in self.phi_sectors:
                in_sector |= (wrapped >= lo) & (wrapped < hi)
            inside &= in_sector
        return inside

    def _bore_arcs(self, theta):
        """Excluded azimuth half-widths per bore for each polar angle.

        A ring of aperture radius h meets a bore (centre distance b, radius r)
        over ``|phi - azimuth| < delta`` with ``cos(delta) = (h^2 + b^2 - r^2) / 2hb``.
        """
        if not self.bores:
            return []
        h = angle_to_aperture(theta, self.focal_length)
        arcs = []
        for bore in self.bores:
            b, r = bore.center_radius, bore.radius
            with np.errstate(divide="ignore", invalid="ignore"):
                cos_delta = (h * h + b * b - r * r) / (2.0 * h * b)
            delta = np.arccos(np.clip(np.nan_to_num(cos_delta, nan=1.0), -1.0, 1.0))
            arcs.append((bore.azimuth, delta))
        return arcs

    def nodes(self, n_theta=512, n_phi=256):
        """Gauss-Legendre in cos(theta) times midpoint trapezoid in phi.

        Bore and sector edges cut through azimuthal cells; each cell is
        weighted by the exact fraction of its arc inside the domain.
        """
        if n_theta < 2 or n_phi < 1:
            raise ValueError("need at least 2 polar and 1 azimuthal node")
        theta_1d, w_theta = _gauss_legendre_band(self.theta_min, self.theta_max, n_theta)
        dphi = 2.0 * np.pi / n_phi
        phi_1d = (np.arange(n_phi) + 0.5) * dphi
        cell_lo = phi_1d - 0.5 * dphi
        coverage = np.ones((n_theta, n_phi))
        for azimuth, delta in self._bore_arcs(theta_1d):
            lo = (azimuth - delta)[:, None]
            hi = (azimuth + delta)[:, None]
            coverage -= _arc_overlap(cell_lo[None, :], dphi, lo, hi) / dphi
        if self.phi_sectors is not None:
            inside = np.zeros((1, n_phi))
            for lo, hi in self.phi_sectors:
                inside = inside + _arc_overlap(cell_lo[None, :], dphi, lo, hi) / dphi
            coverage = coverage * inside
        coverage = np.clip(coverage, 0.0, 1.0)
        coverage[coverage < 1e-12] = 0.0
        theta, phi = np.meshgrid(theta_1d, phi_1d, indexing="ij")
        weights = (w_theta[:, None] * dphi) * coverage
        weights = weights.ravel()
        return SphereNodes(theta.ravel(), phi.ravel(), weights, weights > 0.0, n_theta, n_phi)


def _arc_overlap(cell_lo, width, lo, hi):
    """Length of ``[cell_lo, cell_lo + width]`` inside the arc ``[lo, hi]`` modulo 2 pi."""
    total = 0.0
    for shift in (-2.0 * np.pi, 0.0, 2.0 * np.pi):
        a = np.maximum(cell_lo, lo + shift)
        b = np.minimum(cell_lo + width, hi + shift)
        total = total + np.clip(b - a, 0.0, None)
    return total


def angular_domain(geometry, illumination_radius=None):
    """Directions covered by ``geometry``, optionally limited by an input aperture.

    ``illumination_radius`` clips the incident beam in the aperture plane;
    ``geometry.half_solid_angle_radius`` gives the half-solid-angle setting.
    """
    f = geometry.focal_length
    outer = geometry.front_aperture_radius
    if illumination_radius is not None:
        if illumination_radius <= 0.0:
            raise ValueError("illumination radius must be positive")
        outer = min(outer, illumination_radius)
    theta_min = aperture_to_angle(outer, f)
    theta_max = math.pi
    off_axis = []
    for bore in geometry.bores:
        if bore.on_axis:
            theta_max = min(theta_max, aperture_to_angle(bore.radius, f))
        else:
            off_axis.append(bore)
    return AngularDomain(theta_min, theta_max, tuple(off_axis), f)


def solid_angle_fraction(domain, n_theta=512, n_phi=256):
    """Covered solid angle divided by 4 pi."""
    nodes = domain.nodes(n_theta, n_phi)
    return float(np.sum(nodes.weights) / (4.0 * np.pi))


def weighted_solid_angle_linear(domain, n_theta=512, n_phi=256):
    """Solid angle weighted by the irradiance of a dipole along the optical axis.

    Normalised to 8 pi/3, so the full sphere gives 1.
    """
    nodes = domain.nodes(n_theta, n_phi)
    return float(3.0 / (8.0 * np.pi) * np.sum(nodes.weights * np.sin(nodes.theta) ** 2))


@dataclass(frozen=True)
class SingleLens:
    na: float

    def __post_init__(self):
        _check_na(self.na)


@dataclass(frozen=True)
class FourPiMicroscope:
    na: float

    def __post_init__(self):
        _check_na(self.na)


@dataclass(frozen=True)
class ParabolicMirror:
    geometry: MirrorGeometry = field(default_factory=MirrorGeometry)


def _check_na(na):
    if not 0.0 <= na <= 1.0:
        raise ValueError(f"numerical aperture must lie in [0, 1] (vacuum), got {na}")


def _lens_omega(na):
    # A lens couples best to a dipole transverse to its axis; weight 1 - sin^2(t) cos^2(p).
    c = math.sqrt(max(0.0, 1.0 - na * na))
    return 0.75 * (1.0 - c) - 0.375 * (2.0 / 3.0 - c + c**3 / 3.0)


def omega(system, n_theta=512, n_phi=256):
    """Weighted solid angle of a single focusing system."""
    if isinstance(system, SingleLens):
        return _lens_omega(system.na)
    if isinstance(system, FourPiMicroscope):
        return min(1.0, 2.0 * _lens_omega(system.na))
    if isinstance(system, ParabolicMirror):
        return weighted_solid_angle_linear(angular_domain(system.geometry), n_theta, n_phi)
    raise TypeError(f"unknown focusing system {system!r}")


SYSTEM_LABELS = {SingleLens: "single_lens", FourPiMicroscope: "4pi_microscope", ParabolicMirror: "parabolic_mirror"}


def omega_curve(system, samples=101):
    """Weighted solid angle over an NA sweep from 0 to 1.

    Lens systems are re-evaluated at each NA; the parabolic mirror has no NA
    and yields a constant line. Returns a list of ``(na, omega, label)``.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    label = SYSTEM_LABELS[type(system)]
    nas = np.linspace(0.0, 1.0, samples)
    if isinstance(system, ParabolicMirror):
        value = omega(system)
        return [(float(na), value, label) for na in nas]
    return [(float(na), omega(replace(system, na=float(na))), label) for na in nas]
