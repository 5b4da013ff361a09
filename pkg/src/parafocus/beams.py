"""Incident donut mode, its image on the focal sphere, and dipole-mode overlap.

Aperture-plane amplitudes are in sqrt(W)/mm, sphere amplitudes in
sqrt(W)/sr, so ``|A|^2`` integrates to power over the aperture plane and
``|a|^2`` integrates to power over solid angle.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import angle_to_aperture, angular_domain


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to settle."""


@dataclass(frozen=True)
class DonutBeam:
    """Radially polarized donut, ``A(h) ~ (h/w) exp(-h^2/w^2)``.

    ``waist`` in mm, ``power`` in W, ``wavelength`` in nm.
    """

    waist: float = 4.75
    power: float = 1.0
    wavelength: float = 369.5

    def __post_init__(self):
        if self.waist <= 0.0:
            raise ValueError(f"waist must be positive, got {self.waist}")
        if self.power < 0.0:
            raise ValueError("power must be non-negative")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")

    def amplitude(self, h):
        return donut_amplitude(self, h)


@dataclass(frozen=True)
class RadialBeam:
    """Arbitrary radially polarized beam given by an amplitude profile ``A(h)``."""

    profile: object
    wavelength: float = 369.5

    def amplitude(self, h):
        return np.asarray(self.profile(np.asarray(h, dtype=float)), dtype=float)


def donut_amplitude(beam, h):
    """Real aperture-plane amplitude of ``beam`` at radius ``h`` (mm)."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0):
        raise ValueError("aperture radius must be non-negative")
    w = beam.waist
    # int 2 pi h (h/w)^2 exp(-2h^2/w^2) dh = pi w^2 / 4
    a0 = math.sqrt(4.0 * beam.power / (math.pi * w * w))
    return a0 * (h / w) * np.exp(-((h / w) ** 2))


def apodization(theta, f):
    """Aperture-to-sphere amplitude factor ``f / cos^2((pi - theta)/2)`` of a parabola."""
    return f / np.cos(0.5 * (np.pi - np.asarray(theta, dtype=float))) ** 2


@dataclass(frozen=True)
class SphereAmplitude:
    """Angular amplitude ``a(theta)`` along e_theta on the reference sphere."""

    beam: object
    focal_length: float

    @property
    def wavelength(self):
        return self.beam.wavelength

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        h = angle_to_aperture(theta, self.focal_length)
        return self.beam.amplitude(h) * apodization(theta, self.focal_length)


def project_to_sphere(beam, geometry):
    """Map an aperture-plane beam onto the focal sphere of ``geometry``.

    Energy conservation ``|A(h)|^2 h dh = |a(theta)|^2 sin(theta) dtheta``
    fixes the apodization; radial polarization maps onto e_theta.
    """
    return SphereAmplitude(beam, geometry.focal_length)


@dataclass(frozen=True)
class DipoleFarField:
    """Angular amplitude of a linear dipole along the optical axis, ``~ sin(theta)``."""

    power: float = 1.0
    wavelength: float = 369.5

    def __call__(self, theta):
        return math.sqrt(3.0 * self.power / (8.0 * math.pi)) * np.sin(np.asarray(theta, dtype=float))


def sphere_power(amplitude, domain, n_theta=512, n_phi=256):
    """Power carried by ``amplitude`` through ``domain``."""
    nodes = domain.nodes(n_theta, n_phi)
    return float(np.sum(nodes.weights * np.abs(amplitude(nodes.theta)) ** 2))


def mode_overlap(amplitude, domain, n_theta=512, n_phi=256):
    """Normalised field overlap of ``amplitude`` with the axial dipole mode over ``domain``."""
    nodes = domain.nodes(n_theta, n_phi)
    theta, _, w = nodes.active()
    a = amplitude(theta)
    s = np.sin(theta)
    norm_a = math.sqrt(np.sum(w * np.abs(a) ** 2))
    norm_s = math.sqrt(np.sum(w * s * s))
    if norm_a == 0.0 or norm_s == 0.0:
        raise ValueError("overlap undefined for a zero-norm amplitude")
    return float(abs(np.sum(w * a * s)) / (norm_a * norm_s))


def optimize_waist(geometry, bounds=None, illumination_radius=None, n_theta=256):
    """Donut waist (mm) maximising the dipole-mode overlap on ``geometry``.

    Bounded Brent search; the overlap is a smooth single-peaked function of
    the waist over any bracket spanning the aperture scale.
    """
    domain = angular_domain(geometry, illumination_radius)
    if bounds is None:
        bounds = (0.05 * geometry.front_aperture_radius, 2.0 * geometry.front_aperture_radius)

    def cost(waist):
        amp = project_to_sphere(DonutBeam(waist=waist), geometry)
        return -mode_overlap(amp, domain, n_theta=n_theta, n_phi=64)

    res = minimize_scalar(cost, bounds=bounds, method="bounded", options={"xatol": 1e-7, "maxiter": 500})
    if not res.success:
        raise ConvergenceError(f"waist optimisation did not converge: {res.message}")
    return float(res.x)
