"""Doppler-cooled ion: phonon numbers, wave-packet widths, position density.

Detunings and trap frequencies are angular frequencies (rad/s). Detuning is
signed: red detuning (the cooling side) is negative.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .constants import AMU, HBAR, khz, mhz

SQRT_2PI = math.sqrt(2.0 * math.pi)
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class HeatingRegimeError(ValueError):
    """Laser parameters heat rather than cool the requested motional mode."""


@dataclass(frozen=True)
class TrapConfig:
    omega_x: float = khz(482.6)
    omega_y: float = khz(491.7)
    omega_z: float = khz(1025.0)
    mass: float = 174.0 * AMU

    def __post_init__(self):
        if min(self.omega_x, self.omega_y, self.omega_z) <= 0.0:
            raise ValueError("trap frequencies must be positive")
        if self.mass <= 0.0:
            raise ValueError("ion mass must be positive")

    @property
    def frequencies(self):
        return (self.omega_x, self.omega_y, self.omega_z)


@dataclass(frozen=True)
class CoolingConfig:
    detuning: float = -mhz(14.2)
    gamma: float = mhz(19.6)
    saturation: float = 0.0
    alpha: float = 1.0 / 3.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("linewidth must be positive")
        if self.saturation < 0.0:
            raise ValueError("saturation parameter must be non-negative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("emission-pattern factor must lie in (0, 1)")


@dataclass(frozen=True)
class ThermalState:
    nbar: tuple
    sigma_nm: tuple
    sigma0_nm: tuple = field(default=None)

    def __post_init__(self):
        if any(n < 0.0 for n in self.nbar):
            raise ValueError("mean phonon numbers must be non-negative")
        if self.sigma0_nm is not None and any(s < s0 * (1 - 1e-12) for s, s0 in zip(self.sigma_nm, self.sigma0_nm)):
            raise ValueError("thermal width below the ground-state width")

    @property
    def extent_fwhm_nm(self):
        return tuple(FWHM_PER_SIGMA * s for s in self.sigma_nm)

    @property
    def extent_1e_nm(self):
        """Full width at which the density falls to 1/e of its peak, ``2 sqrt(2) sigma``."""
        return tuple(2.0 * math.sqrt(2.0) * s for s in self.sigma_nm)

    @classmethod
    def point(cls):
        return cls((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


def upper_state_population(detuning, saturation, gamma):
    """Steady-state ``rho22 = (S/2) / (1 + (2 Delta/Gamma)^2 + S)``."""
    if gamma <= 0.0:
        raise ValueError("linewidth must be positive")
    if np.any(np.asarray(saturation) < 0.0):
        raise ValueError("saturation parameter must be non-negative")
    return 0.5 * saturation / (1.0 + (2.0 * detuning / gamma) ** 2 + saturation)


def _lorentz(detuning, saturation, gamma):
    # rho22 / (S/2); finite in the S -> 0 limit
    return 1.0 / (1.0 + (2.0 * detuning / gamma) ** 2 + saturation)


def mean_phonon(cooling, omega, cos2):
    """Lamb-Dicke rate-equation mean phonon number of one trap axis.

    ``cos2`` is the mean squared projection of the cooling k-vectors on the
    axis. The common ``S/2`` factor of every ``rho22`` cancels, so ``S = 0``
    gives the weak-excitation limit directly.
    """
    if not 0.0 < cos2 <= 1.0:
        raise ValueError("cos^2 overlap must lie in (0, 1]")
    if omega <= 0.0:
        raise ValueError("trap frequency must be positive")
    d, s, g = cooling.detuning, cooling.saturation, cooling.gamma
    carrier = _lorentz(d, s, g)
    red = _lorentz(d - omega, s, g)
    blue = _lorentz(d + omega, s, g)
    denom = cos2 * (blue - red)
    if denom <= 0.0:
        raise HeatingRegimeError(
            f"no cooling at detuning {d / (2 * math.pi * 1e6):+.2f} MHz; red detuning (negative) is required"
        )
    return (cooling.alpha * carrier + cos2 * red) / denom


def dipole_overlap_factors(n_theta=64, n_phi=64):
    """Dipole-irradiance averaged cos^2 overlaps with the axial and a radial trap axis.

    The k-vectors of a dipole wave along z carry weight ``(3/8 pi) sin^2``;
    the axial axis sees ``cos^2(theta)``, a radial axis ``sin^2 cos^2(phi)``.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    cos_t, w_t = x, w
    sin2 = 1.0 - cos_t**2
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    w_p = 2.0 * np.pi / n_phi
    norm = 3.0 / (8.0 * np.pi)
    axial = norm * np.sum(w_t * sin2 * cos_t**2) * (w_p * n_phi)
    radial = norm * np.sum(w_t * sin2 * sin2) * np.sum(w_p * np.cos(phi) ** 2)
    return float(axial), float(radial)


def ground_state_sigma(omega, mass):
    """Ground-state wave-packet width ``sqrt(hbar / 2 m omega)`` in nm."""
    if omega <= 0.0 or mass <= 0.0:
        raise ValueError("trap frequency and mass must be positive")
    return math.sqrt(HBAR / (2.0 * mass * omega)) * 1e9


def wavepacket_sigma(nbar, omega, mass):
    """Thermal Gaussian width ``sqrt(2 nbar + 1) sigma0`` in nm."""
    if nbar < 0.0:
        raise ValueError("mean phonon number must be non-negative")
    return math.sqrt(2.0 * nbar + 1.0) * ground_state_sigma(omega, mass)


def thermal_state(trap=None, cooling=None):
    """Doppler-limit state of an ion cooled by the focused dipole wave.

    The optical axis is parallel to the trap's z axis, x and y are radial.
    """
    trap = trap or TrapConfig()
    cooling = cooling or CoolingConfig()
    eta_ax, eta_rad = dipole_overlap_factors()
    overlaps = (eta_rad, eta_rad, eta_ax)
    nbar = tuple(mean_phonon(cooling, w, c) for w, c in zip(trap.frequencies, overlaps))
    sigma = tuple(wavepacket_sigma(n, w, trap.mass) for n, w in zip(nbar, trap.frequencies))
    sigma0 = tuple(ground_state_sigma(w, trap.mass) for w in trap.frequencies)
    return ThermalState(nbar, sigma, sigma0)


def ion_density(state, r):
    """Separable Gaussian probability density (1/nm^3) at positions ``r`` (nm)."""
    r = np.asarray(r, dtype=float)
    out = np.ones(r.shape[:-1])
    for i, s in enumerate(state.sigma_nm):
        if s <= 0.0:
            raise ValueError("density of a point-like ion is not a function")
        out = out * np.exp(-0.5 * (r[..., i] / s) ** 2) / (s * SQRT_2PI)
    return out
