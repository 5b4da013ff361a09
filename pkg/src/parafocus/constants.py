"""Physical constants and the 174Yb+ transition data used throughout."""

from dataclasses import dataclass
import math

from scipy import constants as sc

HBAR = sc.hbar
H_PLANCK = sc.h
C_LIGHT = sc.c
AMU = sc.atomic_mass

NM = 1e-9
MM = 1e-3
TWO_PI = 2.0 * math.pi


def mhz(value):
    """Angular frequency (rad/s) for a frequency given in MHz."""
    return TWO_PI * value * 1e6


def khz(value):
    """Angular frequency (rad/s) for a frequency given in kHz."""
    return TWO_PI * value * 1e3


@dataclass(frozen=True)
class TransitionConstants:
    """Level data of the S1/2-P1/2 excitation and the 297 nm detection channel.

    Rates are angular frequencies, wavelengths in nm.
    """

    gamma: float = mhz(19.6)
    branching: float = 0.005
    wavelength_exc_nm: float = 369.5
    wavelength_det_nm: float = 297.1
    repump_branching: float = 0.982
    d_state_lifetime_s: float = 52e-3

    def __post_init__(self):
        if not 0.0 < self.branching < 1.0:
            raise ValueError(f"branching ratio must lie in (0, 1), got {self.branching}")
        if self.gamma <= 0.0:
            raise ValueError("linewidth must be positive")
        if self.wavelength_exc_nm <= 0.0 or self.wavelength_det_nm <= 0.0:
            raise ValueError("wavelengths must be positive")


YB174 = TransitionConstants()
