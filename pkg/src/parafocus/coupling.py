"""Effective excitation PSF and predicted coupling efficiency.

The ion samples the focal intensity averaged over its thermal position
spread, so the effective PSF is the focal intensity convolved with the
ion's Gaussian density, axis by axis. The coupling efficiency compares the
system's focal intensity per unit incident power with that of a perfectly
focused linear-dipole wave.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .aberrations import ZERO_MAP
from .beams import DipoleFarField
from .focal_field import AXES, FocusedBeam, QuadratureSpec, ScanProfile, find_peak
from .geometry import AngularDomain, MirrorGeometry

KERNEL_HALF_WIDTH = 6.0
MIN_SAMPLES_PER_SIGMA = 3.0


class GridTooCoarse(ValueError):
    """Sampling step exceeds a third of the Gaussian width."""


@dataclass
class EffectivePSF:
    """Convolved 1D profile; ``peak`` is absolute, ``intensity`` normalised to it."""

    axis: str
    positions: np.ndarray
    intensity: np.ndarray
    peak: float
    sigma_nm: float
    source_peak: float

    @property
    def reduction(self):
        """Convolved peak over unconvolved peak."""
        return self.peak / self.source_peak

    def as_profile(self):
        return ScanProfile(self.axis, self.positions, self.intensity, self.peak)


def gaussian_kernel(sigma, step):
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return np.ones(1)
    if step > sigma / MIN_SAMPLES_PER_SIGMA * (1.0 + 1e-9):
        raise GridTooCoarse(f"grid step {step:g} nm exceeds sigma/3 = {sigma / 3:g} nm")
    half = int(math.ceil(KERNEL_HALF_WIDTH * sigma / step))
    t = step * np.arange(-half, half + 1)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def convolve_axis(values, step, sigma, axis=0, backend=None):
    """Direct-sum Gaussian convolution of ``values`` along one array axis.

    Samples outside the grid count as zero, so profiles that decay inside
    the grid keep their integral.
    """
    kern = gaussian_kernel(sigma, step)
    values = np.asarray(values, dtype=float)
    if kern.size == 1:
        return values.copy()
    moved = np.moveaxis(values, axis, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    out = np.array([kernels.gaussian_convolve_1d(row, kern, backend=backend) for row in flat])
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def convolve_psf(profile, state):
    """Effective PSF of a 1D cut: convolve along its axis with that axis's ion width.

    ``state`` is a :class:`~parafocus.thermal.ThermalState` or a bare sigma in nm.
    """
    sigma = state if isinstance(state, (int, float)) else state.sigma_nm[AXES[profile.axis]]
    pos = profile.positions
    step = float(pos[1] - pos[0]) if pos.size > 1 else 1.0
    if pos.size > 2 and not np.allclose(np.diff(pos), step, rtol=1e-9, atol=1e-9):
        raise ValueError("convolution needs a uniformly sampled profile")
    absolute = profile.intensity * profile.peak
    conv = convolve_axis(absolute, step, float(sigma))
    peak = float(conv.max())
    return EffectivePSF(profile.axis, pos.copy(), conv / peak, peak, float(sigma), float(absolute.max()))


def convolve_grid(intensity, steps, sigmas):
    """Separable Gaussian convolution of a regular 1D/2D/3D intensity array.

    ``steps`` and ``sigmas`` give, per array axis, the sample spacing and ion
    width in nm.
    """
    out = np.asarray(intensity, dtype=float)
    for ax, (step, sigma) in enumerate(zip(steps, sigmas)):
        out = convolve_axis(out, step, sigma, axis=ax)
    return out


def dipole_reference(wavelength=369.5, quad=None, backend=None):
    """Aberration-free linear-dipole wave focused from the full sphere."""
    return FocusedBeam(
        geometry=MirrorGeometry(bores=()),
        beam=None,
        wavefront=ZERO_MAP,
        domain=AngularDomain.full_sphere(),
        quad=quad or QuadratureSpec(),
        amplitude=DipoleFarField(1.0, wavelength),
        backend=backend,
    )


@dataclass
class CouplingPrediction:
    """Expected coupling efficiency and the factors it is built from.

    ``peak_ratio`` is the focal peak intensity per unit power relative to the
    dipole reference; ``axis_ratios`` are the peak losses caused by the ion's
    spread along x, y, z. ``G`` is their product.
    """

    G: float
    peak_ratio: float
    axis_ratios: tuple
    peak_position: tuple
    widths: dict = field(default_factory=dict)
    reference: str = "full-4pi linear dipole, aberration free, equal input power"

    def __post_init__(self):
        if not 0.0 <= self.G <= 1.0 + 1e-9:
            raise ValueError(f"coupling efficiency {self.G} outside [0, 1]")


def reference_peak(reference):
    """Peak intensity per unit power of a reference focus (assumed at the origin)."""
    value = float(reference.intensity(np.zeros((1, 3)))[0])
    return value / reference.power_on_domain


def predict_coupling(system, state=None, reference=None, step=10.0, lateral_range=1000.0, axial_range=2000.0):
    """Expected coupling efficiency of ``system`` (a :class:`FocusedBeam`).

    Each axis is scanned through the system's own intensity maximum and
    convolved with the ion's width along that axis; the relative peak losses
    multiply the point-ion peak ratio.
    """
    if reference is None:
        reference = dipole_reference(system.wavelength, system.quad, system.backend)
    if not math.isclose(reference.wavelength, system.wavelength, rel_tol=1e-12):
        raise ValueError("system and reference must share the wavelength")
    p_sys = system.power_on_domain
    if p_sys <= 0.0:
        raise ValueError("system carries no power through its angular domain")
    center, i_sys = find_peak(system)
    peak_ratio = (i_sys / p_sys) / reference_peak(reference)

    sigmas = (0.0, 0.0, 0.0) if state is None else state.sigma_nm
    ratios = []
    widths = {}
    for axis in ("x", "y", "z"):
        sigma = sigmas[AXES[axis]]
        half = axial_range if axis == "z" else lateral_range
        ax_step = step if sigma == 0.0 else min(step, sigma / MIN_SAMPLES_PER_SIGMA)
        n = int(math.ceil(half / ax_step))
        positions = ax_step * np.arange(-n, n + 1)
        values = system.intensity(system.line(axis, positions, center))
        profile = ScanProfile(axis, positions, values / values.max(), float(values.max()), tuple(center))
        eff = convolve_psf(profile, sigma)
        ratios.append(eff.reduction * values.max() / i_sys)
        widths[axis] = (profile, eff)
    ratios = tuple(min(1.0, r) for r in ratios)
    G = peak_ratio * ratios[0] * ratios[1] * ratios[2]
    return CouplingPrediction(float(G), float(peak_ratio), ratios, tuple(float(c) for c in center), widths)


PLANES = {"xy": ("x", "y"), "zy": ("z", "y"), "xz": ("x", "z")}


@dataclass
class PlanePSF:
    """Focal field and effective PSF on a regular plane through ``center``.

    ``u`` and ``v`` are offsets (nm) along the plane's two axes; ``field`` has
    shape ``(len(u), len(v), 3)``, ``intensity`` and ``effective`` are
    absolute, the latter convolved in-plane with the ion's widths.
    """

    plane: str
    center: tuple
    u: np.ndarray
    v: np.ndarray
    field: np.ndarray
    intensity: np.ndarray
    effective: np.ndarray

    def points(self):
        a, b = PLANES[self.plane]
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        pts = np.tile(np.asarray(self.center, dtype=float), (uu.size, 1))
        pts[:, AXES[a]] += uu.ravel()
        pts[:, AXES[b]] += vv.ravel()
        return pts


def _fine_axis(half_range, step, sigma):
    # refine so every output sample is a grid node and the kernel is resolved
    refine = 1 if sigma == 0.0 else max(1, math.ceil(step * MIN_SAMPLES_PER_SIGMA / sigma))
    fine = step / refine
    pad = 0 if sigma == 0.0 else math.ceil(4.0 * sigma / fine)
    n_out = int(round(half_range / step))
    n_fine = n_out * refine + pad
    return fine * np.arange(-n_fine, n_fine + 1), refine, pad, step * np.arange(-n_out, n_out + 1)


def plane_psf(system, center, plane, half_range, step, state=None):
    """Point and thermal-ion PSF on one plane, sampled at ``step`` nm.

    The field is evaluated on a grid fine enough for the Gaussian kernel and
    padded by four widths so the in-plane convolution sees no edge, then
    subsampled to the output grid.
    """
    if plane not in PLANES:
        raise ValueError(f"unknown plane {plane!r}; expected one of {sorted(PLANES)}")
    if step <= 0.0 or half_range <= 0.0:
        raise ValueError("plane step and half range must be positive")
    a, b = PLANES[plane]
    sigmas = (0.0, 0.0, 0.0) if state is None else state.sigma_nm
    sa, sb = sigmas[AXES[a]], sigmas[AXES[b]]
    fa, ra, pa, u = _fine_axis(half_range, step, sa)
    fb, rb, pb, v = _fine_axis(half_range, step, sb)
    uu, vv = np.meshgrid(fa, fb, indexing="ij")
    pts = np.tile(np.asarray(center, dtype=float), (uu.size, 1))
    pts[:, AXES[a]] += uu.ravel()
    pts[:, AXES[b]] += vv.ravel()
    fld = system.field(pts).reshape(fa.size, fb.size, 3)
    inten = np.sum(np.abs(fld) ** 2, axis=2)
    eff = convolve_grid(inten, (fa[1] - fa[0], fb[1] - fb[0]), (sa, sb))
    sel_a = slice(pa, fa.size - pa, ra)
    sel_b = slice(pb, fb.size - pb, rb)
    return PlanePSF(plane, tuple(center), u, v, fld[sel_a, sel_b], inten[sel_a, sel_b], eff[sel_a, sel_b])
