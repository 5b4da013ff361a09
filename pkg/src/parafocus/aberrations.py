"""Scalar wavefront-aberration maps over the mirror aperture.

Maps are stored in waves over the normalised aperture radius ``rho`` and the
azimuth ``phi``. Two representations are supported: a Noll-normalised
Zernike expansion and a sampled regular polar grid.

File formats (UTF-8 CSV with header)::

    n,m,waves            Zernike terms by (n, m)
    noll,waves           Zernike terms by Noll index
    rho,phi_deg,waves    sampled polar grid, one row per node
"""

from dataclasses import dataclass
import csv
import math
from pathlib import Path

import numpy as np


def noll_to_nm(j):
    """Radial and signed azimuthal order of Noll index ``j`` (1-based)."""
    if j < 1:
        raise ValueError(f"Noll index must be >= 1, got {j}")
    n = 0
    rem = j - 1
    while rem > n:
        n += 1
        rem -= n
    m = (n % 2) + 2 * ((rem + ((n + 1) % 2)) // 2)
    if m != 0 and j % 2 == 1:
        m = -m
    return n, m


def nm_to_noll(n, m):
    _check_nm(n, m)
    # Noll indices of radial order n occupy n(n+1)/2 + 1 .. (n+1)(n+2)/2
    for j in range(n * (n + 1) // 2 + 1, (n + 1) * (n + 2) // 2 + 1):
        if noll_to_nm(j) == (n, m):
            return j
    raise AssertionError("unreachable")


def _check_nm(n, m):
    if n < 0 or abs(m) > n or (n - abs(m)) % 2:
        raise ValueError(f"invalid Zernike indices (n={n}, m={m})")


def zernike_radial(n, m, rho):
    m = abs(m)
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    for k in range((n - m) // 2 + 1):
        coef = (-1) ** k * math.factorial(n - k) / (
            math.factorial(k) * math.factorial((n + m) // 2 - k) * math.factorial((n - m) // 2 - k)
        )
        out = out + coef * rho ** (n - 2 * k)
    return out


def zernike(n, m, rho, phi):
    """Noll-normalised Zernike polynomial; unit RMS over the unit disk."""
    _check_nm(n, m)
    radial = zernike_radial(n, m, rho)
    if m == 0:
        return math.sqrt(n + 1) * radial
    norm = math.sqrt(2.0 * (n + 1))
    if m > 0:
        return norm * radial * np.cos(m * np.asarray(phi))
    return norm * radial * np.sin(-m * np.asarray(phi))


@dataclass(frozen=True)
class ZernikeMap:
    """Wavefront as a sum of ``(n, m, waves)`` Zernike terms."""

    terms: tuple = ()
    reference_wavelength: float = 369.5

    def __post_init__(self):
        terms = tuple((int(n), int(m), float(c)) for n, m, c in self.terms)
        for n, m, _ in terms:
            _check_nm(n, m)
        object.__setattr__(self, "terms", terms)

    def waves(self, rho, phi):
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(np.broadcast(rho, phi).shape)
        for n, m, c in self.terms:
            if c != 0.0:
                out = out + c * zernike(n, m, rho, phi)
        return out

    @property
    def is_zero(self):
        return all(c == 0.0 for _, _, c in self.terms)

    def describe(self):
        if self.is_zero:
            return "zero"
        return "zernike:" + ";".join(f"{n},{m},{c!r}" for n, m, c in self.terms)


@dataclass(frozen=True)
class GridMap:
    """Wavefront sampled on a regular polar grid, bilinear in (rho, phi).

    ``waves`` has shape ``(len(rho), len(phi_deg))``; ``phi_deg`` is periodic
    with period 360 and ``rho`` must reach the aperture rim.
    """

    rho: np.ndarray
    phi_deg: np.ndarray
    values: np.ndarray
    reference_wavelength: float = 369.5

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        phi = np.asarray(self.phi_deg, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (rho.size, phi.size):
            raise ValueError("grid values must have shape (len(rho), len(phi_deg))")
        if rho.size < 2 or np.any(np.diff(rho) <= 0.0) or np.any(np.diff(phi) <= 0.0):
            raise ValueError("grid axes must be strictly increasing with at least two radii")
        if rho[0] < 0.0 or rho[-1] < 1.0 - 1e-12:
            raise ValueError("grid must cover the aperture out to rho = 1")
        if phi[0] < 0.0 or phi[-1] >= 360.0:
            raise ValueError("phi_deg must lie in [0, 360)")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid phase must be finite everywhere")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi_deg", phi)
        object.__setattr__(self, "values", values)

    def waves(self, rho, phi):
        rho = np.asarray(rho, dtype=float)
        phi_deg = np.degrees(np.asarray(phi, dtype=float))
        rho, phi_deg = np.broadcast_arrays(rho, phi_deg)
        r = self.rho
        if np.any(rho < r[0] - 1e-12) or np.any(rho > r[-1] + 1e-12):
            raise ValueError("point outside the sampled aperture annulus")
        i = np.clip(np.searchsorted(r, rho, side="right") - 1, 0, r.size - 2)
        tr = np.clip((rho - r[i]) / (r[i + 1] - r[i]), 0.0, 1.0)

        # periodic azimuth: append the first column shifted by 360 degrees
        p = np.append(self.phi_deg, self.phi_deg[0] + 360.0)
        v = np.concatenate([self.values, self.values[:, :1]], axis=1)
        q = np.mod(phi_deg - p[0], 360.0) + p[0]
        k = np.clip(np.searchsorted(p, q, side="right") - 1, 0, p.size - 2)
        tp = (q - p[k]) / (p[k + 1] - p[k])

        v00, v01 = v[i, k], v[i, k + 1]
        v10, v11 = v[i + 1, k], v[i + 1, k + 1]
        return (1 - tr) * ((1 - tp) * v00 + tp * v01) + tr * ((1 - tp) * v10 + tp * v11)

    @property
    def is_zero(self):
        return not np.any(self.values)

    def describe(self):
        return f"grid:{self.rho.size}x{self.phi_deg.size}"


ZERO_MAP = ZernikeMap()


def synthesize_zernike(coeffs, reference_wavelength=369.5):
    """Build a :class:`ZernikeMap` from ``(n, m, waves)`` or ``(noll, waves)`` items."""
    terms = []
    for item in coeffs:
        if len(item) == 2:
            n, m = noll_to_nm(int(item[0]))
            terms.append((n, m, float(item[1])))
        elif len(item) == 3:
            terms.append((int(item[0]), int(item[1]), float(item[2])))
        else:
            raise ValueError(f"cannot interpret Zernike coefficient {item!r}")
    return ZernikeMap(tuple(terms), reference_wavelength)


def evaluate_phase(wmap, h, phi, aperture_radius, geometry=None):
    """Aberration phase in radians at aperture radius ``h`` (mm) and azimuth ``phi``.

    With ``geometry`` given, points inside a mirror bore are rejected since
    the map carries no phase there.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0) or np.any(h > aperture_radius * (1.0 + 1e-12)):
        raise ValueError("point outside the aperture")
    if geometry is not None:
        x, y = h * np.cos(phi), h * np.sin(phi)
        for bore in geometry.bores:
            bx = bore.center_radius * math.cos(bore.azimuth)
            by = bore.center_radius * math.sin(bore.azimuth)
            if np.any((x - bx) ** 2 + (y - by) ** 2 < bore.radius**2):
                raise ValueError("point inside a mirror bore has no defined phase")
    return 2.0 * np.pi * wmap.waves(np.minimum(h / aperture_radius, 1.0), phi)


def rms_wavefront_error(wmap, rho_inner=0.0, rho_outer=1.0, n_rho=128, n_phi=128):
    """Area-weighted RMS (waves) of the piston-removed map over an annulus."""
    if not 0.0 <= rho_inner < rho_outer:
        raise ValueError("invalid annulus")
    # Gauss-Legendre in rho^2 makes the area element uniform
    x, w = np.polynomial.legendre.leggauss(n_rho)
    u_lo, u_hi = rho_inner**2, rho_outer**2
    u = 0.5 * (u_hi - u_lo) * x + 0.5 * (u_hi + u_lo)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    values = wmap.waves(np.sqrt(u)[:, None], phi[None, :])
    weights = np.broadcast_to(w[:, None], values.shape)
    weights = weights / weights.sum()
    mean = np.sum(weights * values)
    return float(math.sqrt(max(0.0, np.sum(weights * (values - mean) ** 2))))


def save_wavefront(wmap, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if isinstance(wmap, ZernikeMap):
            writer.writerow(["n", "m", "waves"])
            for n, m, c in wmap.terms:
                writer.writerow([n, m, repr(c)])
        else:
            writer.writerow(["rho", "phi_deg", "waves"])
            for i, r in enumerate(wmap.rho):
                for k, p in enumerate(wmap.phi_deg):
                    writer.writerow([repr(float(r)), repr(float(p)), repr(float(wmap.values[i, k]))])


def load_wavefront(path, reference_wavelength=369.5):
    """Read a Zernike or grid map; the header decides the representation."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None

    if header == ["n", "m", "waves"]:
        return ZernikeMap(tuple((int(n), int(m), c) for n, m, c in rows), reference_wavelength)
    if header == ["noll", "waves"]:
        return synthesize_zernike([(int(j), c) for j, c in rows], reference_wavelength)
    if header == ["rho", "phi_deg", "waves"]:
        data = np.array(rows, dtype=float).reshape(-1, 3)
        rho = np.unique(data[:, 0])
        phi = np.unique(data[:, 1])
        if rho.size * phi.size != len(data):
            raise ValueError(f"{path}: grid rows do not form a complete rho x phi grid")
        values = np.full((rho.size, phi.size), np.nan)
        values[np.searchsorted(rho, data[:, 0]), np.searchsorted(phi, data[:, 1])] = data[:, 2]
        return GridMap(rho, phi, values, reference_wavelength)
    raise ValueError(f"{path}: unrecognised wavefront header {header}")
