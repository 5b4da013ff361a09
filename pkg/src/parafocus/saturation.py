"""Fluorescence-rate model, saturation-curve fitting and detection efficiency.

The detected rate on the 297 nm channel follows

    R = eta_det * beta * Gamma/2 * S / (1 + S),    S = G * P_exc / P_sat,

and the coupling efficiency ``G`` is the single free parameter of the fit.
"""

from dataclasses import dataclass, field
import csv
import math
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .beams import ConvergenceError
from .constants import C_LIGHT, H_PLANCK, YB174

DEFAULT_ETA_DET = 0.0142
DEFAULT_S_MAX = 0.1


class EmptyDatasetError(ValueError):
    """No records survive the saturation gate."""


def saturation_power(wavelength_nm, gamma, detuning=0.0):
    """Saturation power (W) of the J=1/2 <-> J=1/2 transition.

    ``3 (h c / lambda) (Gamma / 8) (1 + 4 (Delta/Gamma)^2)``; the factor 3
    accounts for driving a transition that is not a closed linear dipole.
    """
    if wavelength_nm <= 0.0 or gamma <= 0.0:
        raise ValueError("wavelength and linewidth must be positive")
    photon = H_PLANCK * C_LIGHT / (wavelength_nm * 1e-9)
    return 3.0 * photon * gamma / 8.0 * (1.0 + 4.0 * (detuning / gamma) ** 2)


def max_rate(eta_det, constants=YB174):
    """Fully saturated detected rate ``eta_det * beta * Gamma / 2`` (cps)."""
    return eta_det * constants.branching * constants.gamma / 2.0


def detection_rate(p_exc, G, eta_det, constants=YB174, detuning=0.0):
    """Detected count rate (cps) for excitation power ``p_exc`` (W)."""
    if G < 0.0 or eta_det < 0.0:
        raise ValueError("coupling and detection efficiency must be non-negative")
    p_exc = np.asarray(p_exc, dtype=float)
    s = G * p_exc / saturation_power(constants.wavelength_exc_nm, constants.gamma, detuning)
    rate = max_rate(eta_det, constants) * s / (1.0 + s)
    return rate if rate.ndim else float(rate)


@dataclass
class SaturationDataset:
    """Count records at a set of excitation powers; ``background`` in cps."""

    p_exc: np.ndarray
    counts: np.ndarray
    exposure: np.ndarray
    background: float = 0.0

    def __post_init__(self):
        self.p_exc = np.asarray(self.p_exc, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        self.exposure = np.broadcast_to(np.asarray(self.exposure, dtype=float), self.p_exc.shape).copy()
        if not (self.p_exc.shape == self.counts.shape == self.exposure.shape):
            raise ValueError("powers, counts and exposures must have equal length")
        if np.any(self.counts < 0.0):
            raise ValueError("counts must be non-negative")
        if np.any(self.exposure <= 0.0):
            raise ValueError("exposure times must be positive")
        if np.any(self.p_exc < 0.0):
            raise ValueError("excitation powers must be non-negative")

    def __len__(self):
        return self.p_exc.size

    @property
    def corrected_rate(self):
        return self.counts / self.exposure - self.background

    def subset(self, keep):
        keep = np.asarray(keep, dtype=bool)
        return SaturationDataset(self.p_exc[keep], self.counts[keep], self.exposure[keep], self.background)


@dataclass
class FitResult:
    G: float
    stderr: float
    points_used: int
    s_max: float
    iterations: int = 1
    chi2: float = math.nan

    def __post_init__(self):
        if not 0.0 <= self.G <= 1.0:
            raise ValueError(f"fitted coupling {self.G} outside [0, 1]")


def s_gate(dataset, G_prior=None, p_sat=None, s_max=DEFAULT_S_MAX, eta_det=DEFAULT_ETA_DET, constants=YB174):
    """Keep the records whose saturation parameter does not exceed ``s_max``.

    With a prior coupling ``G_prior`` (and ``p_sat``) the model value
    ``G P/P_sat`` is used; without it S is inferred from each background
    corrected rate by inverting the saturation curve, which at the default
    detection efficiency puts the cut near 392 cps.
    """
    if not 0.0 < s_max <= 1.0:
        raise ValueError("s_max must lie in (0, 1]")
    if G_prior is not None:
        if p_sat is None:
            raise ValueError("model gating needs the saturation power")
        s = G_prior * dataset.p_exc / p_sat
    else:
        r_inf = max_rate(eta_det, constants)
        rate = dataset.corrected_rate
        with np.errstate(divide="ignore"):
            s = np.where(rate < r_inf, rate / (r_inf - rate), np.inf)
    keep = s <= s_max * (1.0 + 1e-12)
    gated = dataset.subset(keep)
    if len(gated) == 0:
        raise EmptyDatasetError(f"no records with S <= {s_max}")
    return gated


def _chi2_parts(dataset, eta_det, constants, detuning):
    p_sat = saturation_power(constants.wavelength_exc_nm, constants.gamma, detuning)
    r_inf = max_rate(eta_det, constants)
    x = dataset.p_exc / p_sat
    y = dataset.corrected_rate
    # Poisson variance of the background-corrected rate; floor keeps empty bins finite
    var = np.maximum(dataset.counts, 1.0) / dataset.exposure**2
    return x, y, var, r_inf


def _fit_once(dataset, eta_det, constants, detuning):
    x, y, var, r_inf = _chi2_parts(dataset, eta_det, constants, detuning)

    def chi2(G):
        s = G * x
        return float(np.sum((y - r_inf * s / (1.0 + s)) ** 2 / var))

    res = minimize_scalar(chi2, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12, "maxiter": 1000})
    if not res.success:
        raise ConvergenceError(f"coupling fit did not converge: {res.message}")
    G = float(res.x)
    slope = r_inf * x / (1.0 + G * x) ** 2
    info = float(np.sum(slope**2 / var))
    stderr = 1.0 / math.sqrt(info) if info > 0.0 else math.inf
    return G, stderr, float(res.fun)


def fit_coupling(dataset, constants=YB174, detuning=0.0, eta_det=DEFAULT_ETA_DET, s_max=DEFAULT_S_MAX, max_iter=5):
    """Fit the coupling efficiency to a saturation dataset.

    Records are gated at ``s_max`` by their observed rate, fitted by Poisson
    weighted least squares, re-gated with the fitted ``G`` and refitted until
    the gated set is stable.
    """
    if not np.any(dataset.counts > 0.0):
        raise ValueError("dataset contains no counts")
    p_sat = saturation_power(constants.wavelength_exc_nm, constants.gamma, detuning)
    gated = s_gate(dataset, None, None, s_max, eta_det, constants)
    keep_prev = None
    for iteration in range(1, max_iter + 1):
        if len(gated) < 3:
            raise EmptyDatasetError(f"only {len(gated)} records pass the S <= {s_max} gate; need 3")
        G, stderr, chi2 = _fit_once(gated, eta_det, constants, detuning)
        keep = G * dataset.p_exc / p_sat <= s_max * (1.0 + 1e-12)
        if keep_prev is not None and np.array_equal(keep, keep_prev):
            break
        keep_prev = keep
        if not np.any(keep):
            raise EmptyDatasetError(f"no records with S <= {s_max} at the fitted coupling")
        gated = dataset.subset(keep)
    return FitResult(G, stderr, len(gated), s_max, iteration, chi2)


def synthesize_dataset(G, eta_det, constants=YB174, detuning=0.0, powers=(), exposure=1.0, background=0.0, seed=0, noiseless=False):
    """Poisson counts around the rate model plus a constant background.

    ``noiseless=True`` returns the expected counts instead of a draw.
    """
    powers = np.asarray(powers, dtype=float)
    exposure = np.broadcast_to(np.asarray(exposure, dtype=float), powers.shape)
    expected = (detection_rate(powers, G, eta_det, constants, detuning) + background) * exposure
    if noiseless:
        counts = np.asarray(expected, dtype=float)
    else:
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    return SaturationDataset(powers, counts, exposure, background)


def powers_for_rates(rates, G, eta_det, constants=YB174, detuning=0.0):
    """Excitation powers (W) that produce the given detected rates."""
    rates = np.asarray(rates, dtype=float)
    r_inf = max_rate(eta_det, constants)
    s = rates / (r_inf - rates)
    return s * saturation_power(constants.wavelength_exc_nm, constants.gamma, detuning) / G


def save_dataset(dataset, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p_exc_watt", "counts", "exposure_s"])
        for p, c, t in zip(dataset.p_exc, dataset.counts, dataset.exposure):
            writer.writerow([repr(float(p)), repr(float(c)), repr(float(t))])


def load_dataset(path, background=0.0):
    """Read a ``p_exc_watt,counts,exposure_s`` CSV; malformed rows name their line."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header != ["p_exc_watt", "counts", "exposure_s"]:
            raise ValueError(f"{path}:1: expected header p_exc_watt,counts,exposure_s, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                p, c, t = (float(cell) for cell in row)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field in {row}") from None
            if c < 0.0 or t <= 0.0 or p < 0.0:
                raise ValueError(f"{path}:{lineno}: negative power/counts or non-positive exposure")
            rows.append((p, c, t))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return SaturationDataset(data[:, 0], data[:, 1], data[:, 2], background)


@dataclass
class DetectionChain:
    """Named stage efficiencies of the detection path, each in (0, 1]."""

    stages: dict = field(
        default_factory=lambda: {
            "mirror_reflectivity": 0.67,
            "pmt_quantum_efficiency": 0.13,
            "covered_solid_angle": 0.81,
            "splitter_dichroic_filters": 0.43,
        }
    )

    def __post_init__(self):
        for name, value in self.stages.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"stage {name} efficiency {value} outside [0, 1]")


def detection_budget(chain):
    """Upper bound on the detection efficiency: product of all stages."""
    return float(np.prod(list(chain.stages.values()))) if chain.stages else 1.0


def pulsed_eta(detected, pulses, background_rate=0.0, gate=0.0):
    """Detection efficiency from a single-photon pulse sequence.

    ``detected`` counts over ``pulses`` repetitions; background counts are
    ``background_rate * gate`` per pulse.
    """
    if pulses <= 0:
        raise ValueError("need at least one pulse")
    corrected = detected - background_rate * gate * pulses
    if corrected < 0.0:
        raise ValueError(f"background exceeds detected counts ({corrected:.1f} after correction)")
    return corrected / pulses
