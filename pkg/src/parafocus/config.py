"""Run configuration: YAML file with unit-suffixed keys, overridable from the CLI.

Every physical input carries its unit in the key name (``focal_length_mm``,
``detuning_mhz``), so a config file can be audited without reading code.
Frequencies given in kHz/MHz are ordinary frequencies; they are converted to
angular frequencies when the physics objects are built.
"""

from dataclasses import dataclass, field
import copy
import math
import os
from pathlib import Path

import yaml

from .aberrations import ZERO_MAP, load_wavefront
from .beams import DonutBeam, optimize_waist
from .constants import AMU, TransitionConstants, khz, mhz
from .focal_field import QuadratureSpec
from .geometry import BoreSpec, MirrorGeometry
from .thermal import CoolingConfig, TrapConfig

OUTPUT_DIR_ENV = "PARAFOCUS_OUTPUT_DIR"
SYNTHETIC_MAP = "synthetic"


def synthetic_map_path():
    """Packaged spherical-aberration-dominated stand-in for the measured mirror map."""
    return Path(__file__).with_name("data") / "synthetic_mirror_map.csv"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


DEFAULTS = {
    "geometry": {
        "focal_length_mm": 2.1,
        "front_aperture_radius_mm": 10.0,
        "bores": [
            {"center_radius_mm": 0.0, "radius_mm": 0.75, "azimuth_deg": 0.0},
            {"center_radius_mm": 1.5, "radius_mm": 0.25, "azimuth_deg": 0.0},
            {"center_radius_mm": 1.5, "radius_mm": 0.25, "azimuth_deg": 180.0},
        ],
    },
    "beam": {"waist_mm": None, "power_w": 1.0, "wavelength_nm": 369.5},
    "wavefront_path": None,
    "trap": {"freq_x_khz": 482.6, "freq_y_khz": 491.7, "freq_z_khz": 1025.0, "mass_amu": 174.0},
    "cooling": {"detuning_mhz": -14.2, "linewidth_mhz": 19.6, "saturation": 0.0, "alpha": 1.0 / 3.0},
    "transition": {
        "linewidth_mhz": 19.6,
        "branching": 0.005,
        "wavelength_exc_nm": 369.5,
        "wavelength_det_nm": 297.1,
    },
    "scan": {
        "lateral_half_range_nm": 1000.0,
        "axial_half_range_nm": 2000.0,
        "step_nm": 10.0,
        "output_step_nm": 25.0,
        "plane_half_range_nm": 500.0,
        "plane_step_nm": 50.0,
    },
    "quadrature": {"nodes_theta": 512, "nodes_phi": 256, "plane_nodes_theta": 256, "plane_nodes_phi": 96},
    "omega": {"samples": 101},
    "fit": {"eta_det": 0.0142, "s_max": 0.1, "background_cps": 0.0, "detuning_mhz": 0.0, "dataset_path": None},
    "synth": {
        "coupling": 0.137,
        "peak_rate_cps": 392.0,
        "n_points": 10,
        "exposure_s": 1.0,
        "background_cps": 0.0,
        "noiseless": False,
    },
    "detection": {
        "stages": {
            "mirror_reflectivity": 0.67,
            "pmt_quantum_efficiency": 0.13,
            "covered_solid_angle": 0.81,
            "splitter_dichroic_filters": 0.43,
        },
        "pulsed_detected": 142.0,
        "pulsed_pulses": 10000,
        "background_cps": 0.0,
        "gate_s": 0.0,
    },
    "output_dir": "parafocus_out",
    "seed": 0,
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "stages":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _number(section, key, positive=False, nonneg=False):
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}")
    if positive and value <= 0.0:
        raise ConfigError(f"{key} must be positive, got {value}")
    if nonneg and value < 0.0:
        raise ConfigError(f"{key} must be non-negative, got {value}")
    return float(value)


@dataclass
class RunConfig:
    """Validated configuration of one CLI run; ``raw`` keeps the merged mapping."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source: str = "<defaults>"

    def __post_init__(self):
        self.validate()

    # construction -----------------------------------------------------------
    @classmethod
    def load(cls, path=None, overrides=None):
        """Defaults, then the YAML file at ``path``, then ``overrides``."""
        raw = copy.deepcopy(DEFAULTS)
        source = "<defaults>"
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"config file {path} does not exist")
            try:
                data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
            raw = _merge(raw, data)
            source = str(path)
        if overrides:
            raw = _merge(raw, overrides)
        return cls(raw, source)

    def with_overrides(self, overrides):
        return RunConfig(_merge(self.raw, overrides), self.source)

    def validate(self):
        r = self.raw
        try:
            g = r["geometry"]
            _number(g, "focal_length_mm", positive=True)
            _number(g, "front_aperture_radius_mm", positive=True)
            for bore in g["bores"]:
                missing = {"center_radius_mm", "radius_mm"} - set(bore)
                if missing:
                    raise ConfigError(f"bore entry lacks {sorted(missing)}")
                extra = set(bore) - {"center_radius_mm", "radius_mm", "azimuth_deg"}
                if extra:
                    raise ConfigError(f"unknown bore keys {sorted(extra)}")
            b = r["beam"]
            if b["waist_mm"] is not None:
                _number(b, "waist_mm", positive=True)
            _number(b, "power_w", nonneg=True)
            _number(b, "wavelength_nm", positive=True)
            for key in ("freq_x_khz", "freq_y_khz", "freq_z_khz", "mass_amu"):
                _number(r["trap"], key, positive=True)
            _number(r["cooling"], "detuning_mhz")
            _number(r["cooling"], "linewidth_mhz", positive=True)
            _number(r["cooling"], "saturation", nonneg=True)
            for key in ("lateral_half_range_nm", "axial_half_range_nm", "step_nm", "output_step_nm",
                        "plane_half_range_nm", "plane_step_nm"):
                _number(r["scan"], key, positive=True)
            q = r["quadrature"]
            for key in ("nodes_theta", "nodes_phi", "plane_nodes_theta", "plane_nodes_phi"):
                if not isinstance(q[key], int) or isinstance(q[key], bool) or q[key] < 16:
                    raise ConfigError(f"quadrature {key} must be an integer >= 16, got {q[key]!r}")
            if not isinstance(r["seed"], int) or isinstance(r["seed"], bool):
                raise ConfigError(f"seed must be an integer, got {r['seed']!r}")
            wf = r["wavefront_path"]
            if wf is not None and wf != SYNTHETIC_MAP and not Path(wf).is_file():
                raise ConfigError(f"wavefront file {r['wavefront_path']} does not exist")
            f = r["fit"]
            _number(f, "eta_det", positive=True)
            _number(f, "s_max", positive=True)
            _number(f, "background_cps", nonneg=True)
            s = r["synth"]
            _number(s, "coupling", positive=True)
            _number(s, "peak_rate_cps", positive=True)
            _number(s, "exposure_s", positive=True)
            if not isinstance(s["n_points"], int) or s["n_points"] < 1:
                raise ConfigError("synth n_points must be a positive integer")
            if not isinstance(r["omega"]["samples"], int) or r["omega"]["samples"] < 2:
                raise ConfigError("omega samples must be an integer >= 2")
            # building the physics objects runs their own invariant checks
            self.geometry()
            self.trap()
            self.cooling()
            self.transition()
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: {exc}") from None

    # physics objects ------------------------------------------------------
    def geometry(self):
        g = self.raw["geometry"]
        bores = tuple(
            BoreSpec(float(b["center_radius_mm"]), float(b["radius_mm"]), math.radians(float(b.get("azimuth_deg", 0.0))))
            for b in g["bores"]
        )
        return MirrorGeometry(float(g["focal_length_mm"]), float(g["front_aperture_radius_mm"]), bores)

    def beam(self, geometry=None):
        """Donut beam; a null waist means the overlap-optimised waist of ``geometry``."""
        b = self.raw["beam"]
        waist = b["waist_mm"]
        if waist is None:
            waist = optimize_waist(geometry or self.geometry())
        return DonutBeam(float(waist), float(b["power_w"]), float(b["wavelength_nm"]))

    def wavefront(self):
        path = self.raw["wavefront_path"]
        if path is None:
            return ZERO_MAP
        if path == SYNTHETIC_MAP:
            path = synthetic_map_path()
        try:
            return load_wavefront(path, self.raw["beam"]["wavelength_nm"])
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def trap(self):
        t = self.raw["trap"]
        return TrapConfig(khz(t["freq_x_khz"]), khz(t["freq_y_khz"]), khz(t["freq_z_khz"]), t["mass_amu"] * AMU)

    def cooling(self):
        c = self.raw["cooling"]
        return CoolingConfig(mhz(c["detuning_mhz"]), mhz(c["linewidth_mhz"]), float(c["saturation"]), float(c["alpha"]))

    def transition(self):
        t = self.raw["transition"]
        return TransitionConstants(
            gamma=mhz(t["linewidth_mhz"]),
            branching=float(t["branching"]),
            wavelength_exc_nm=float(t["wavelength_exc_nm"]),
            wavelength_det_nm=float(t["wavelength_det_nm"]),
        )

    def quadrature(self):
        q = self.raw["quadrature"]
        return QuadratureSpec(q["nodes_theta"], q["nodes_phi"])

    def plane_quadrature(self):
        """Coarser quadrature used for the plane maps, which only need plot accuracy."""
        q = self.raw["quadrature"]
        return QuadratureSpec(q["plane_nodes_theta"], q["plane_nodes_phi"])

    @property
    def scan(self):
        return self.raw["scan"]

    @property
    def seed(self):
        return self.raw["seed"]

    def output_dir(self):
        """Output directory; the environment variable wins over the config."""
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.raw["output_dir"])

    def dump(self):
        """Effective configuration as YAML, minus the run location."""
        physics = {k: v for k, v in self.raw.items() if k != "output_dir"}
        return yaml.safe_dump(physics, sort_keys=True, default_flow_style=False)
