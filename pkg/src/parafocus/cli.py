"""Command-line front end.

Subcommands: ``psf``, ``omega``, ``coupling``, ``fit``, ``ion``, ``detection``
and ``synth``. Each writes CSV data plus ``<command>_summary.json`` and a
human-readable ``<command>_summary.txt`` into the output directory.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .beams import ConvergenceError
from .constants import mhz
from .config import OUTPUT_DIR_ENV, ConfigError, RunConfig
from .coupling import GridTooCoarse, PLANES, dipole_reference, plane_psf, predict_coupling
from .focal_field import FocusedBeam, NoDistinctPeak, QuadratureError, try_fwhm
from .geometry import FourPiMicroscope, ParabolicMirror, SingleLens, angular_domain, omega_curve
from .reports import (
    NO_DISTINCT_PEAK,
    format_table,
    width_cell,
    write_csv,
    write_field_grid,
    write_intensity_grid,
    write_json,
    write_scan,
    write_text,
)
from .saturation import (
    DetectionChain,
    EmptyDatasetError,
    detection_budget,
    fit_coupling,
    load_dataset,
    powers_for_rates,
    pulsed_eta,
    save_dataset,
    synthesize_dataset,
)
from .thermal import HeatingRegimeError, ThermalState, thermal_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("parafocus")

class NumericalFailure(RuntimeError):
    """Wraps solver failures that map to exit code 3."""


# ---------------------------------------------------------------- arguments
def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--output-dir", help=f"output directory (overridden by ${OUTPUT_DIR_ENV})")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--nodes-theta", type=int, help="polar quadrature nodes")
    p.add_argument("--nodes-phi", type=int, help="azimuthal quadrature nodes")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    return p


def _aperture_args(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--half-solid-angle", action="store_true", help="only light within h <= 2f")
    group.add_argument("--full-solid-angle", action="store_true", help="only the full aperture")
    p.add_argument("--wavefront", help="aberration map CSV, or 'synthetic' for the packaged stand-in")
    p.add_argument("--waist-mm", type=float, help="donut waist; default optimises the overlap")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="parafocus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("psf", parents=[common], help="focal and effective PSFs, widths table")
    _aperture_args(p)
    p.add_argument("--step-nm", type=float, help="internal line-scan step")
    p.add_argument("--output-step-nm", type=float, help="step of the written line profiles")
    p.add_argument("--plane-step-nm", type=float, help="step of the written plane grids")
    p.add_argument("--plane-half-range-nm", type=float, help="half width of the plane grids")
    p.add_argument("--no-planes", action="store_true", help="skip the xy/zy/xz plane grids")

    p = sub.add_parser("omega", parents=[common], help="weighted solid angle curves")
    p.add_argument("--samples", type=int, help="NA samples from 0 to 1")

    p = sub.add_parser("coupling", parents=[common], help="predicted coupling efficiencies")
    _aperture_args(p)

    p = sub.add_parser("fit", parents=[common], help="fit G to a saturation dataset")
    p.add_argument("dataset", nargs="?", help="CSV p_exc_watt,counts,exposure_s")
    p.add_argument("--eta-det", type=float, help="detection efficiency")
    p.add_argument("--s-max", type=float, help="saturation gate")
    p.add_argument("--background-cps", type=float, help="background rate to subtract")

    p = sub.add_parser("ion", parents=[common], help="Doppler-limit phonon numbers and widths")
    p.add_argument("--detuning-mhz", type=float, help="signed detuning (red is negative)")
    p.add_argument("--saturation", type=float, help="cooling saturation parameter")

    p = sub.add_parser("detection", parents=[common], help="detection efficiency budget")
    p.add_argument("--detected", type=float, help="background-corrected counts of the pulsed run")
    p.add_argument("--pulses", type=int, help="number of pulses")

    p = sub.add_parser("synth", parents=[common], help="synthetic saturation dataset")
    p.add_argument("--coupling", type=float, help="true coupling efficiency")
    p.add_argument("--peak-rate-cps", type=float, help="highest expected detected rate")
    p.add_argument("--points", type=int, help="number of power settings")
    p.add_argument("--exposure-s", type=float, help="exposure per point")
    p.add_argument("--background-cps", type=float, help="constant background rate")
    p.add_argument("--eta-det", type=float, help="detection efficiency")
    p.add_argument("--noiseless", action="store_true", help="write expected counts")
    return parser


def _overrides(args):
    """Nested config mapping from the flags that were given."""
    out = {}

    def put(section, key, value):
        if value is None:
            return
        if section is None:
            out[key] = value
        else:
            out.setdefault(section, {})[key] = value

    g = lambda name: getattr(args, name, None)  # noqa: E731
    put(None, "output_dir", g("output_dir"))
    put(None, "seed", g("seed"))
    put("quadrature", "nodes_theta", g("nodes_theta"))
    put("quadrature", "nodes_phi", g("nodes_phi"))
    put(None, "wavefront_path", g("wavefront"))
    put("beam", "waist_mm", g("waist_mm"))
    put("scan", "step_nm", g("step_nm"))
    put("scan", "output_step_nm", g("output_step_nm"))
    put("scan", "plane_step_nm", g("plane_step_nm"))
    put("scan", "plane_half_range_nm", g("plane_half_range_nm"))
    put("omega", "samples", g("samples"))
    put("cooling", "detuning_mhz", g("detuning_mhz"))
    put("cooling", "saturation", g("saturation"))
    put("detection", "pulsed_detected", g("detected"))
    put("detection", "pulsed_pulses", g("pulses"))
    if args.command == "fit":
        put("fit", "dataset_path", g("dataset"))
        put("fit", "eta_det", g("eta_det"))
        put("fit", "s_max", g("s_max"))
        put("fit", "background_cps", g("background_cps"))
    if args.command == "synth":
        put("synth", "coupling", g("coupling"))
        put("synth", "peak_rate_cps", g("peak_rate_cps"))
        put("synth", "n_points", g("points"))
        put("synth", "exposure_s", g("exposure_s"))
        put("synth", "background_cps", g("background_cps"))
        put("fit", "eta_det", g("eta_det"))
        if g("noiseless"):
            put("synth", "noiseless", True)
    return out


def _apertures(args):
    if getattr(args, "half_solid_angle", False):
        return ("hsa",)
    if getattr(args, "full_solid_angle", False):
        return ("fsa",)
    return ("fsa", "hsa")


def _finish(cfg, name, summary, table):
    outdir = cfg.output_dir()
    write_json(outdir / f"{name}_summary.json", summary)
    write_text(outdir / f"{name}_summary.txt", table)
    write_text(outdir / f"{name}_config.yaml", cfg.dump())
    sys.stdout.write(table)


# ---------------------------------------------------------------- scenarios
def _scenarios(cfg, apertures):
    """Build the focusing problems for every requested (wavefront, aperture) pair."""
    geometry = cfg.geometry()
    beam = cfg.beam(geometry)
    wmap = cfg.wavefront()
    variants = [("ideal", None)] if wmap.is_zero else [("ideal", None), ("aberrated", wmap)]
    quad = cfg.quadrature()
    out = []
    for variant, wf in variants:
        for ap in apertures:
            illum = geometry.half_solid_angle_radius if ap == "hsa" else None
            domain = angular_domain(geometry, illum)
            kwargs = dict(geometry=geometry, beam=beam, domain=domain)
            if wf is not None:
                kwargs["wavefront"] = wf
            out.append((variant, ap, FocusedBeam(quad=quad, **kwargs), kwargs))
    return beam, wmap, out


def _predict(system, state, reference, scan):
    return predict_coupling(
        system,
        state,
        reference,
        step=scan["step_nm"],
        lateral_range=scan["lateral_half_range_nm"],
        axial_range=scan["axial_half_range_nm"],
    )


def _resample(positions, values, half_range, step):
    n = int(np.floor(half_range / step + 1e-9))
    grid = step * np.arange(-n, n + 1)
    return grid, np.interp(grid, positions, values)


# ---------------------------------------------------------------- commands
def cmd_psf(cfg, args):
    outdir = cfg.output_dir()
    scan = cfg.scan
    state = thermal_state(cfg.trap(), cfg.cooling())
    beam, wmap, problems = _scenarios(cfg, _apertures(args))
    reference = dipole_reference(beam.wavelength, cfg.quadrature())
    results = {}
    ideal_peak = {}
    for variant, ap, system, kwargs in problems:
        tag = f"{variant}_{ap}"
        log.info("psf %s", tag)
        pred = _predict(system, state, reference, scan)
        if variant == "ideal":
            ideal_peak[ap] = pred.peak_ratio
        widths = {"point": {}, "thermal": {}}
        for axis, (profile, eff) in pred.widths.items():
            half = scan["axial_half_range_nm"] if axis == "z" else scan["lateral_half_range_nm"]
            for kind, prof in (("point", profile), ("thermal", eff.as_profile())):
                widths[kind][axis] = try_fwhm(prof)
                pos, val = _resample(prof.positions, prof.intensity, half, scan["output_step_nm"])
                write_scan(outdir / "lines" / f"{tag}_{kind}_{axis}.csv", pos, val)
        if not args.no_planes:
            plane_system = FocusedBeam(quad=cfg.plane_quadrature(), **kwargs)
            for plane in PLANES:
                grid = plane_psf(plane_system, pred.peak_position, plane, scan["plane_half_range_nm"], scan["plane_step_nm"], state)
                pts = grid.points()
                write_field_grid(outdir / "planes" / f"{tag}_point_{plane}.csv", pts, grid.field.reshape(-1, 3), grid.intensity.ravel())
                write_intensity_grid(outdir / "planes" / f"{tag}_thermal_{plane}.csv", pts, grid.effective.ravel())
        results[tag] = {
            "variant": variant,
            "aperture": ap,
            "G_point_ion": pred.peak_ratio,
            "G_thermal_ion": pred.G,
            "axis_ratios": list(pred.axis_ratios),
            "peak_position_nm": list(pred.peak_position),
            "fwhm_nm": {k: {a: (NO_DISTINCT_PEAK if v is None else v) for a, v in d.items()} for k, d in widths.items()},
        }
    for tag, res in results.items():
        if res["variant"] == "aberrated" and res["aperture"] in ideal_peak:
            res["strehl"] = res["G_point_ion"] / ideal_peak[res["aperture"]]

    rows = []
    for variant in ("ideal", "aberrated"):
        for kind, label in (("point", ""), ("thermal", " with ion extent")):
            row = [f"{variant} mirror{label}"]
            present = False
            for ap in ("fsa", "hsa"):
                res = results.get(f"{variant}_{ap}")
                if res is None:
                    row += ["-", "-"]
                    continue
                present = True
                w = res["fwhm_nm"][kind]
                row += [width_cell(None if w["x"] == NO_DISTINCT_PEAK else w["x"]),
                        width_cell(None if w["z"] == NO_DISTINCT_PEAK else w["z"])]
            if present:
                rows.append(row)
    table = "FWHM of the (effective) excitation PSF in nm\n"
    table += format_table(["", "FSA lateral", "FSA axial", "HSA lateral", "HSA axial"], rows)
    table += "\n" + _coupling_table(results)
    summary = {
        "command": "psf",
        "beam_waist_mm": beam.waist,
        "wavefront": wmap.describe(),
        "thermal_sigma_nm": list(state.sigma_nm),
        "kernel_backend": kernels.BACKEND,
        "results": results,
    }
    _finish(cfg, "psf", summary, table)
    return EXIT_OK


def _coupling_table(results):
    rows = []
    for tag, res in results.items():
        rows.append([tag, res["G_point_ion"], res["G_thermal_ion"], *res["axis_ratios"], res.get("strehl", "-")])
    return format_table(["scenario", "G point", "G thermal", "ratio x", "ratio y", "ratio z", "Strehl"], rows)


def cmd_coupling(cfg, args):
    scan = cfg.scan
    state = thermal_state(cfg.trap(), cfg.cooling())
    beam, wmap, problems = _scenarios(cfg, _apertures(args))
    reference = dipole_reference(beam.wavelength, cfg.quadrature())
    results = {}
    ideal_peak = {}
    csv_rows = []
    for variant, ap, system, _ in problems:
        tag = f"{variant}_{ap}"
        log.info("coupling %s", tag)
        for ion, st in (("point", ThermalState.point()), ("thermal", state)):
            pred = _predict(system, st, reference, scan)
            csv_rows.append([tag, ion, pred.G, pred.peak_ratio, *pred.axis_ratios])
        if variant == "ideal":
            ideal_peak[ap] = pred.peak_ratio
        results[tag] = {
            "variant": variant,
            "aperture": ap,
            "G_point_ion": pred.peak_ratio,
            "G_thermal_ion": pred.G,
            "axis_ratios": list(pred.axis_ratios),
            "peak_position_nm": list(pred.peak_position),
        }
    for res in results.values():
        if res["variant"] == "aberrated":
            res["strehl"] = res["G_point_ion"] / ideal_peak[res["aperture"]]
    self_pred = _predict(reference, ThermalState.point(), reference, scan)
    csv_rows.append(["reference_self", "point", self_pred.G, self_pred.peak_ratio, *self_pred.axis_ratios])
    write_csv(cfg.output_dir() / "coupling.csv", ["scenario", "ion", "G", "peak_ratio", "ratio_x", "ratio_y", "ratio_z"], csv_rows)
    table = _coupling_table(results) + f"reference vs itself: G = {self_pred.G:.6f}\n"
    summary = {
        "command": "coupling",
        "beam_waist_mm": beam.waist,
        "wavefront": wmap.describe(),
        "reference": self_pred.reference,
        "reference_self_G": self_pred.G,
        "results": results,
    }
    _finish(cfg, "coupling", summary, table)
    return EXIT_OK


def cmd_omega(cfg, args):
    samples = cfg.raw["omega"]["samples"]
    rows = []
    for system in (SingleLens(1.0), FourPiMicroscope(1.0), ParabolicMirror(cfg.geometry())):
        rows += omega_curve(system, samples)
    write_csv(cfg.output_dir() / "omega.csv", ["na", "omega", "system"], rows)
    by = {}
    for na, om, label in rows:
        by.setdefault(label, []).append((na, om))
    mirror = by["parabolic_mirror"][0][1]
    table = format_table(
        ["system", "omega(NA=1)", "NA for mirror omega"],
        [[label, pts[-1][1], "-" if label == "parabolic_mirror" else _na_reaching(pts, mirror)]
         for label, pts in by.items()],
    )
    summary = {"command": "omega", "samples": samples, "parabolic_mirror_omega": mirror,
               "omega_at_na1": {label: pts[-1][1] for label, pts in by.items()}}
    _finish(cfg, "omega", summary, table)
    return EXIT_OK


def _na_reaching(points, target):
    for na, om in points:
        if om >= target - 1e-12:
            return f"{na:.3f}"
    return "never"


def cmd_fit(cfg, args):
    f = cfg.raw["fit"]
    path = f["dataset_path"]
    if path is None:
        raise ConfigError("fit needs a dataset path (argument or fit.dataset_path)")
    try:
        data = load_dataset(path, background=f["background_cps"])
    except FileNotFoundError:
        raise ConfigError(f"dataset {path} does not exist") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = fit_coupling(data, cfg.transition(), detuning=mhz(f["detuning_mhz"]), eta_det=f["eta_det"], s_max=f["s_max"])
    header = ["G", "stderr", "points_used", "points_total", "s_max", "iterations", "chi2"]
    row = [res.G, res.stderr, res.points_used, len(data), res.s_max, res.iterations, res.chi2]
    write_csv(cfg.output_dir() / "fit.csv", header, [row])
    text = "".join(f"{k} = {v if isinstance(v, int) else format(v, '.6g')}\n" for k, v in zip(header, row))
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    summary = dict(zip(header, row), command="fit", dataset=Path(path).name, dataset_sha256=digest, eta_det=f["eta_det"])
    _finish(cfg, "fit", summary, text)
    return EXIT_OK


def cmd_ion(cfg, args):
    try:
        state = thermal_state(cfg.trap(), cfg.cooling())
    except HeatingRegimeError as exc:
        raise NumericalFailure(str(exc)) from exc
    axes = ("x", "y", "z")
    header = ["axis", "nbar", "sigma_nm", "sigma0_nm", "extent_fwhm_nm", "extent_1e_nm"]
    rows = [
        [a, state.nbar[i], state.sigma_nm[i], state.sigma0_nm[i], state.extent_fwhm_nm[i], state.extent_1e_nm[i]]
        for i, a in enumerate(axes)
    ]
    write_csv(cfg.output_dir() / "ion.csv", header, rows)
    summary = {"command": "ion", "axes": {r[0]: dict(zip(header[1:], r[1:])) for r in rows}}
    _finish(cfg, "ion", summary, format_table(header, rows))
    return EXIT_OK


def cmd_detection(cfg, args):
    d = cfg.raw["detection"]
    try:
        chain = DetectionChain(dict(d["stages"]))
        eta = pulsed_eta(d["pulsed_detected"], d["pulsed_pulses"], d["background_cps"], d["gate_s"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    budget = detection_budget(chain)
    rows = [[name, value] for name, value in chain.stages.items()]
    rows += [["budget_product", budget], ["pulsed_estimate", eta]]
    write_csv(cfg.output_dir() / "detection.csv", ["stage", "efficiency"], rows)
    summary = {"command": "detection", "stages": chain.stages, "budget": budget, "pulsed_eta": eta}
    _finish(cfg, "detection", summary, format_table(["stage", "efficiency"], rows))
    return EXIT_OK


def cmd_synth(cfg, args):
    s = cfg.raw["synth"]
    f = cfg.raw["fit"]
    constants = cfg.transition()
    detuning = mhz(f["detuning_mhz"])
    rates = s["peak_rate_cps"] * np.arange(1, s["n_points"] + 1) / s["n_points"]
    try:
        powers = powers_for_rates(rates, s["coupling"], f["eta_det"], constants, detuning)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    if np.any(~np.isfinite(powers)) or np.any(powers < 0.0):
        raise ConfigError("peak rate exceeds the saturated rate of the model")
    data = synthesize_dataset(
        s["coupling"], f["eta_det"], constants, detuning, powers, s["exposure_s"], s["background_cps"],
        seed=cfg.seed, noiseless=bool(s["noiseless"]),
    )
    path = cfg.output_dir() / "dataset.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(data, path)
    summary = {"command": "synth", "coupling": s["coupling"], "eta_det": f["eta_det"], "seed": cfg.seed,
               "points": len(data), "noiseless": bool(s["noiseless"]), "dataset": "dataset.csv"}
    rows = [[p, c, t] for p, c, t in zip(data.p_exc, data.counts, data.exposure)]
    _finish(cfg, "synth", summary, format_table(["p_exc_watt", "counts", "exposure_s"], rows))
    return EXIT_OK


COMMANDS = {
    "psf": cmd_psf,
    "omega": cmd_omega,
    "coupling": cmd_coupling,
    "fit": cmd_fit,
    "ion": cmd_ion,
    "detection": cmd_detection,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"parafocus: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, QuadratureError, ConvergenceError, HeatingRegimeError, EmptyDatasetError,
            GridTooCoarse, NoDistinctPeak) as exc:
        print(f"parafocus: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
