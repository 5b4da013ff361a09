"""Focusing a radially polarized donut beam with a deep parabolic mirror onto a trapped ion.

The package computes vectorial focal fields (with optional wavefront
aberrations), the ion's thermal position spread, the resulting effective
excitation PSF and coupling efficiency, and fits the coupling efficiency to
saturation data.
"""

from .aberrations import (
    GridMap,
    ZERO_MAP,
    ZernikeMap,
    evaluate_phase,
    load_wavefront,
    nm_to_noll,
    noll_to_nm,
    rms_wavefront_error,
    save_wavefront,
    synthesize_zernike,
    zernike,
)
from .beams import (
    ConvergenceError,
    DipoleFarField,
    DonutBeam,
    RadialBeam,
    donut_amplitude,
    mode_overlap,
    optimize_waist,
    project_to_sphere,
)
from .config import ConfigError, RunConfig, synthetic_map_path
from .constants import YB174, TransitionConstants
from .coupling import (
    CouplingPrediction,
    EffectivePSF,
    GridTooCoarse,
    convolve_grid,
    convolve_psf,
    dipole_reference,
    plane_psf,
    predict_coupling,
)
from .focal_field import (
    FocalFieldGrid,
    FocusedBeam,
    NoDistinctPeak,
    QuadratureError,
    QuadratureSpec,
    ScanProfile,
    find_peak,
    focus_field,
    fwhm,
    peak_strehl,
    scan,
    strehl_ratio,
)
from .geometry import (
    AngularDomain,
    BoreSpec,
    FourPiMicroscope,
    MirrorGeometry,
    ParabolicMirror,
    SingleLens,
    angle_to_aperture,
    angular_domain,
    aperture_to_angle,
    omega,
    omega_curve,
    solid_angle_fraction,
    weighted_solid_angle_linear,
)
from .kernels import BACKEND
from .saturation import (
    DetectionChain,
    EmptyDatasetError,
    FitResult,
    SaturationDataset,
    detection_budget,
    detection_rate,
    fit_coupling,
    load_dataset,
    max_rate,
    pulsed_eta,
    s_gate,
    save_dataset,
    saturation_power,
    synthesize_dataset,
)
from .thermal import (
    CoolingConfig,
    HeatingRegimeError,
    ThermalState,
    TrapConfig,
    dipole_overlap_factors,
    ground_state_sigma,
    ion_density,
    mean_phonon,
    thermal_state,
    upper_state_population,
    wavepacket_sigma,
)

__version__ = "0.1.0"
