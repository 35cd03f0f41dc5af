"""Two-port second-harmonic cavity noise simulator."""

from .analyzer import (
    NoiseSpectrum,
    analytic_dark_spectrum,
    analytic_qnl_spectrum,
    combined_spectrum,
    correct_electronic_noise,
    gain_balance_from_dc,
    shot_noise_reference,
    welch_psd,
    welch_spectrum,
    witness_from_traces,
)
from .cavity import (
    CavityParams,
    SteadyState,
    cavity_linewidth,
    finesse_from_losses,
    free_spectral_range,
    phase_match_efficiency,
    reflected_power,
    roundtrip_loss_from_finesse,
    steady_state,
    temperature_to_mismatch,
)
from .config import AnalysisConfig, RunConfig, load_config, parse_scalar
from .langevin_mc import MCSpectra, mc_spectra
from .noise import (
    QuadSpectra,
    WitnessReport,
    apply_detection_loss,
    default_frequency_grid,
    duan_sum,
    optimal_gain,
    quadrature_spectra,
    sumdiff_variance,
    witness_pair,
    witness_report,
)
from .synth import (
    DetectionChain,
    TwoChannelTrace,
    dark_trace,
    shot_noise_pair,
    synthesize,
    witness_arm_traces,
)
from .traceio import read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "CavityParams",
    "DetectionChain",
    "MCSpectra",
    "NoiseSpectrum",
    "QuadSpectra",
    "RunConfig",
    "SteadyState",
    "TwoChannelTrace",
    "WitnessReport",
    "analytic_dark_spectrum",
    "analytic_qnl_spectrum",
    "apply_detection_loss",
    "cavity_linewidth",
    "combined_spectrum",
    "correct_electronic_noise",
    "dark_trace",
    "default_frequency_grid",
    "duan_sum",
    "finesse_from_losses",
    "free_spectral_range",
    "gain_balance_from_dc",
    "load_config",
    "mc_spectra",
    "optimal_gain",
    "parse_scalar",
    "phase_match_efficiency",
    "quadrature_spectra",
    "read_trace",
    "reflected_power",
    "roundtrip_loss_from_finesse",
    "shot_noise_pair",
    "shot_noise_reference",
    "steady_state",
    "sumdiff_variance",
    "synthesize",
    "temperature_to_mismatch",
    "welch_psd",
    "welch_spectrum",
    "witness_arm_traces",
    "witness_from_traces",
    "witness_pair",
    "witness_report",
    "write_trace",
]
