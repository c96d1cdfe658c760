"""Driven dissipative two-qubit simulator with spectral analysis.

Public layers, lowest first:
  model      parameters, Hamiltonian, transition frequencies
  bloch      15-component two-qubit state and its equations of motion
  integrate  fixed-step integrators (deterministic RK4, stochastic Euler)
  spectrum   FFT spectra, peak finding/classification, gain metrics
  config     scenario configs, presets, file parsing
  runner     scenario and sweep orchestration
  output     CSV/JSON/SVG artifacts
  cli        command line front end
"""

from .bloch import (
    COMPONENTS,
    BlochTensor,
    PhysicalityReport,
    physicality_check,
    rhs,
    thermal_product_state,
)
from .config import (
    CONFIG_KEYS,
    PRESETS,
    ScenarioConfig,
    config_text,
    get_preset,
    load_config,
    resolve_omega,
    with_overrides,
)
from .errors import ConfigError, DivergenceError, ParameterError
from .integrate import (
    IntegratorConfig,
    NoiseStream,
    PhysicalityWarning,
    TimeSeries,
    integrate,
    run_ensemble,
    step,
)
from .model import (
    DriveParams,
    QubitPairParams,
    TransitionFrequencies,
    hamiltonian_matrix,
    transition_frequencies,
)
from .output import read_timeseries_csv
from .runner import (
    ScenarioResult,
    SweepResult,
    run_scenario,
    run_sweep,
)
from .spectrum import (
    AmplificationMetrics,
    BetaFit,
    Peak,
    PeakSet,
    Spectrum,
    amplification_metrics,
    beta_from_sweep,
    classify_peaks,
    compute_spectrum,
    ensemble_spectrum,
    find_peaks,
)

__version__ = "0.1.0"

__all__ = [
    "AmplificationMetrics",
    "BetaFit",
    "BlochTensor",
    "COMPONENTS",
    "CONFIG_KEYS",
    "ConfigError",
    "DivergenceError",
    "DriveParams",
    "IntegratorConfig",
    "NoiseStream",
    "ParameterError",
    "Peak",
    "PeakSet",
    "PhysicalityReport",
    "PhysicalityWarning",
    "PRESETS",
    "QubitPairParams",
    "ScenarioConfig",
    "ScenarioResult",
    "Spectrum",
    "SweepResult",
    "TimeSeries",
    "TransitionFrequencies",
    "amplification_metrics",
    "beta_from_sweep",
    "classify_peaks",
    "compute_spectrum",
    "config_text",
    "ensemble_spectrum",
    "find_peaks",
    "get_preset",
    "hamiltonian_matrix",
    "integrate",
    "load_config",
    "physicality_check",
    "read_timeseries_csv",
    "resolve_omega",
    "rhs",
    "run_ensemble",
    "run_scenario",
    "run_sweep",
    "step",
    "thermal_product_state",
    "transition_frequencies",
    "with_overrides",
    "__version__",
]
