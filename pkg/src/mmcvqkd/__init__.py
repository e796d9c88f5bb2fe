"""Key-rate modelling and simulation of multi-mode Gaussian-modulated CV-QKD."""

__version__ = "0.1.0"

from .detector import (
    CalibrationResult,
    DetectorParams,
    RepRateScenario,
    calibrate_from_variance_samples,
    detector_from_scenario,
    electronic_noise_snu,
    lo_photons_per_pulse,
)
from .errors import (
    CalibrationError,
    ClampedEstimateWarning,
    ConfigError,
    CVQKDError,
    DomainError,
    EstimationError,
    FitError,
    GainUndefinedError,
    NumericalDomainError,
)
from .multimode import (
    effective_single_mode,
    estimate_params_multimode,
    joint_variance,
    key_gain,
    key_rate_multimode,
    snr_ratio,
    snr_ratio_first_principles,
)
from .security import (
    ChannelParams,
    KeyRateReport,
    NoiseBudget,
    ProtocolParams,
    g_function,
    holevo_bound,
    key_rate,
    mutual_information,
    noise_budget,
    snr,
    transmittance_from_distance,
)
