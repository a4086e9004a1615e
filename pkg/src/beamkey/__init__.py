"""Physical-layer key generation over sparse mmWave channels with beam shaping."""

from .array_channel import (
    PURE_LOS,
    PURE_NLOS,
    ArrayGeometry,
    ChannelRealization,
    NoiseModel,
    calibrate_noise,
    draw_channel,
    observe,
    steering_vector,
)
from .beam_weights import (
    HardwareProfile,
    WeightVector,
    directional_codebook,
    los_power_fraction,
    null_weight_ideal,
    null_weight_practical,
    random_weight,
    realize,
)
from .errors import (
    BeamKeyError,
    ConfigError,
    InfeasibleWeightError,
    InputDomainError,
    SchemeInfeasibleError,
    UndefinedPhaseError,
)
from .ga_optimizer import BeamArchive, GaConfig, evolve, select_subset
from .key_pipeline import KdrReport, KeyBits, KeyParams, extract_key, kdr, secrecy_gap
from .schemes import (
    Scheme,
    SessionConfig,
    ThresholdPair,
    beam_sequence,
    run_session,
    run_session_detail,
    sweep_thresholds,
)

__version__ = "0.1.0"
