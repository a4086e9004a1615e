"""Flat ``key = value`` configuration files and their mapping onto dataclasses.

Precedence is CLI override > file > built-in default. Unknown keys are an
error so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_channel import ArrayGeometry, parse_db
from .beam_weights import HardwareProfile
from .errors import ConfigError
from .ga_optimizer import GaConfig
from .key_pipeline import KeyParams
from .schemes import Scheme, SessionConfig

DEFAULT_SNR_DB = tuple(round(float(x), 4) for x in np.linspace(1.3, 31.4, 8))
DEFAULT_K_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_OFFSETS_DEG = tuple(float(x) for x in range(-60, 61, 10))
DEFAULT_SCHEMES = (Scheme.RANDOM, Scheme.NULL_PRACTICAL, Scheme.NULL_IDEAL, Scheme.MMKEY)


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    try:
        return int(text.strip(), 0)
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else _float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else _int(text)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(parse_db(part) for part in text.replace(";", ",").split(",") if part.strip())


def _scheme_list(text: str) -> tuple[Scheme, ...]:
    return tuple(Scheme.parse(part) for part in text.split(",") if part.strip())


# key -> (section, field, parser)
KEYS = {
    "n_antennas": ("geom", "n_antennas", _int),
    "spacing_wavelengths": ("geom", "spacing_wavelengths", _float),
    "carrier_ghz": ("geom", "carrier_ghz", _float),
    "phase_bits": ("hw", "phase_bits", _int),
    "amplitude_on_off": ("hw", "amplitude_on_off", _bool),
    "total_power": ("hw", "total_power", _opt_float),
    "slots": ("key", "slots", _int),
    "bits_per_slot": ("key", "bits_per_slot", _int),
    "target_key_bits": ("key", "target_key_bits", _int),
    "theta_star_deg": ("session", "theta_star_deg", _float),
    "k_factor_db": ("session", "k_factor_db", parse_db),
    "snr_max_db": ("session", "snr_max_db", parse_db),
    "eve_angle_deg": ("session", "eve_angle_deg", _opt_float),
    "mc_channel_draws": ("session", "mc_channel_draws", _int),
    "mc_noise_draws": ("session", "mc_noise_draws", _int),
    "scheme": ("session", "scheme", Scheme.parse),
    "seed": ("session", "seed", _int),
    "ga_seed": ("session", "ga_seed", _opt_int),
    "min_subset_size": ("session", "min_subset_size", _opt_int),
    "sweep_divisor": ("session", "sweep_divisor", _int),
    "sweep_repeats": ("session", "sweep_repeats", _int),
    "two_sided_noise": ("session", "two_sided_noise", _bool),
    "random_allow_off": ("session", "random_allow_off", _bool),
    "ga_population_size": ("ga", "population_size", _int),
    "ga_max_generations": ("ga", "max_generations", _int),
    "ga_tournament_size": ("ga", "tournament_size", _int),
    "ga_crossover_prob": ("ga", "crossover_prob", _float),
    "ga_mutation_rate": ("ga", "mutation_rate", _opt_float),
    "ga_elite_count": ("ga", "elite_count", _int),
    "ga_stall_generations": ("ga", "stall_generations", _int),
    "ga_init_on_prob": ("ga", "init_on_prob", _float),
    "snr_values_db": ("grid", "snr_values_db", _float_list),
    "k_values_db": ("grid", "k_values_db", _float_list),
    "schemes": ("grid", "schemes", _scheme_list),
    "sessions_per_cell": ("grid", "sessions_per_cell", _int),
    "angle_offsets_deg": ("grid", "angle_offsets_deg", _float_list),
}


def read_config_file(path) -> dict[str, str]:
    """Raw ``key -> value`` strings from a flat config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["config"])


@dataclass(frozen=True)
class ExperimentGrid:
    snr_values_db: tuple[float, ...] = DEFAULT_SNR_DB
    k_values_db: tuple[float, ...] = DEFAULT_K_DB
    schemes: tuple[Scheme, ...] = DEFAULT_SCHEMES
    sessions_per_cell: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if not self.snr_values_db or not self.k_values_db or not self.schemes:
            raise ConfigError("grid axes must be non-empty")
        for name in ("snr_values_db", "k_values_db"):
            values = list(getattr(self, name))
            if values != sorted(values):
                raise ConfigError(f"{name} must be sorted ascending")
        if self.sessions_per_cell < 1:
            raise ConfigError("sessions_per_cell must be at least 1")


@dataclass(frozen=True)
class RunOptions:
    session: SessionConfig
    grid: ExperimentGrid
    angle_offsets_deg: tuple[float, ...] = DEFAULT_OFFSETS_DEG
    # config keys as given, for echoing into outputs
    given: dict = field(default_factory=dict, compare=False)


def build_options(values: dict[str, str], seed: int | None = None) -> RunOptions:
    """Turn raw key/value strings (file merged with overrides) into configs."""
    parts: dict[str, dict] = {s: {} for s in ("geom", "hw", "key", "session", "ga", "grid")}
    for key, raw in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, name, parse = KEYS[key]
        parts[section][name] = parse(raw)
    if seed is not None:
        parts["session"]["seed"] = seed

    try:
        geom = ArrayGeometry(**parts["geom"])
        hw_kwargs = {k: v for k, v in parts["hw"].items() if v is not None}
        hw = HardwareProfile.default(geom, **hw_kwargs)
        key_params = KeyParams(**parts["key"])
        ga = GaConfig(**parts["ga"])
        session_kwargs = dict(parts["session"])
        base_seed = session_kwargs.get("seed", 0)
        if session_kwargs.get("ga_seed") is None:
            session_kwargs["ga_seed"] = base_seed
        session = SessionConfig(geom=geom, hw=hw, key_params=key_params, ga=ga, **session_kwargs)
        grid_kwargs = dict(parts["grid"])
        offsets = grid_kwargs.pop("angle_offsets_deg", DEFAULT_OFFSETS_DEG)
        grid = ExperimentGrid(base_seed=base_seed, **grid_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return RunOptions(session=session, grid=grid, angle_offsets_deg=offsets, given=dict(values))
