"""Key-generation sessions for each beamforming scheme.

A session draws one static Alice-Bob channel, builds the per-slot beam
sequence for the chosen scheme, and measures

* ``kdr_ab``: Alice's noiseless key against Bob's noisy key, averaged over
  independent noise sequences;
* ``kdr_be``: Bob's noiseless key against a noiseless eavesdropper's key,
  averaged over independent Alice-Eve channel draws.

For the channel-aware scheme the beams come from the GA archive, restricted
to a band of LOS-power values chosen by a Monte-Carlo threshold sweep that
uses Alice's knowledge of the Bob channel and the calibrated noise power.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .array_channel import (
    ArrayGeometry,
    ChannelRealization,
    NoiseModel,
    calibrate_noise,
    complex_gaussian,
    draw_channel,
    draw_channels,
    parse_db,
)
from .beam_weights import (
    HardwareProfile,
    WeightVector,
    null_weight_ideal,
    null_weight_practical,
    random_weight,
    realize,
    realize_batch,
)
from .errors import ConfigError, SchemeInfeasibleError, UndefinedPhaseError
from .ga_optimizer import BeamArchive, GaConfig, evolve
from .key_pipeline import KdrReport, KeyBits, KeyParams, extract_bits, kdr_rows, make_report

log = logging.getLogger(__name__)

N_QUANTILES = 21


class Scheme(str, enum.Enum):
    RANDOM = "random"
    NULL_PRACTICAL = "null_practical"
    NULL_IDEAL = "null_ideal"
    MMKEY = "mmkey"

    @classmethod
    def parse(cls, text) -> "Scheme":
        if isinstance(text, Scheme):
            return text
        norm = str(text).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value.replace("_", "") == norm:
                return member
        raise ConfigError(f"unknown scheme {text!r}; choose from {[m.value for m in cls]}")


@dataclass(frozen=True)
class SessionConfig:
    """Everything that determines one key-generation session.

    ``eve_angle_deg`` defaults to the LOS angle (the worst case) and
    ``hw`` to unit power per element. ``min_subset_size`` defaults to
    max(8, ceil(T/8)).
    """

    geom: ArrayGeometry = field(default_factory=ArrayGeometry)
    hw: HardwareProfile | None = None
    theta_star_deg: float = 0.0
    k_factor_db: float = 10.0
    snr_max_db: float = 31.4
    key_params: KeyParams = field(default_factory=KeyParams)
    eve_angle_deg: float | None = None
    mc_channel_draws: int = 50
    mc_noise_draws: int = 50
    scheme: Scheme = Scheme.MMKEY
    seed: int = 0
    ga: GaConfig = field(default_factory=GaConfig)
    ga_seed: int = 0
    min_subset_size: int | None = None
    sweep_divisor: int = 5
    sweep_repeats: int = 4
    two_sided_noise: bool = False
    random_allow_off: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "k_factor_db", parse_db(self.k_factor_db))
        object.__setattr__(self, "snr_max_db", parse_db(self.snr_max_db))
        if self.hw is None:
            object.__setattr__(self, "hw", HardwareProfile.default(self.geom))
        if self.eve_angle_deg is None:
            object.__setattr__(self, "eve_angle_deg", self.theta_star_deg)
        if self.min_subset_size is None:
            slots = self.key_params.slots
            object.__setattr__(self, "min_subset_size", max(8, math.ceil(slots / 8)))
        for name in ("mc_channel_draws", "mc_noise_draws", "sweep_divisor", "sweep_repeats", "min_subset_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        for name in ("theta_star_deg", "eve_angle_deg"):
            if not -90.0 <= getattr(self, name) <= 90.0:
                raise ConfigError(f"{name} must lie in [-90, 90]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ThresholdPair:
    alpha_l: float
    alpha_u: float
    estimated_sg: float
    subset_size: int = 0
    estimated_kdr_ab: float = math.nan
    estimated_kdr_be: float = math.nan


@dataclass(frozen=True, eq=False)
class SessionResult:
    report: KdrReport
    alice_key: KeyBits
    bob_key: KeyBits
    beams: np.ndarray
    noise: NoiseModel
    channel: ChannelRealization
    thresholds: ThresholdPair | None = None


@lru_cache(maxsize=32)
def cached_archive(
    geom: ArrayGeometry, theta_star_deg: float, hw: HardwareProfile, ga: GaConfig, seed: int
) -> BeamArchive:
    """GA archive for one array/LOS direction; channel-independent, so shared across sessions."""
    return evolve(geom, theta_star_deg, hw, ga, np.random.default_rng(seed))


def session_archive(cfg: SessionConfig) -> BeamArchive:
    return cached_archive(cfg.geom, cfg.theta_star_deg, cfg.hw, cfg.ga, cfg.ga_seed)


def cycle_indices(m: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Indices into ``m`` items: shuffled, reshuffled at each wrap, no repeat across a wrap."""
    if m < 1:
        raise SchemeInfeasibleError("empty beam subset")
    out: list[int] = []
    while len(out) < length:
        perm = rng.permutation(m)
        if out and m > 1 and perm[0] == out[-1]:
            perm[0], perm[1] = perm[1], perm[0]
        out.extend(int(i) for i in perm)
    return np.array(out[:length], dtype=np.int64)


def _subset_arrays(omega_prime, hw: HardwareProfile):
    if isinstance(omega_prime, tuple):
        return omega_prime
    codes = np.array([w.phase_codes for w in omega_prime], dtype=np.int64)
    on = np.array([w.on_bits for w in omega_prime], dtype=bool)
    return codes, on


def beam_sequence(cfg: SessionConfig, rng: np.random.Generator, omega_prime=None) -> np.ndarray:
    """Realized weight vectors for every slot, shape (T, N).

    ``omega_prime`` (MmKey only) is a list of WeightVectors or a
    ``(codes, on_bits)`` array pair.
    """
    t = cfg.key_params.slots
    n = cfg.geom.n_antennas
    if cfg.scheme is Scheme.RANDOM:
        ws = [random_weight(cfg.hw, n, rng, allow_off=cfg.random_allow_off) for _ in range(t)]
        return np.stack([realize(w, cfg.hw) for w in ws])
    if cfg.scheme is Scheme.NULL_PRACTICAL:
        ws = [null_weight_practical(cfg.geom, cfg.theta_star_deg, cfg.hw, rng) for _ in range(t)]
        return np.stack([realize(w, cfg.hw) for w in ws])
    if cfg.scheme is Scheme.NULL_IDEAL:
        return np.stack(
            [null_weight_ideal(cfg.geom, cfg.theta_star_deg, cfg.hw.total_power, rng) for _ in range(t)]
        )
    if omega_prime is None or len(omega_prime) == 0 or len(_subset_arrays(omega_prime, cfg.hw)[0]) == 0:
        raise SchemeInfeasibleError("no beams satisfy the LOS-power thresholds")
    codes, on = _subset_arrays(omega_prime, cfg.hw)
    idx = cycle_indices(len(codes), t, rng)
    return realize_batch(codes[idx], on[idx], cfg.hw)


@dataclass(frozen=True, eq=False)
class _Trial:
    kdr_ab: float
    kdr_be: float
    alice_bits: np.ndarray
    bob_bits: np.ndarray


def _evaluate(
    beams: np.ndarray,
    h_bob: np.ndarray,
    bob_noise: np.ndarray,
    eve_channels: np.ndarray,
    bits_per_slot: int,
    alice_noise: np.ndarray | None = None,
) -> _Trial:
    """KDRs for a fixed beam sequence.

    ``bob_noise`` has shape (M, T); ``eve_channels`` has shape (M_e, N).
    """
    clean = beams @ h_bob
    alice = extract_bits(clean, bits_per_slot)
    bob = extract_bits(clean[None, :] + bob_noise, bits_per_slot)
    if alice_noise is None:
        kdr_ab = float(np.mean(kdr_rows(alice[None, :], bob)))
    else:
        alice_noisy = extract_bits(clean[None, :] + alice_noise, bits_per_slot)
        kdr_ab = float(np.mean(kdr_rows(alice_noisy, bob)))
    eve = extract_bits(eve_channels @ beams.T, bits_per_slot)
    kdr_be = float(np.mean(kdr_rows(alice[None, :], eve)))
    return _Trial(kdr_ab, kdr_be, alice, bob[0])


def _draw_noise(rng, count, slots, noise: NoiseModel) -> np.ndarray:
    if noise.noise_power == 0:
        return np.zeros((count, slots), dtype=complex)
    return complex_gaussian(rng, (count, slots), noise.noise_power)


def default_threshold_grid(archive: BeamArchive) -> list[float]:
    """The 0%, 5%, ..., 100% quantiles of the archive's f values, deduplicated."""
    q = np.quantile(archive.f_values, np.linspace(0.0, 1.0, N_QUANTILES))
    return sorted({float(min(max(v, 0.0), 1.0)) for v in q})


def threshold_table(
    cfg: SessionConfig,
    archive: BeamArchive,
    candidate_grid,
    rng: np.random.Generator,
    *,
    channel: ChannelRealization,
    noise: NoiseModel,
) -> list[ThresholdPair]:
    """Reduced-fidelity (kdr_ab, kdr_be, SG) estimates for every admissible threshold pair.

    Pairs are strictly increasing grid values (alpha_l < alpha_u) whose subset
    has at least ``cfg.min_subset_size`` beams. The eavesdropper is assumed
    on the LOS and the same noise and Eve-channel draws are reused for every
    pair, so differences between pairs reflect the subsets rather than
    sampling luck. Identical subsets share one estimate.
    """
    grid = [float(g) for g in candidate_grid]
    if len(grid) < 2 or any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("candidate grid needs at least two ascending values")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ConfigError("candidate grid values must lie in [0, 1]")
    if len(archive) == 0:
        raise SchemeInfeasibleError("empty beam archive")

    f = archive.f_values
    order = np.argsort(f, kind="stable")
    f_sorted = f[order]
    codes, on = archive.codes[order], archive.on_bits[order]

    m_noise = max(1, cfg.mc_noise_draws // cfg.sweep_divisor)
    m_eve = max(1, cfg.mc_channel_draws // cfg.sweep_divisor)
    r_eve, r_noise, r_alice, r_beams = rng.spawn(4)
    eve_h = draw_channels(cfg.geom, cfg.theta_star_deg, cfg.k_factor_db, r_eve, m_eve)
    # one long cycled sequence stands in for sweep_repeats independent sessions
    slots = cfg.sweep_repeats * (cfg.key_params.slots - 1) + 1
    bob_noise = _draw_noise(r_noise, m_noise, slots, noise)
    alice_noise = _draw_noise(r_alice, m_noise, slots, noise) if cfg.two_sided_noise else None

    seen: dict[tuple[int, int], _Trial | None] = {}
    table = []
    for j in range(1, len(grid)):
        for i in range(j):
            lo = int(np.searchsorted(f_sorted, grid[i], side="left"))
            hi = int(np.searchsorted(f_sorted, grid[j], side="right"))
            size = hi - lo
            if size < cfg.min_subset_size:
                continue
            if (lo, hi) not in seen:
                idx = lo + cycle_indices(size, slots, r_beams)
                beams = realize_batch(codes[idx], on[idx], cfg.hw)
                try:
                    seen[(lo, hi)] = _evaluate(
                        beams, channel.h, bob_noise, eve_h, cfg.key_params.bits_per_slot, alice_noise
                    )
                except UndefinedPhaseError:
                    # exact nulls on a noiseless pure-LOS link carry no phase
                    seen[(lo, hi)] = None
            trial = seen[(lo, hi)]
            if trial is None:
                continue
            sg = min(trial.kdr_be, 1.0 - trial.kdr_be) - trial.kdr_ab
            table.append(ThresholdPair(grid[i], grid[j], sg, size, trial.kdr_ab, trial.kdr_be))
    return table


def sweep_thresholds(
    cfg: SessionConfig,
    archive: BeamArchive,
    candidate_grid=None,
    rng: np.random.Generator | None = None,
    *,
    channel: ChannelRealization | None = None,
    noise: NoiseModel | None = None,
) -> ThresholdPair:
    """Threshold pair with the highest estimated secrecy gap.

    Ties go to the smaller ``alpha_u`` (then the smaller ``alpha_l``). When
    ``channel``/``noise`` are omitted they are drawn and calibrated the same
    way :func:`run_session` would for ``cfg``.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    if candidate_grid is None:
        candidate_grid = default_threshold_grid(archive)
    if channel is None:
        channel = draw_channel(cfg.geom, cfg.theta_star_deg, cfg.k_factor_db, rng)
    if noise is None:
        noise = calibrate_noise(cfg.geom, channel, cfg.snr_max_db, hw=cfg.hw)
    table = threshold_table(cfg, archive, candidate_grid, rng, channel=channel, noise=noise)
    if not table:
        raise SchemeInfeasibleError(
            f"no threshold pair selects at least {cfg.min_subset_size} beams"
        )
    best = table[0]
    for pair in table[1:]:
        if pair.estimated_sg > best.estimated_sg or (
            pair.estimated_sg == best.estimated_sg
            and (pair.alpha_u, pair.alpha_l) < (best.alpha_u, best.alpha_l)
        ):
            best = pair
    return best


def _mmkey_subset(cfg, archive, pair: ThresholdPair):
    f = archive.f_values
    order = np.argsort(f, kind="stable")
    keep = order[(f[order] >= pair.alpha_l) & (f[order] <= pair.alpha_u)]
    return archive.codes[keep], archive.on_bits[keep]


def run_session_detail(
    cfg: SessionConfig,
    rng: np.random.Generator | None = None,
    archive: BeamArchive | None = None,
) -> SessionResult:
    """Full-fidelity session; see the module docstring for what is measured."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    r_bob, r_beams, r_noise, r_eve, r_sweep, r_alice = rng.spawn(6)
    channel = draw_channel(cfg.geom, cfg.theta_star_deg, cfg.k_factor_db, r_bob)
    noise = calibrate_noise(cfg.geom, channel, cfg.snr_max_db, hw=cfg.hw)

    pair = None
    omega_prime = None
    if cfg.scheme is Scheme.MMKEY:
        archive = archive if archive is not None else session_archive(cfg)
        pair = sweep_thresholds(cfg, archive, None, r_sweep, channel=channel, noise=noise)
        omega_prime = _mmkey_subset(cfg, archive, pair)
        log.debug("thresholds (%.4g, %.4g), |subset|=%d", pair.alpha_l, pair.alpha_u, pair.subset_size)
    beams = beam_sequence(cfg, r_beams, omega_prime)

    slots = cfg.key_params.slots
    bob_noise = _draw_noise(r_noise, cfg.mc_noise_draws, slots, noise)
    alice_noise = _draw_noise(r_alice, cfg.mc_noise_draws, slots, noise) if cfg.two_sided_noise else None
    eve_h = draw_channels(cfg.geom, cfg.eve_angle_deg, cfg.k_factor_db, r_eve, cfg.mc_channel_draws)
    trial = _evaluate(beams, channel.h, bob_noise, eve_h, cfg.key_params.bits_per_slot, alice_noise)

    return SessionResult(
        report=make_report(trial.kdr_ab, trial.kdr_be),
        alice_key=KeyBits(trial.alice_bits, cfg.key_params),
        bob_key=KeyBits(trial.bob_bits, cfg.key_params),
        beams=beams,
        noise=noise,
        channel=channel,
        thresholds=pair,
    )


def run_session(
    cfg: SessionConfig, rng: np.random.Generator | None = None, archive: BeamArchive | None = None
) -> KdrReport:
    """KDRs and secrecy gap for one session; seeded from ``cfg.seed`` when ``rng`` is None."""
    return run_session_detail(cfg, rng, archive).report


def with_scheme(cfg: SessionConfig, scheme) -> SessionConfig:
    return replace(cfg, scheme=Scheme.parse(scheme))
