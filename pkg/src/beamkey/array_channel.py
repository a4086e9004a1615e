"""ULA steering vectors, Rician channel draws, and receiver noise.

Angles are in degrees at every public interface and converted to radians
internally. Channel and weight vectors follow the row/column convention of
the received-signal model ``y = h @ W + z``: ``h`` is a length-N row and the
product is a plain (unconjugated) sum over antennas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputDomainError

PURE_LOS = math.inf
PURE_NLOS = -math.inf


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array at the transmitter.

    Attributes:
        n_antennas: number of elements, at least 2.
        spacing_wavelengths: element spacing in wavelengths, in (0, 1].
        carrier_ghz: carrier frequency; informational only.
    """

    n_antennas: int = 9
    spacing_wavelengths: float = 0.5
    carrier_ghz: float = 60.0

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ConfigError(f"n_antennas must be an integer >= 2, got {self.n_antennas}")
        if not 0.0 < self.spacing_wavelengths <= 1.0:
            raise ConfigError(
                f"spacing_wavelengths must lie in (0, 1], got {self.spacing_wavelengths}"
            )
        if not self.carrier_ghz > 0:
            raise ConfigError(f"carrier_ghz must be positive, got {self.carrier_ghz}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One static channel vector and the parts it was built from."""

    h: np.ndarray
    los_angle_deg: float
    k_factor_db: float
    nlos: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.h.setflags(write=False)
        self.nlos.setflags(write=False)


@dataclass(frozen=True)
class NoiseModel:
    noise_power: float
    snr_max_db: float

    def __post_init__(self):
        if not self.noise_power >= 0:
            raise ConfigError(f"noise_power must be >= 0, got {self.noise_power}")


def parse_db(value) -> float:
    """Parse a dB quantity, accepting ``inf``/``-inf`` sentinels as strings."""
    if isinstance(value, str):
        text = value.strip().lower().replace("−", "-")
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"cannot parse dB value {value!r}") from None
    return float(value)


def _check_angle(angle_deg: float) -> None:
    if not -90.0 <= angle_deg <= 90.0:
        raise InputDomainError(f"angle must lie in [-90, 90] degrees, got {angle_deg}")


def steering_vector(geom: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """Transmit steering vector ``a(theta)``; element m is exp(-j 2 pi d m sin(theta))."""
    _check_angle(angle_deg)
    m = np.arange(geom.n_antennas)
    phase = 2.0 * np.pi * geom.spacing_wavelengths * math.sin(math.radians(angle_deg))
    return np.exp(-1j * phase * m)


def rician_weights(k_factor_db: float) -> tuple[float, float]:
    """Amplitude weights (LOS, NLOS) for a K-factor in dB, sentinels included."""
    if k_factor_db == PURE_LOS:
        return 1.0, 0.0
    if k_factor_db == PURE_NLOS:
        return 0.0, 1.0
    if math.isnan(k_factor_db):
        raise InputDomainError("k_factor_db is NaN")
    k = 10.0 ** (k_factor_db / 10.0)
    return math.sqrt(k / (k + 1.0)), math.sqrt(1.0 / (k + 1.0))


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with the given per-entry variance."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(
    geom: ArrayGeometry, angle_deg: float, k_factor_db: float, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one Rician channel toward ``angle_deg``.

    The result is meant to be held fixed for a whole key-generation session.
    """
    los = steering_vector(geom, angle_deg)
    nlos = complex_gaussian(rng, geom.n_antennas)
    w_los, w_nlos = rician_weights(k_factor_db)
    return ChannelRealization(
        h=w_los * los + w_nlos * nlos,
        los_angle_deg=angle_deg,
        k_factor_db=k_factor_db,
        nlos=nlos,
    )


def draw_channels(
    geom: ArrayGeometry,
    angle_deg: float,
    k_factor_db: float,
    rng: np.random.Generator,
    count: int,
) -> np.ndarray:
    """Stack of ``count`` independent channel vectors, shape (count, N)."""
    los = steering_vector(geom, angle_deg)
    nlos = complex_gaussian(rng, (count, geom.n_antennas))
    w_los, w_nlos = rician_weights(k_factor_db)
    return w_los * los[None, :] + w_nlos * nlos


def _as_vector(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelRealization) else np.asarray(h)


def calibrate_noise(
    geom: ArrayGeometry,
    h,
    snr_max_db: float,
    training_codebook=None,
    hw=None,
) -> NoiseModel:
    """Noise power such that the best training beam sees ``snr_max_db``.

    ``training_codebook`` is a sequence (or 2-D array) of realized weight
    vectors. When omitted, the quantized directional codebook for ``hw`` is
    used.
    """
    if training_codebook is None:
        from .beam_weights import HardwareProfile, directional_codebook

        training_codebook = directional_codebook(geom, hw or HardwareProfile.default(geom))
    book = np.asarray(training_codebook, dtype=complex)
    if book.ndim != 2 or book.shape[0] == 0:
        raise ConfigError("training codebook must contain at least one beam")
    snr_max_db = parse_db(snr_max_db)
    p_best = float(np.max(np.abs(book @ _as_vector(h)) ** 2))
    if snr_max_db == math.inf:
        return NoiseModel(0.0, snr_max_db)
    return NoiseModel(p_best / 10.0 ** (snr_max_db / 10.0), snr_max_db)


def observe(h, w: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> complex:
    """One received sample ``h @ w + z`` for a unit preamble."""
    y = complex(_as_vector(h) @ np.asarray(w))
    if noise.noise_power == 0:
        return y
    return y + complex(complex_gaussian(rng, (), noise.noise_power))
