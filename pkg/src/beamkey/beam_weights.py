"""Hardware-feasible beamforming weights and the normalized LOS-power objective.

A feasible weight vector is a per-antenna phase code (``phase_bits`` bits)
plus an on/off bit. The realized complex vector is scaled so that its
squared norm equals the total transmit power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .array_channel import ArrayGeometry, complex_gaussian, steering_vector
from .errors import ConfigError, InfeasibleWeightError, InputDomainError

_DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class HardwareProfile:
    phase_bits: int = 2
    amplitude_on_off: bool = True
    total_power: float = 9.0

    def __post_init__(self):
        if int(self.phase_bits) != self.phase_bits or self.phase_bits < 1:
            raise ConfigError(f"phase_bits must be a positive integer, got {self.phase_bits}")
        if not self.total_power > 0:
            raise ConfigError(f"total_power must be positive, got {self.total_power}")

    @classmethod
    def default(cls, geom: ArrayGeometry, **kwargs) -> "HardwareProfile":
        """Profile whose total power equals the element count (unit power per element)."""
        kwargs.setdefault("total_power", float(geom.n_antennas))
        return cls(**kwargs)

    @property
    def n_codes(self) -> int:
        return 1 << self.phase_bits


@lru_cache(maxsize=None)
def phasor_table(phase_bits: int) -> np.ndarray:
    """exp(j 2 pi c / 2^b) for every code c; quadrant points are exact."""
    m = 1 << phase_bits
    table = np.exp(2j * np.pi * np.arange(m) / m)
    # cos(pi/2) etc. come out as 6e-17; zero them so discrete nulls cancel exactly
    re, im = table.real.copy(), table.imag.copy()
    re[np.abs(re) < 1e-15] = 0.0
    im[np.abs(im) < 1e-15] = 0.0
    table = re + 1j * im
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class WeightVector:
    """Phase codes and on/off bits; equality ignores the derived power scale."""

    phase_codes: tuple[int, ...]
    on_bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "phase_codes", tuple(int(c) for c in self.phase_codes))
        object.__setattr__(self, "on_bits", tuple(bool(b) for b in self.on_bits))
        if len(self.phase_codes) != len(self.on_bits):
            raise InputDomainError("phase_codes and on_bits must have equal length")
        if not any(self.on_bits):
            raise InfeasibleWeightError("at least one antenna must be on")

    @property
    def n(self) -> int:
        return len(self.phase_codes)

    def scale(self, hw: HardwareProfile) -> float:
        return math.sqrt(hw.total_power / sum(self.on_bits))

    def serialize(self) -> str:
        """Compact text form, e.g. ``codes:0132;on:1101``."""
        sep = "," if any(c >= 10 for c in self.phase_codes) else ""
        codes = sep.join(str(c) for c in self.phase_codes)
        on = "".join("1" if b else "0" for b in self.on_bits)
        return f"codes:{codes};on:{on}"

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        try:
            codes_part, on_part = text.strip().split(";")
            codes_txt = codes_part.split(":", 1)[1]
            on_txt = on_part.split(":", 1)[1]
            codes = codes_txt.split(",") if "," in codes_txt else list(codes_txt)
            return cls(tuple(int(c) for c in codes), tuple(ch == "1" for ch in on_txt))
        except (ValueError, IndexError):
            raise InputDomainError(f"malformed weight vector {text!r}") from None

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.phase_codes, dtype=np.int64), np.array(self.on_bits, dtype=bool)


def _validate(codes: np.ndarray, on: np.ndarray, hw: HardwareProfile) -> None:
    if np.any(codes < 0) or np.any(codes >= hw.n_codes):
        raise InputDomainError(f"phase codes must lie in [0, {hw.n_codes})")
    if not hw.amplitude_on_off and not np.all(on):
        raise InfeasibleWeightError("hardware has no amplitude control; all antennas must be on")


def realize_batch(codes: np.ndarray, on: np.ndarray, hw: HardwareProfile) -> np.ndarray:
    """Realize many weight vectors at once; ``codes``/``on`` have shape (M, N)."""
    codes = np.asarray(codes)
    on = np.asarray(on, dtype=bool)
    n_on = on.sum(axis=-1)
    if np.any(n_on == 0):
        raise InfeasibleWeightError("at least one antenna must be on")
    _validate(codes, on, hw)
    scale = np.sqrt(hw.total_power / n_on)
    return phasor_table(hw.phase_bits)[codes] * on * scale[..., None]


def realize(w: WeightVector, hw: HardwareProfile) -> np.ndarray:
    codes, on = w.arrays()
    return realize_batch(codes[None], on[None], hw)[0]


def los_fraction_batch(
    codes: np.ndarray, on: np.ndarray, geom: ArrayGeometry, theta_star_deg: float, hw: HardwareProfile
) -> np.ndarray:
    """Normalized LOS power for a stack of weight vectors.

    The antenna sum is accumulated in a fixed order so a single vector and the
    same vector inside any batch give bit-identical results.
    """
    weights = realize_batch(codes, on, hw)
    a = steering_vector(geom, theta_star_deg)
    acc = np.zeros(weights.shape[:-1], dtype=complex)
    for m in range(geom.n_antennas):
        acc = acc + a[m] * weights[..., m]
    f = np.abs(acc) ** 2 / (geom.n_antennas * hw.total_power)
    return np.minimum(f, 1.0)


def los_power_fraction(
    w, geom: ArrayGeometry, theta_star_deg: float, hw: HardwareProfile | None = None
) -> float:
    """|a(theta*) W|^2 / (N P_t), in [0, 1].

    ``w`` may be a :class:`WeightVector` (requires ``hw``) or an already
    realized complex vector, in which case P_t is taken as its squared norm.
    """
    if isinstance(w, WeightVector):
        if hw is None:
            raise ConfigError("a HardwareProfile is needed to realize a WeightVector")
        codes, on = w.arrays()
        return float(los_fraction_batch(codes[None], on[None], geom, theta_star_deg, hw)[0])
    vec = np.asarray(w, dtype=complex)
    p_t = float(np.vdot(vec, vec).real)
    a = steering_vector(geom, theta_star_deg)
    return min(float(abs(a @ vec) ** 2 / (geom.n_antennas * p_t)), 1.0)


def quantize_phase(phase: np.ndarray, phase_bits: int) -> np.ndarray:
    """Nearest phase code; exact midpoints go to the lower code."""
    m = 1 << phase_bits
    x = np.mod(phase, 2.0 * np.pi) / (2.0 * np.pi / m)
    return np.mod(np.ceil(x - 0.5), m).astype(np.int64)


def random_weight(
    hw: HardwareProfile, n: int, rng: np.random.Generator, allow_off: bool = False
) -> WeightVector:
    """Uniformly random phase codes; all antennas on unless ``allow_off``."""
    codes = rng.integers(0, hw.n_codes, size=n)
    if allow_off and hw.amplitude_on_off:
        on = rng.random(n) < 0.5
        if not on.any():
            on[rng.integers(0, n)] = True
    else:
        on = np.ones(n, dtype=bool)
    return WeightVector(tuple(codes), tuple(on))


def _null_projection(geom: ArrayGeometry, theta_star_deg: float, rng: np.random.Generator) -> np.ndarray:
    """Random complex vector W with a(theta*) @ W = 0."""
    a = steering_vector(geom, theta_star_deg)
    u = np.conj(a) / math.sqrt(geom.n_antennas)
    while True:
        x = complex_gaussian(rng, geom.n_antennas)
        w = x - u * np.vdot(u, x)
        if np.linalg.norm(w) > _DEGENERATE_NORM:
            return w


def null_weight_ideal(
    geom: ArrayGeometry, theta_star_deg: float, total_power: float, rng: np.random.Generator
) -> np.ndarray:
    """Continuous-valued null toward theta*, scaled to ``total_power``."""
    if geom.n_antennas < 2:
        raise InputDomainError("nulling needs at least two antennas")
    w = _null_projection(geom, theta_star_deg, rng)
    return w * math.sqrt(total_power) / np.linalg.norm(w)


def null_weight_practical(
    geom: ArrayGeometry, theta_star_deg: float, hw: HardwareProfile, rng: np.random.Generator
) -> WeightVector:
    """Null projection snapped onto the hardware grid.

    Phases go to the nearest code. An antenna stays on when its magnitude is
    at least half of the largest magnitude (or always, without amplitude
    control).
    """
    w = _null_projection(geom, theta_star_deg, rng)
    codes = quantize_phase(np.angle(w), hw.phase_bits)
    mag = np.abs(w)
    if hw.amplitude_on_off:
        on = mag >= 0.5 * mag.max()
    else:
        on = np.ones(geom.n_antennas, dtype=bool)
    return WeightVector(tuple(codes), tuple(on))


@lru_cache(maxsize=64)
def directional_codebook(
    geom: ArrayGeometry, hw: HardwareProfile, step_deg: float = 1.0
) -> np.ndarray:
    """Quantized beams steered over [-90, 90] degrees, one per ``step_deg``.

    Each beam has all antennas on and per-antenna phases snapped to the code
    nearest the conjugate steering phase. Shape (n_beams, N), read-only.
    """
    angles = np.arange(-90.0, 90.0 + step_deg / 2, step_deg)
    codes = np.stack(
        [quantize_phase(np.angle(np.conj(steering_vector(geom, float(t)))), hw.phase_bits) for t in angles]
    )
    book = realize_batch(codes, np.ones_like(codes, dtype=bool), hw)
    book.setflags(write=False)
    return book
