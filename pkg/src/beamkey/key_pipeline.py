"""Differential-phase key extraction and key-disagreement metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputDomainError, UndefinedPhaseError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class KeyParams:
    slots: int = 65
    bits_per_slot: int = 2
    target_key_bits: int = 128

    def __post_init__(self):
        for name in ("slots", "bits_per_slot", "target_key_bits"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        if self.key_length < self.target_key_bits:
            raise ConfigError(
                f"(slots - 1) * bits_per_slot = {self.key_length} is shorter than "
                f"target_key_bits = {self.target_key_bits}"
            )

    @property
    def key_length(self) -> int:
        return (self.slots - 1) * self.bits_per_slot


@dataclass(frozen=True, eq=False)
class KeyBits:
    bits: np.ndarray
    params: KeyParams

    def __post_init__(self):
        if self.bits.shape != (self.params.key_length,):
            raise InputDomainError(
                f"expected {self.params.key_length} bits, got shape {self.bits.shape}"
            )
        self.bits.setflags(write=False)

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, KeyBits):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.bits, other.bits)

    def hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()


@dataclass(frozen=True)
class KdrReport:
    kdr_ab: float
    kdr_be: float
    secrecy_gap: float


def gray_code(index: np.ndarray) -> np.ndarray:
    return index ^ (index >> 1)


def extract_bits(samples: np.ndarray, bits_per_slot: int) -> np.ndarray:
    """Key bits for a stack of sample sequences.

    ``samples`` has shape (..., T); the result has shape (..., (T-1)*b), with
    each slot's Gray label written most-significant bit first.
    """
    samples = np.asarray(samples)
    if np.any(samples == 0):
        raise UndefinedPhaseError("received sample with zero magnitude")
    n_sectors = 1 << bits_per_slot
    dphi = np.mod(np.angle(samples[..., 1:] * np.conj(samples[..., :-1])), TWO_PI)
    sector = np.floor(dphi / (TWO_PI / n_sectors)).astype(np.int64)
    # mod can round up to exactly 2 pi
    sector = np.minimum(sector, n_sectors - 1)
    labels = gray_code(sector)
    shifts = np.arange(bits_per_slot - 1, -1, -1)
    bits = (labels[..., None] >> shifts) & 1
    return bits.reshape(*labels.shape[:-1], -1).astype(np.uint8)


def extract_key(samples, params: KeyParams) -> KeyBits:
    """Quantize consecutive phase differences of ``samples`` into key bits."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (params.slots,):
        raise InputDomainError(f"expected {params.slots} samples, got shape {samples.shape}")
    return KeyBits(extract_bits(samples, params.bits_per_slot), params)


def kdr(a, b) -> float:
    """Fraction of positions where two keys disagree."""
    bits_a = a.bits if isinstance(a, KeyBits) else np.asarray(a)
    bits_b = b.bits if isinstance(b, KeyBits) else np.asarray(b)
    if bits_a.shape != bits_b.shape:
        raise InputDomainError(f"key lengths differ: {bits_a.shape} vs {bits_b.shape}")
    if bits_a.size == 0:
        raise InputDomainError("empty keys")
    return float(np.count_nonzero(bits_a != bits_b)) / bits_a.size


def kdr_rows(reference: np.ndarray, others: np.ndarray) -> np.ndarray:
    """KDR of every row of ``others`` against ``reference`` (broadcast)."""
    return np.mean(reference != others, axis=-1)


def secrecy_gap(kdr_ab: float, kdr_be: float) -> float:
    return min(kdr_be, 1.0 - kdr_be) - kdr_ab


def make_report(kdr_ab: float, kdr_be: float) -> KdrReport:
    for name, value in (("kdr_ab", kdr_ab), ("kdr_be", kdr_be)):
        if not 0.0 <= value <= 1.0:
            raise InputDomainError(f"{name} must lie in [0, 1], got {value}")
    return KdrReport(kdr_ab, kdr_be, secrecy_gap(kdr_ab, kdr_be))


def monobit_fraction(key: KeyBits) -> float:
    return float(np.mean(key.bits))
