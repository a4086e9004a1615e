"""Genetic search over discrete weight vectors that minimizes LOS power.

Every unique individual evaluated during the run is kept in a
:class:`BeamArchive`, so the archive spans the whole range of suppression
levels visited on the way to the optimum, not just the final population.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .array_channel import ArrayGeometry
from .beam_weights import HardwareProfile, WeightVector, los_fraction_batch
from .errors import ConfigError, InputDomainError

log = logging.getLogger(__name__)

_IMPROVEMENT_EPS = 1e-6


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    max_generations: int = 100
    tournament_size: int = 3
    crossover_prob: float = 0.5
    mutation_rate: float | None = None  # None -> 1/N
    elite_count: int = 2
    stall_generations: int = 20
    init_on_prob: float = 0.5

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        if self.max_generations < 1 or self.stall_generations < 1:
            raise ConfigError("max_generations and stall_generations must be positive")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigError("tournament_size must lie in [1, population_size]")
        if not 0 <= self.elite_count < self.population_size:
            raise ConfigError("elite_count must lie in [0, population_size)")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError("crossover_prob must lie in [0, 1]")
        if not 0.0 < self.init_on_prob <= 1.0:
            raise ConfigError("init_on_prob must lie in (0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")

    def rate_for(self, n_antennas: int) -> float:
        return 1.0 / n_antennas if self.mutation_rate is None else self.mutation_rate


class BeamArchive:
    """Unique weight vectors with their objective values, in insertion order."""

    def __init__(self, hw: HardwareProfile):
        self.hw = hw
        self._index: dict[bytes, int] = {}
        self._codes: list[np.ndarray] = []
        self._on: list[np.ndarray] = []
        self._f: list[float] = []
        self._frozen = None
        # best archived f after the initial population and after each generation
        self.history: list[float] = []

    @staticmethod
    def _key(codes: np.ndarray, on: np.ndarray) -> bytes:
        return np.ascontiguousarray(codes, dtype=np.int64).tobytes() + np.packbits(on).tobytes()

    def add_batch(self, codes: np.ndarray, on: np.ndarray, f: np.ndarray) -> int:
        """Insert rows not seen before; returns how many were new."""
        added = 0
        for c, o, v in zip(codes, on, f):
            key = self._key(c, o)
            if key in self._index:
                continue
            self._index[key] = len(self._f)
            self._codes.append(c.copy())
            self._on.append(o.copy())
            self._f.append(float(v))
            added += 1
        if added:
            self._frozen = None
        return added

    def __len__(self) -> int:
        return len(self._f)

    def __contains__(self, w: WeightVector) -> bool:
        codes, on = w.arrays()
        return self._key(codes, on) in self._index

    def __iter__(self) -> Iterator[tuple[WeightVector, float]]:
        for c, o, v in zip(self._codes, self._on, self._f):
            yield WeightVector(tuple(c), tuple(o)), v

    def _arrays(self):
        if self._frozen is None:
            n = len(self._codes[0]) if self._codes else 0
            codes = np.array(self._codes, dtype=np.int64).reshape(-1, n)
            on = np.array(self._on, dtype=bool).reshape(-1, n)
            f = np.array(self._f, dtype=float)
            for arr in (codes, on, f):
                arr.setflags(write=False)
            self._frozen = (codes, on, f)
        return self._frozen

    @property
    def codes(self) -> np.ndarray:
        return self._arrays()[0]

    @property
    def on_bits(self) -> np.ndarray:
        return self._arrays()[1]

    @property
    def f_values(self) -> np.ndarray:
        return self._arrays()[2]

    def min_f(self) -> float:
        return min(self._f)

    def best(self) -> WeightVector:
        i = int(np.argmin(self.f_values))
        return WeightVector(tuple(self._codes[i]), tuple(self._on[i]))

    def sorted_entries(self) -> list[tuple[WeightVector, float]]:
        """Entries ascending by f, ties broken by serialized form."""
        entries = [(w, f, w.serialize()) for w, f in self]
        entries.sort(key=lambda e: (e[1], e[2]))
        return [(w, f) for w, f, _ in entries]

    def dumps(self) -> str:
        """One ``f<TAB>codes:...;on:...`` line per entry, ascending by f."""
        return "".join(f"{f!r}\t{w.serialize()}\n" for w, f in self.sorted_entries())

    @classmethod
    def from_entries(cls, entries, geom: ArrayGeometry, theta_star_deg: float, hw: HardwareProfile):
        """Build an archive from weight vectors, computing f for each."""
        archive = cls(hw)
        vectors = [w for w in entries]
        if not vectors:
            return archive
        codes = np.array([w.phase_codes for w in vectors], dtype=np.int64)
        on = np.array([w.on_bits for w in vectors], dtype=bool)
        archive.add_batch(codes, on, los_fraction_batch(codes, on, geom, theta_star_deg, hw))
        return archive


def _repair_all_off(on: np.ndarray, rng: np.random.Generator) -> None:
    dead = np.flatnonzero(~on.any(axis=1))
    if dead.size:
        on[dead, rng.integers(0, on.shape[1], size=dead.size)] = True


def _random_population(size: int, n: int, hw: HardwareProfile, on_prob: float, rng: np.random.Generator):
    codes = rng.integers(0, hw.n_codes, size=(size, n))
    if hw.amplitude_on_off:
        on = rng.random((size, n)) < on_prob
        _repair_all_off(on, rng)
    else:
        on = np.ones((size, n), dtype=bool)
    return codes, on


def _tournament(f: np.ndarray, count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    entrants = rng.integers(0, len(f), size=(count, size))
    # lowest f wins; argmin picks the first entrant on ties
    return entrants[np.arange(count), np.argmin(f[entrants], axis=1)]


def evolve(
    geom: ArrayGeometry,
    theta_star_deg: float,
    hw: HardwareProfile,
    cfg: GaConfig,
    rng: np.random.Generator,
) -> BeamArchive:
    """Run the GA and return the archive of every unique evaluated vector."""
    n = geom.n_antennas
    rate = cfg.rate_for(n)
    archive = BeamArchive(hw)

    def fitness(codes, on):
        return los_fraction_batch(codes, on, geom, theta_star_deg, hw)

    codes, on = _random_population(cfg.population_size, n, hw, cfg.init_on_prob, rng)
    f = fitness(codes, on)
    archive.add_batch(codes, on, f)
    archive.history.append(archive.min_f())
    best = float(f.min())
    stall = 0
    n_children = cfg.population_size - cfg.elite_count

    for gen in range(1, cfg.max_generations + 1):
        elite = np.argsort(f, kind="stable")[: cfg.elite_count]

        n_pairs = (n_children + 1) // 2
        pa = _tournament(f, n_pairs, cfg.tournament_size, rng)
        pb = _tournament(f, n_pairs, cfg.tournament_size, rng)
        do_cross = rng.random(n_pairs) < cfg.crossover_prob
        swap = (rng.random((n_pairs, n)) < 0.5) & do_cross[:, None]
        c1 = np.where(swap, codes[pb], codes[pa])
        c2 = np.where(swap, codes[pa], codes[pb])
        o1 = np.where(swap, on[pb], on[pa])
        o2 = np.where(swap, on[pa], on[pb])
        child_codes = np.concatenate([c1, c2])[:n_children]
        child_on = np.concatenate([o1, o2])[:n_children]

        resample = rng.random(child_codes.shape) < rate
        child_codes = np.where(resample, rng.integers(0, hw.n_codes, size=child_codes.shape), child_codes)
        if hw.amplitude_on_off:
            flip = rng.random(child_on.shape) < rate
            child_on = child_on ^ flip
            _repair_all_off(child_on, rng)

        child_f = fitness(child_codes, child_on)
        archive.add_batch(child_codes, child_on, child_f)
        archive.history.append(archive.min_f())

        codes = np.concatenate([codes[elite], child_codes])
        on = np.concatenate([on[elite], child_on])
        f = np.concatenate([f[elite], child_f])

        gen_best = float(f.min())
        if gen_best < best - _IMPROVEMENT_EPS:
            best = gen_best
            stall = 0
        else:
            best = min(best, gen_best)
            stall += 1
        if stall >= cfg.stall_generations:
            log.debug("GA stalled after %d generations (best f=%.3g)", gen, best)
            break

    return archive


def select_subset(archive: BeamArchive, alpha_l: float, alpha_u: float) -> list[WeightVector]:
    """Archive members with alpha_l <= f <= alpha_u, ordered by (f, serialized form)."""
    if not 0.0 <= alpha_l <= alpha_u <= 1.0:
        raise InputDomainError(f"need 0 <= alpha_l <= alpha_u <= 1, got ({alpha_l}, {alpha_u})")
    return [w for w, f in archive.sorted_entries() if alpha_l <= f <= alpha_u]


def subset_mask(archive: BeamArchive, alpha_l: float, alpha_u: float) -> np.ndarray:
    """Boolean mask over archive rows for the threshold interval."""
    if not 0.0 <= alpha_l <= alpha_u <= 1.0:
        raise InputDomainError(f"need 0 <= alpha_l <= alpha_u <= 1, got ({alpha_l}, {alpha_u})")
    f = archive.f_values
    return (f >= alpha_l) & (f <= alpha_u)
