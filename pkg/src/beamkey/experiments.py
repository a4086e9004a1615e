"""Experiment grids, Eve-angle sweeps, and their CSV/JSON emitters.

Every session seed is derived from the base seed and the session's
coordinates (scheme, grid indices, session index), never from execution
order, so sequential and multi-process runs write identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentGrid
from .ga_optimizer import GaConfig, evolve
from .key_pipeline import monobit_fraction
from .schemes import Scheme, SessionConfig, run_session, run_session_detail

log = logging.getLogger(__name__)

GRID_COLUMNS = ("scheme", "snr_db", "k_db", "kdr_ab", "kdr_be", "sg", "sg_negative")
EVE_COLUMNS = ("scheme", "offset_deg", "kdr_be")

_GRID_TAG = 0
_EVE_TAG = 1
_SCHEME_INDEX = {s: i for i, s in enumerate(Scheme)}


def derive_seed(base_seed: int, *coords: int) -> int:
    """64-bit seed determined only by ``base_seed`` and integer coordinates."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(c) for c in coords))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class GridResultRow:
    scheme: Scheme
    snr_db: float
    k_db: float
    mean_kdr_ab: float
    mean_kdr_be: float
    mean_sg: float
    n_sessions: int
    se_kdr_ab: float = 0.0
    se_kdr_be: float = 0.0
    se_sg: float = 0.0

    @property
    def sg_negative(self) -> bool:
        return self.mean_sg < 0


@dataclass(frozen=True)
class EveSweepRow:
    scheme: Scheme
    offset_deg: float
    mean_kdr_be: float
    n_sessions: int


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _map(func, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _mean_se(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


def _grid_cell(task) -> GridResultRow:
    cfg, base_seed, snr_idx, k_idx, sessions = task
    reports = []
    for s in range(sessions):
        seed = derive_seed(base_seed, _GRID_TAG, _SCHEME_INDEX[cfg.scheme], snr_idx, k_idx, s)
        reports.append(run_session(replace(cfg, seed=seed)))
    ab, ab_se = _mean_se([r.kdr_ab for r in reports])
    be, be_se = _mean_se([r.kdr_be for r in reports])
    sg, sg_se = _mean_se([r.secrecy_gap for r in reports])
    return GridResultRow(cfg.scheme, cfg.snr_max_db, cfg.k_factor_db, ab, be, sg, sessions, ab_se, be_se, sg_se)


def run_grid(base: SessionConfig, grid: ExperimentGrid, workers: int = 1) -> list[GridResultRow]:
    """Mean KDRs and SG for every (scheme, SNR, K) cell, in that nesting order."""
    tasks = []
    for scheme in grid.schemes:
        for i, snr in enumerate(grid.snr_values_db):
            for j, k in enumerate(grid.k_values_db):
                cfg = replace(base, scheme=scheme, snr_max_db=snr, k_factor_db=k)
                tasks.append((cfg, grid.base_seed, i, j, grid.sessions_per_cell))
    log.info("running %d grid cells x %d sessions", len(tasks), grid.sessions_per_cell)
    return _map(_grid_cell, tasks, workers)


def _eve_point(task) -> EveSweepRow:
    cfg, base_seed, offset, sessions = task
    kdrs = []
    for s in range(sessions):
        # the seed ignores the offset so every offset sees the same Bob channel and beams
        seed = derive_seed(base_seed, _EVE_TAG, _SCHEME_INDEX[cfg.scheme], s)
        kdrs.append(run_session(replace(cfg, seed=seed)).kdr_be)
    return EveSweepRow(cfg.scheme, offset, float(np.mean(kdrs)), sessions)


def run_eve_sweep(
    base: SessionConfig,
    angle_offsets_deg,
    schemes=None,
    sessions: int = 100,
    base_seed: int | None = None,
    workers: int = 1,
) -> list[EveSweepRow]:
    """Mean Bob-Eve KDR with Eve at ``theta* + offset`` for each offset and scheme."""
    schemes = tuple(schemes) if schemes else (base.scheme,)
    base_seed = base.seed if base_seed is None else base_seed
    tasks = []
    for scheme in schemes:
        for offset in angle_offsets_deg:
            angle = base.theta_star_deg + offset
            cfg = replace(base, scheme=scheme, eve_angle_deg=angle)
            tasks.append((cfg, base_seed, float(offset), sessions))
    return _map(_eve_point, tasks, workers)


def grid_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_COLUMNS)
    for r in rows:
        writer.writerow(
            [r.scheme.value, _fmt(r.snr_db), _fmt(r.k_db), _fmt(r.mean_kdr_ab),
             _fmt(r.mean_kdr_be), _fmt(r.mean_sg), "true" if r.sg_negative else "false"]
        )
    return buf.getvalue()


def eve_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVE_COLUMNS)
    for r in rows:
        writer.writerow([r.scheme.value, _fmt(r.offset_deg), _fmt(r.mean_kdr_be)])
    return buf.getvalue()


def read_grid_csv(path) -> list[GridResultRow]:
    with open(path, newline="") as fh:
        return [
            GridResultRow(
                Scheme.parse(d["scheme"]), float(d["snr_db"]), float(d["k_db"]),
                float(d["kdr_ab"]), float(d["kdr_be"]), float(d["sg"]), 0,
            )
            for d in csv.DictReader(fh)
        ]


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file; nothing is left behind on failure."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def config_echo(cfg: SessionConfig) -> dict:
    """JSON-friendly view of a session config."""

    def clean(value):
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, Scheme):
            return value.value
        if isinstance(value, float) and not np.isfinite(value):
            return str(value)
        return value

    return clean(asdict(cfg))


def keygen_record(cfg: SessionConfig) -> dict:
    """One full-fidelity session rendered as the keygen JSON record."""
    result = run_session_detail(cfg)
    record = {
        "scheme": cfg.scheme.value,
        "config": config_echo(cfg),
        "alice_key_hex": result.alice_key.hex(),
        "bob_key_hex": result.bob_key.hex(),
        "kdr_ab": result.report.kdr_ab,
        "kdr_be": result.report.kdr_be,
        "sg": result.report.secrecy_gap,
        "monobit_fraction": monobit_fraction(result.alice_key),
    }
    if result.thresholds is not None:
        record["alpha_l"] = result.thresholds.alpha_l
        record["alpha_u"] = result.thresholds.alpha_u
    return record


def keygen_json(cfg: SessionConfig) -> str:
    return json.dumps(keygen_record(cfg), indent=2, sort_keys=True) + "\n"


def ga_dump(cfg: SessionConfig, ga: GaConfig | None = None) -> str:
    ga = ga or cfg.ga
    archive = evolve(cfg.geom, cfg.theta_star_deg, cfg.hw, ga, np.random.default_rng(cfg.ga_seed))
    return archive.dumps()
