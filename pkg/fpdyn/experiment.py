"""
Simulation runs: game construction, seed splitting and parallel batches.

One master seed expands to independent per-run streams with numpy's
``SeedSequence``: the matrix stream is ``spawn_key=(run_index, 0)`` and the
tie-breaking stream ``(run_index, 1)``. Trace headers record the tie seed that
was used together with ``master=`` and ``run=``, so the split can be redone.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel

from .analysis import gap_series, write_gap_csv
from .config import Config
from .data_types import (
    DynamicState,
    ExperimentConfig,
    GameKind,
    GameSpec,
    GapSeries,
    PayoffMatrix,
    PolicyKind,
    SampleGrid,
    SampleMode,
    Trace,
)
from .engine import run
from .exceptions import ConfigError
from .tie_breaking import policy_from_spec
from .trace_io import write_trace

logger = logging.getLogger(__name__)


class SimulationResult(BaseModel):
    """Everything one run produced; the config carries the seeds actually used."""

    config: ExperimentConfig
    matrix: PayoffMatrix
    trace: Trace
    final_state: DynamicState
    series: GapSeries


def _stream_seed(master: int, *spawn_key: int) -> int:
    state = np.random.SeedSequence(master, spawn_key=spawn_key).generate_state(1, np.uint64)
    return int(state[0])


def derive_seeds(master: int, run_index: int) -> tuple[int, int]:
    """(matrix seed, tie-breaking seed) for one run of a batch."""
    return _stream_seed(master, run_index, 0), _stream_seed(master, run_index, 1)


def build_matrix(game: GameSpec) -> PayoffMatrix:
    """I_n, or an m x n game with i.i.d. uniform[0, 1] double entries from ``game.seed``."""
    if game.kind == GameKind.IDENTITY:
        return PayoffMatrix.identity(game.n)
    if game.seed is None:
        raise ConfigError("game.seed", "uniform random games need a seed")
    rng = np.random.default_rng(game.seed)
    values = rng.random((game.m, game.n))
    return PayoffMatrix(entries=tuple(tuple(float(a) for a in row) for row in values))


def apply_master_seed(config: ExperimentConfig, master: int) -> ExperimentConfig:
    """Replace the game and policy seeds of ``config`` by streams split from ``master``."""
    matrix_seed, tie_seed = derive_seeds(master, config.run_index)
    game = config.game
    if game.kind == GameKind.UNIFORM:
        game = game.model_copy(update={"seed": matrix_seed})
    policy = config.policy
    if policy.kind == PolicyKind.SEEDED_RANDOM:
        policy = policy.model_copy(update={"seed": tie_seed})
    return config.model_copy(update={"game": game, "policy": policy})


def simulate(config: ExperimentConfig, master_seed: int | None = None, progress: bool = False) -> SimulationResult:
    """Run one configuration and write its trace and gap CSV when paths are set.

    ``FPDYN_SEED`` (or ``master_seed``) replaces the configured seeds with split streams.
    """
    master = Config.resolve_seed(master_seed)
    if master is not None:
        config = apply_master_seed(config, master)

    matrix = build_matrix(config.game)
    policy = policy_from_spec(config.policy)
    trace, final_state = run(matrix, policy, config.steps, progress=progress)
    if master is not None:
        header = trace.header.model_copy(update={"master_seed": master, "run_index": config.run_index})
        trace = trace.model_copy(update={"header": header})

    grid = SampleGrid(mode=SampleMode.GEOMETRIC, ratio=config.grid_ratio)
    series = gap_series(matrix, trace, grid) if config.steps > 0 else GapSeries()

    if config.trace_out:
        write_trace(trace, config.trace_out)
    if config.csv_out:
        write_gap_csv(series, config.csv_out)
    if series.samples:
        logger.info(
            "Run %s (%s, %s steps): final normalized gap %.6g",
            config.run_index, policy.name, config.steps, series.samples[-1].normalized_float,
        )
    return SimulationResult(config=config, matrix=matrix, trace=trace, final_state=final_state, series=series)


def _run_path(path: str | None, run_index: int) -> str | None:
    if path is None:
        return None
    root, ext = os.path.splitext(path)
    return f"{root}-run{run_index}{ext}"


def batch_configs(config: ExperimentConfig, runs: int) -> list[ExperimentConfig]:
    """``runs`` copies of ``config`` with consecutive run indices and per-run output paths."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if runs == 1:
        return [config]
    return [
        config.model_copy(
            update={
                "run_index": config.run_index + k,
                "trace_out": _run_path(config.trace_out, config.run_index + k),
                "csv_out": _run_path(config.csv_out, config.run_index + k),
            }
        )
        for k in range(runs)
    ]


def _simulate_job(job: tuple[ExperimentConfig, int | None]) -> SimulationResult:
    config, master = job
    return simulate(config, master_seed=master)


def run_batch(
    config: ExperimentConfig,
    runs: int,
    jobs: int = 1,
    master_seed: int | None = None,
) -> list[SimulationResult]:
    """Independent runs split from one master seed; results come back in run order."""
    master = Config.resolve_seed(master_seed)
    if runs > 1 and master is None and config.policy.kind == PolicyKind.SEEDED_RANDOM:
        logger.warning("No master seed for a %s-run batch; every run reuses the configured seeds", runs)
    work = [(run_config, master) for run_config in batch_configs(config, runs)]
    worker_count = max(1, min(jobs, Config.MAX_JOBS, len(work)))
    if worker_count == 1:
        return [_simulate_job(job) for job in work]
    with ProcessPoolExecutor(max_workers=worker_count) as executor:
        return list(executor.map(_simulate_job, work))
