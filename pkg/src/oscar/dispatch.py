"""Parallel sample collection on a virtual clock, with soft timeouts and eager reconstruction.

Latency only decides *when* (and whether, under a timeout) a job finishes;
a completed job's value is always the evaluator's value for its index.
"""

from __future__ import annotations

import heapq
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cs import MeasurementSet, SolverConfig, reconstruct
from .errors import InvalidInputError
from .landscape import GridSpec, Landscape, index_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatencyModel:
    """Per-job latency ``base + tail_scale * LogNormal(mu, sigma)`` seconds."""

    base: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    tail_scale: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.base < 0 or self.tail_scale < 0 or self.sigma < 0:
            raise InvalidInputError("latency parameters must be non-negative")

    def sample(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return self.base + self.tail_scale * rng.lognormal(self.mu, self.sigma, size=n)

    def to_dict(self) -> dict:
        return {"base": self.base, "mu": self.mu, "sigma": self.sigma, "tail_scale": self.tail_scale, "seed": self.seed}


@dataclass(frozen=True)
class Schedule:
    worker: np.ndarray
    start: np.ndarray
    finish: np.ndarray


def schedule(latencies: Sequence[float], k_workers: int) -> Schedule:
    """Greedy list scheduling: each job, in order, goes to the earliest-free worker (lowest id on ties)."""
    if k_workers < 1:
        raise InvalidInputError("need at least one worker")
    lat = np.asarray(latencies, dtype=float)
    free = [(0.0, w) for w in range(k_workers)]
    heapq.heapify(free)
    worker = np.empty(lat.size, dtype=np.int64)
    start = np.empty(lat.size)
    for j, d in enumerate(lat):
        t, w = heapq.heappop(free)
        worker[j], start[j] = w, t
        heapq.heappush(free, (t + d, w))
    return Schedule(worker, start, start + lat)


@dataclass
class DispatchReport:
    completed: MeasurementSet
    timed_out_indices: np.ndarray
    failed_indices: np.ndarray
    wall_time: float
    per_worker_counts: list[int]
    requested: int
    errors: dict = field(default_factory=dict)

    @property
    def omitted_fraction(self) -> float:
        return 1.0 - len(self.completed) / self.requested

    def to_dict(self) -> dict:
        return {
            "requested": self.requested,
            "completed": len(self.completed),
            "timed_out": int(self.timed_out_indices.size),
            "failed": int(self.failed_indices.size),
            "wall_time": self.wall_time,
            "per_worker_counts": self.per_worker_counts,
            "completed_indices": self.completed.indices.tolist(),
            "timed_out_indices": self.timed_out_indices.tolist(),
            "failed_indices": self.failed_indices.tolist(),
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def dispatch(
    indices: Sequence[int],
    evaluator: Callable[[int], float],
    grid_shape: tuple[int, ...],
    k_workers: int = 1,
    latency: LatencyModel = LatencyModel(),
    soft_timeout: float | None = None,
    threads: int = 1,
) -> DispatchReport:
    """Run one job per grid index across ``k_workers`` simulated devices.

    Jobs whose virtual finish time exceeds ``soft_timeout`` are reported as
    timed out and never evaluated. Evaluator exceptions mark the job failed.
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InvalidInputError("no jobs to dispatch")
    if np.unique(idx).size != idx.size:
        raise InvalidInputError("duplicate job indices")
    sched = schedule(latency.sample(idx.size), k_workers)
    on_time = np.ones(idx.size, bool) if soft_timeout is None else sched.finish <= soft_timeout
    run_jobs = np.flatnonzero(on_time)

    def job(j):
        try:
            return j, float(evaluator(int(idx[j]))), None
        except Exception as exc:  # noqa: BLE001 - any evaluator failure is recorded per job
            return j, None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, run_jobs))
    else:
        results = [job(j) for j in run_jobs]

    done_idx, done_val, failed, errors = [], [], [], {}
    counts = [0] * k_workers
    for j, val, err in results:
        if err is not None:
            failed.append(int(idx[j]))
            errors[str(int(idx[j]))] = err
            logger.warning("job for index %d failed: %s", idx[j], err)
            continue
        done_idx.append(int(idx[j]))
        done_val.append(val)
        counts[int(sched.worker[j])] += 1

    timed_out = np.sort(idx[~on_time])
    if soft_timeout is not None and timed_out.size:
        wall = float(soft_timeout)
    else:
        wall = float(sched.finish.max())
    completed = MeasurementSet.from_unsorted(done_idx, done_val, grid_shape)
    return DispatchReport(completed, timed_out, np.sort(np.array(failed, dtype=np.int64)), wall, counts, int(idx.size), errors)


def eager_reconstruct(report: DispatchReport, config: SolverConfig | None = None, spec: GridSpec | None = None) -> Landscape:
    """Reconstruct from whatever finished before the soft timeout."""
    if len(report.completed) == 0:
        raise InvalidInputError("no completed samples to reconstruct from")
    res = reconstruct(report.completed, config)
    spec = spec or index_grid(report.completed.grid_shape)
    meta = {
        "reconstruction": {
            "samples": len(report.completed),
            "requested": report.requested,
            "omitted_fraction": report.omitted_fraction,
            "residual": res.residual,
            "converged": res.converged,
            "iterations": res.iterations,
        }
    }
    return Landscape(spec, res.grid, meta)
