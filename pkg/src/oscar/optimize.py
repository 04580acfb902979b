"""Spline surrogates of gridded landscapes, optimizers, and landscape-based initialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .cs import MeasurementSet, SolverConfig, reconstruct
from .errors import InvalidInputError, NonFiniteObjectiveError
from .landscape import GridSpec, Landscape, sample_uniform
from .sim.circuits import AnsatzConfig, build_circuit
from .sim.problems import ProblemInstance
from .sim.simulate import evaluate_circuit
from .sim.statevector import IDEAL, NoiseModel


class Interpolator:
    """Natural bicubic spline through a 2-D landscape.

    Stored as a patch table ``coeffs[b, j, a, i]``: on cell ``(i, j)`` the
    surface is ``sum_ab coeffs[b, j, a, i] * dx**(3-a) * dy**(3-b)`` with
    ``dx, dy`` measured from the cell's lower corner. Queries outside the
    grid rectangle are clamped onto it.
    """

    def __init__(self, landscape: Landscape):
        spec = landscape.spec
        if spec.ndim != 2:
            raise InvalidInputError("interpolation needs a 2-D landscape")
        if min(spec.shape) < 4:
            raise InvalidInputError(f"each axis needs at least 4 points, got {spec.shape}")
        self.source = landscape
        self.x, self.y = spec.axes()
        along_x = CubicSpline(self.x, landscape.values, axis=0, bc_type="natural").c
        # along_x: (4, nx-1, ny); spline each coefficient along y
        self.coeffs = CubicSpline(self.y, np.moveaxis(along_x, 2, 0), axis=0, bc_type="natural").c
        self.lower = spec.lower()
        self.upper = spec.upper()

    def __call__(self, point) -> float:
        return float(self.evaluate(np.asarray(point, dtype=float)[None, :])[0])

    def evaluate(self, points) -> np.ndarray:
        pts = np.clip(np.atleast_2d(np.asarray(points, dtype=float)), self.lower, self.upper)
        i = np.clip(np.searchsorted(self.x, pts[:, 0], side="right") - 1, 0, self.x.size - 2)
        j = np.clip(np.searchsorted(self.y, pts[:, 1], side="right") - 1, 0, self.y.size - 2)
        dx = pts[:, 0] - self.x[i]
        dy = pts[:, 1] - self.y[j]
        px = np.stack([dx**3, dx**2, dx, np.ones_like(dx)], axis=1)
        py = np.stack([dy**3, dy**2, dy, np.ones_like(dy)], axis=1)
        patch = self.coeffs[:, j, :, i]  # (n, 4b, 4a)
        return np.einsum("nba,na,nb->n", patch, px, py)


def interp_build(landscape: Landscape) -> Interpolator:
    return Interpolator(landscape)


@dataclass
class OptimizerRun:
    path: list[np.ndarray]
    values: list[float]
    query_count: int
    converged: bool
    evaluations: int = 0
    optimizer: str = ""

    @property
    def endpoint(self) -> np.ndarray:
        return self.path[-1]

    @property
    def final_value(self) -> float:
        return self.values[-1]

    def to_dict(self) -> dict:
        return {
            "optimizer": self.optimizer,
            "path": [p.tolist() for p in self.path],
            "values": list(self.values),
            "query_count": self.query_count,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "endpoint": self.endpoint.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Counted:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        v = float(self.fn(x))
        if not np.isfinite(v):
            raise NonFiniteObjectiveError(f"objective returned {v} at {np.asarray(x).tolist()}")
        return v


def _qpu_backed(objective) -> bool:
    return bool(getattr(objective, "qpu_backed", False))


class SurrogateObjective:
    """Negated interpolated cost; costs no circuit executions."""

    qpu_backed = False

    def __init__(self, interpolator: Interpolator, sign: float = -1.0):
        self.interpolator = interpolator
        self.sign = sign

    def __call__(self, x):
        return self.sign * self.interpolator(x)


class CircuitObjective:
    """Negated simulated cost; every call is one circuit execution."""

    qpu_backed = True

    def __init__(self, problem: ProblemInstance, ansatz: AnsatzConfig, noise: NoiseModel = IDEAL, seed=None, sign: float = -1.0):
        self.problem = problem
        self.circuit = build_circuit(problem, ansatz)
        self.noise = noise
        self.seed = seed
        self.sign = sign

    def __call__(self, x):
        x = np.asarray(x, dtype=float)[None, :]
        return self.sign * evaluate_circuit(self.problem, self.circuit, x, self.noise, self.seed)[0]


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    h: float | tuple[float, ...] = 1e-3
    max_iters: int = 1000
    tol: float = 1e-6
    bounds: tuple[tuple[float, ...], tuple[float, ...]] | None = None


def _project(x, bounds):
    if bounds is None:
        return x
    return np.clip(x, bounds[0], bounds[1])


def adam(objective: Callable, init, config: AdamConfig = AdamConfig()) -> OptimizerRun:
    """ADAM on central finite-difference gradients.

    One iteration costs ``2 * dim`` gradient probes plus one evaluation of
    the new iterate; the run stops once successive values differ by less
    than ``tol``.
    """
    f = _Counted(objective)
    x = _project(np.asarray(init, dtype=float).copy(), config.bounds)
    h = np.broadcast_to(np.asarray(config.h, dtype=float), x.shape)
    fx = f(x)
    path, values = [x.copy()], [fx]
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    converged = False
    eye = np.eye(x.size)
    for t in range(1, config.max_iters + 1):
        grad = np.array([(f(x + h[k] * eye[k]) - f(x - h[k] * eye[k])) / (2 * h[k]) for k in range(x.size)])
        m = config.beta1 * m + (1 - config.beta1) * grad
        v = config.beta2 * v + (1 - config.beta2) * grad**2
        mhat = m / (1 - config.beta1**t)
        vhat = v / (1 - config.beta2**t)
        x = _project(x - config.lr * mhat / (np.sqrt(vhat) + config.eps), config.bounds)
        fnew = f(x)
        path.append(x.copy())
        values.append(fnew)
        if abs(fnew - fx) < config.tol:
            converged = True
            break
        fx = fnew
    queries = f.calls if _qpu_backed(objective) else 0
    return OptimizerRun(path, values, queries, converged, f.calls, "adam")


@dataclass(frozen=True)
class NelderMeadConfig:
    """Reflection, expansion, contraction and shrink coefficients are fixed at 1, 2, 0.5, 0.5."""

    initial_step: float | tuple[float, ...] = 0.05
    initial_simplex: tuple[tuple[float, ...], ...] | None = None
    xatol: float = 1e-4
    fatol: float = 1e-4
    max_iters: int = 500
    bounds: tuple[tuple[float, ...], tuple[float, ...]] | None = None


ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5


def nelder_mead(objective: Callable, init, config: NelderMeadConfig = NelderMeadConfig()) -> OptimizerRun:
    f = _Counted(objective)
    x0 = np.asarray(init, dtype=float)
    d = x0.size
    if config.initial_simplex is not None:
        simplex = np.asarray(config.initial_simplex, dtype=float)
        if simplex.shape != (d + 1, d):
            raise InvalidInputError(f"initial simplex must have shape {(d + 1, d)}")
    else:
        step = np.broadcast_to(np.asarray(config.initial_step, dtype=float), (d,))
        simplex = np.vstack([x0, x0 + np.diag(step)])
    simplex = np.array([_project(p, config.bounds) for p in simplex])
    edges = simplex[1:] - simplex[0]
    if np.linalg.matrix_rank(edges, tol=1e-12 * max(1.0, np.abs(simplex).max())) < d:
        raise InvalidInputError("initial simplex is degenerate (vertices do not span the space)")

    fs = np.array([f(p) for p in simplex])
    order = np.argsort(fs, kind="stable")
    simplex, fs = simplex[order], fs[order]
    path, values = [simplex[0].copy()], [float(fs[0])]
    converged = False
    for _ in range(config.max_iters):
        if (np.max(np.abs(simplex[1:] - simplex[0])) <= config.xatol
                and np.max(np.abs(fs[1:] - fs[0])) <= config.fatol):
            converged = True
            break
        centroid = simplex[:-1].mean(axis=0)
        xr = _project(centroid + ALPHA * (centroid - simplex[-1]), config.bounds)
        fr = f(xr)
        if fr < fs[0]:
            xe = _project(centroid + GAMMA * (xr - centroid), config.bounds)
            fe = f(xe)
            simplex[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            simplex[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = _project(centroid + RHO * (xr - centroid), config.bounds)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = _project(centroid + RHO * (simplex[-1] - centroid), config.bounds)
                fc = f(xc)
                accept = fc < fs[-1]
            if accept:
                simplex[-1], fs[-1] = xc, fc
            else:
                for k in range(1, d + 1):
                    simplex[k] = simplex[0] + SIGMA * (simplex[k] - simplex[0])
                    fs[k] = f(simplex[k])
        order = np.argsort(fs, kind="stable")
        simplex, fs = simplex[order], fs[order]
        path.append(simplex[0].copy())
        values.append(float(fs[0]))
    queries = f.calls if _qpu_backed(objective) else 0
    return OptimizerRun(path, values, queries, converged, f.calls, "nelder-mead")


OPTIMIZERS = {"adam": adam, "nelder-mead": nelder_mead}


def endpoint_distance(a: OptimizerRun, b: OptimizerRun) -> float:
    ea, eb = np.asarray(a.endpoint), np.asarray(b.endpoint)
    if ea.shape != eb.shape:
        raise InvalidInputError(f"endpoint dimensions differ: {ea.shape} vs {eb.shape}")
    return float(np.linalg.norm(ea - eb))


def quartile_summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return {"min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4], "n": int(v.size)}


def default_config(optimizer: str, spec: GridSpec, **overrides):
    """Optimizer config tied to a grid: finite-difference step of half a cell, box bounds."""
    bounds = (tuple(spec.lower()), tuple(spec.upper()))
    if optimizer == "adam":
        return AdamConfig(**{"h": tuple(spec.spacing() / 2), "bounds": bounds, **overrides})
    if optimizer == "nelder-mead":
        return NelderMeadConfig(**{"initial_step": tuple(spec.spacing() * 2), "bounds": bounds, **overrides})
    raise InvalidInputError(f"unknown optimizer {optimizer!r}")


def random_point(spec: GridSpec, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(spec.lower(), spec.upper())


@dataclass
class InitResult:
    init_point: np.ndarray
    recon_queries: int
    surrogate_run: OptimizerRun
    live_run: OptimizerRun
    reconstruction: Landscape = field(repr=False)

    @property
    def opt_queries(self) -> int:
        return self.live_run.query_count

    @property
    def total_queries(self) -> int:
        return self.opt_queries + self.recon_queries

    def to_dict(self) -> dict:
        return {
            "init_point": self.init_point.tolist(),
            "queries": {"opt": self.opt_queries, "recon": self.recon_queries, "opt+recon": self.total_queries},
            "surrogate_run": self.surrogate_run.to_dict(),
            "live_run": self.live_run.to_dict(),
        }


def reconstruct_from_circuit(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel,
    fraction: float,
    seed=None,
    solver: SolverConfig | None = None,
) -> tuple[Landscape, int]:
    """Evaluate the circuit on a random fraction of the grid and reconstruct; returns (landscape, queries)."""
    from .landscape import grid_points

    idx = sample_uniform(spec, fraction, seed)
    pts = grid_points(spec)[idx]
    vals = evaluate_circuit(problem, build_circuit(problem, ansatz), pts, noise, seed)
    res = reconstruct(MeasurementSet(idx, vals, spec.shape), solver)
    meta = {
        "problem": problem.to_dict(),
        "ansatz": ansatz.to_dict(),
        "noise": noise.to_dict(),
        "seed": seed,
        "reconstruction": {"fraction": fraction, "samples": int(idx.size), "converged": res.converged},
    }
    return Landscape(spec, res.grid, meta), int(idx.size)


def surrogate_minimum(landscape: Landscape, optimizer: str = "adam", config=None) -> OptimizerRun:
    """Optimize the negated interpolated landscape starting from its best grid node."""
    interp = Interpolator(landscape)
    start = landscape.spec.axes()
    flat_best = int(np.argmax(landscape.flat))
    i, j = np.unravel_index(flat_best, landscape.spec.shape, order="F")
    init = np.array([start[0][i], start[1][j]])
    config = config or default_config(optimizer, landscape.spec)
    return OPTIMIZERS[optimizer](SurrogateObjective(interp), init, config)


def oscar_init(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel = IDEAL,
    sampling_fraction: float = 0.1,
    optimizer: str = "adam",
    seed=None,
    config=None,
    solver: SolverConfig | None = None,
) -> InitResult:
    """Initial point from a reconstructed landscape, then the live optimization from it."""
    if spec.ndim != 2:
        raise InvalidInputError("landscape-based initialization supports 2-D grids only")
    recon, recon_queries = reconstruct_from_circuit(problem, ansatz, spec, noise, sampling_fraction, seed, solver)
    config = config or default_config(optimizer, spec)
    surrogate = surrogate_minimum(recon, optimizer, config)
    init = surrogate.endpoint.copy()
    live = OPTIMIZERS[optimizer](CircuitObjective(problem, ansatz, noise, seed), init, config)
    return InitResult(init, recon_queries, surrogate, live, recon)


def random_init_run(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel = IDEAL,
    optimizer: str = "adam",
    seed=None,
    config=None,
) -> OptimizerRun:
    """Baseline: live optimization from a uniformly random point of the grid's box."""
    config = config or default_config(optimizer, spec)
    init = random_point(spec, seed)
    return OPTIMIZERS[optimizer](CircuitObjective(problem, ansatz, noise, seed), init, config)
