"""Zero-noise extrapolation: gate folding, extrapolation, mitigated landscapes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError
from .landscape import GridSpec, Landscape, grid_points
from .sim.circuits import AnsatzConfig, Circuit, build_circuit
from .sim.problems import ProblemInstance
from .sim.simulate import evaluate_circuit, landscape_meta
from .sim.statevector import NoiseModel

METHODS = ("linear", "richardson")


@dataclass(frozen=True)
class ZneConfig:
    scale_factors: tuple[float, ...] = (1.0, 2.0, 3.0)
    extrapolation: str = "richardson"

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scale_factors)
        if len(scales) < 2:
            raise InvalidInputError("ZNE needs at least two scale factors")
        if scales[0] < 1 or any(b <= a for a, b in zip(scales, scales[1:])):
            raise InvalidInputError(f"scale factors must be strictly increasing and >= 1, got {scales}")
        if self.extrapolation not in METHODS:
            raise InvalidInputError(f"extrapolation must be one of {METHODS}")
        object.__setattr__(self, "scale_factors", scales)

    @property
    def queries_per_point(self) -> int:
        return len(self.scale_factors)

    def to_dict(self) -> dict:
        return {"scale_factors": list(self.scale_factors), "extrapolation": self.extrapolation}

    @classmethod
    def from_dict(cls, data: dict) -> ZneConfig:
        return cls(tuple(data["scale_factors"]), data["extrapolation"])


RICHARDSON_123 = ZneConfig((1.0, 2.0, 3.0), "richardson")
LINEAR_13 = ZneConfig((1.0, 3.0), "linear")


def fold_scale(circuit: Circuit, factor: float) -> Circuit:
    """Replace gates ``U`` by ``U (U^dag U)^k`` so the gate count grows by ~``factor``.

    Odd integer factors fold every gate ``(factor - 1) / 2`` times. Other
    factors add ``round((factor - 1) * d / 2)`` folds in total, spread evenly
    with the remainder going to the gates nearest the circuit start.
    """
    if not factor >= 1:
        raise InvalidInputError(f"scale factor must be >= 1, got {factor}")
    d = len(circuit.gates)
    extra = int(round((factor - 1) * d / 2))
    base, rem = divmod(extra, d) if d else (0, 0)
    gates = []
    for i, g in enumerate(circuit.gates):
        gates.append(g)
        for _ in range(base + (i < rem)):
            gates += [g.inverse(), g]
    return Circuit(circuit.n_qubits, tuple(gates), circuit.n_params)


def extrapolation_weights(scales: Sequence[float], method: str) -> np.ndarray:
    """Weights ``w`` such that the zero-noise estimate is ``w @ values``."""
    s = np.asarray(scales, dtype=float)
    if s.size < 2:
        raise InvalidInputError("extrapolation needs at least two points")
    if method == "richardson":
        if np.unique(s).size != s.size:
            raise InvalidInputError("Richardson extrapolation needs distinct scale factors")
        # Lagrange basis polynomials evaluated at 0
        w = np.ones(s.size)
        for i in range(s.size):
            for j in range(s.size):
                if j != i:
                    w[i] *= s[j] / (s[j] - s[i])
        return w
    if method == "linear":
        if np.ptp(s) == 0:
            raise InvalidInputError("linear extrapolation needs at least two distinct scales")
        design = np.stack([np.ones_like(s), s], axis=1)
        return np.linalg.pinv(design)[0]
    raise InvalidInputError(f"unknown extrapolation method {method!r}")


def extrapolate(points: Sequence[tuple[float, float]], method: str = "richardson") -> float:
    """Zero-noise estimate from ``(scale, value)`` pairs.

    Linear fits a least-squares line and returns its intercept; Richardson
    evaluates the interpolating polynomial of degree ``k - 1`` at zero.
    """
    pts = list(points)
    if len(pts) < 2:
        raise InvalidInputError("extrapolation needs at least two points")
    scales = [p[0] for p in pts]
    values = np.array([p[1] for p in pts], dtype=float)
    return float(extrapolation_weights(scales, method) @ values)


@dataclass(frozen=True)
class ZneResult:
    value: float
    scale_factors: tuple[float, ...]
    scaled_values: tuple[float, ...]
    queries: int

    def __float__(self):
        return self.value


def zne_from_executor(executor: Callable[[float], float], zne: ZneConfig) -> ZneResult:
    """ZNE against any backend mapping a noise scale factor to a measured expectation."""
    vals = tuple(float(executor(s)) for s in zne.scale_factors)
    est = extrapolate(list(zip(zne.scale_factors, vals)), zne.extrapolation)
    return ZneResult(est, zne.scale_factors, vals, len(vals))


def zne_expectation(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    params,
    noise: NoiseModel,
    zne: ZneConfig,
    seed=None,
) -> ZneResult:
    """Mitigated expectation of one parameter vector using folded circuits."""
    params = np.asarray(params, dtype=float).ravel()
    expected = ansatz.parameter_count(problem.n_qubits)
    if params.size != expected:
        raise InvalidInputError(f"{ansatz.kind} needs {expected} parameters, got {params.size}")
    base = build_circuit(problem, ansatz)

    def run(scale):
        return evaluate_circuit(problem, fold_scale(base, scale), params[None, :], noise, seed)[0]

    return zne_from_executor(run, zne)


def scaled_landscapes(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel,
    scales: Sequence[float],
    seed=None,
    threads: int = 1,
) -> dict[float, Landscape]:
    """Unmitigated landscapes of the folded circuits, one per scale factor."""
    base = build_circuit(problem, ansatz)
    pts = grid_points(spec)
    out = {}
    for s in scales:
        vals = evaluate_circuit(problem, fold_scale(base, s), pts, noise, seed, threads)
        out[float(s)] = Landscape.from_flat(
            spec, vals, landscape_meta(problem, ansatz, noise, seed, mitigation=None, noise_scale=float(s))
        )
    return out


def mitigated_landscape(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel,
    zne: ZneConfig,
    seed=None,
    scaled: dict[float, Landscape] | None = None,
    threads: int = 1,
) -> Landscape:
    """ZNE applied at every grid point.

    ``scaled`` may carry precomputed folded landscapes (e.g. shared between a
    Richardson {1,2,3} and a Linear {1,3} configuration); missing scales are
    simulated.
    """
    scaled = dict(scaled or {})
    missing = [s for s in zne.scale_factors if s not in scaled]
    if missing:
        scaled.update(scaled_landscapes(problem, ansatz, spec, noise, missing, seed, threads))
    stack = np.stack([scaled[s].flat for s in zne.scale_factors])
    w = extrapolation_weights(zne.scale_factors, zne.extrapolation)
    meta = landscape_meta(
        problem, ansatz, noise, seed, mitigation=zne.to_dict(), queries_per_point=zne.queries_per_point
    )
    return Landscape.from_flat(spec, w @ stack, meta)
