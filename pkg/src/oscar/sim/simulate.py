"""Cost expectations and grid-search landscapes."""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import InvalidInputError
from ..landscape import GridSpec, Landscape, grid_points
from .circuits import AnsatzConfig, Circuit, build_circuit
from .problems import MAX_QUBITS, ProblemInstance
from .statevector import IDEAL, NoiseModel, chunk_size, probabilities, sample_patterns


def _streams(seed):
    ss = np.random.SeedSequence(seed)
    traj, shots = ss.spawn(2)
    return np.random.default_rng(traj), int(np.random.default_rng(shots).integers(2**63))


def evaluate_circuit(
    problem: ProblemInstance,
    circuit: Circuit,
    points,
    noise: NoiseModel = IDEAL,
    seed=None,
    threads: int = 1,
) -> np.ndarray:
    """Expected cost of ``circuit`` at each row of ``points``.

    Every row sees the same trajectories, so a row's value does not depend
    on the batch. With ``shots > 0`` each row draws its shots from a stream
    seeded by ``(seed, circuit, parameter bytes)``: shot noise is independent
    across points and circuits yet reproducible point by point.
    """
    if problem.n_qubits > MAX_QUBITS:
        raise InvalidInputError(f"at most {MAX_QUBITS} qubits")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != circuit.n_params:
        raise InvalidInputError(
            f"expected {circuit.n_params} parameters per point, got {points.shape[1]}"
        )
    traj_rng, shot_seed = _streams(seed)
    circuit_tag = zlib.crc32(repr(circuit).encode())
    patterns = None if noise.is_ideal else sample_patterns(circuit, noise, traj_rng)
    cost = problem.cost_diagonal()
    step = chunk_size(problem.n_qubits)
    out = np.empty(points.shape[0])

    def work(lo):
        probs = probabilities(circuit, points[lo:lo + step], patterns)
        if noise.shots:
            for r, pr in enumerate(probs):
                words = np.frombuffer(points[lo + r].tobytes(), dtype=np.uint32)
                rng = np.random.default_rng([shot_seed, circuit_tag, *words.tolist()])
                counts = rng.multinomial(noise.shots, pr / pr.sum())
                out[lo + r] = float((counts * cost).sum() / noise.shots)
        else:
            out[lo:lo + step] = (probs * cost).sum(axis=1)

    starts = range(0, points.shape[0], step)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return out


def expectation(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    params,
    noise: NoiseModel = IDEAL,
    seed=None,
) -> float:
    """Expected cost ``<C>`` for one parameter vector (larger is a better cut)."""
    params = np.asarray(params, dtype=float).ravel()
    expected = ansatz.parameter_count(problem.n_qubits)
    if params.size != expected:
        raise InvalidInputError(f"{ansatz.kind} needs {expected} parameters, got {params.size}")
    return float(evaluate_circuit(problem, build_circuit(problem, ansatz), params[None, :], noise, seed)[0])


def landscape_meta(problem, ansatz, noise, seed, **extra) -> dict:
    return {
        "problem": problem.to_dict(),
        "ansatz": ansatz.to_dict(),
        "noise": noise.to_dict(),
        "shots": noise.shots,
        "seed": seed,
        **extra,
    }


def generate_landscape(
    problem: ProblemInstance,
    ansatz: AnsatzConfig,
    spec: GridSpec,
    noise: NoiseModel = IDEAL,
    seed=None,
    threads: int = 1,
) -> Landscape:
    """Grid search: the expectation at every point of ``spec``."""
    if spec.ndim != ansatz.parameter_count(problem.n_qubits):
        raise InvalidInputError(
            f"grid has {spec.ndim} dims but the ansatz has "
            f"{ansatz.parameter_count(problem.n_qubits)} parameters"
        )
    values = evaluate_circuit(problem, build_circuit(problem, ansatz), grid_points(spec), noise, seed, threads)
    return Landscape.from_flat(spec, values, landscape_meta(problem, ansatz, noise, seed, mitigation=None))
