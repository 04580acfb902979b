"""Batched statevector simulation with stochastic Pauli (trajectory) noise.

Noise realization: after every 1-qubit gate a depolarizing channel of
strength ``p1q`` acts on its qubit, and after every 2-qubit gate one of
strength ``p2q`` acts on the pair. A channel of strength ``p`` applies a
uniformly random Pauli from the full n-qubit Pauli group (identity
included) with probability ``p``.

One seed fixes one set of trajectories (error patterns), which is shared
by every parameter point in a batch. Landscapes therefore average the
same trajectories everywhere and their Monte Carlo error is a smooth
function of the parameters.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidInputError
from .circuits import Circuit, Gate

MAX_BATCH_AMPLITUDES = 2**21


@dataclass(frozen=True)
class NoiseModel:
    p1q: float = 0.0
    p2q: float = 0.0
    trajectories: int = 200
    shots: int = 0

    def __post_init__(self):
        for name in ("p1q", "p2q"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise InvalidInputError(f"{name} must lie in [0, 1), got {v}")
        if self.trajectories < 1:
            raise InvalidInputError("trajectories must be >= 1")
        if self.shots < 0:
            raise InvalidInputError("shots must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return self.p1q == 0 and self.p2q == 0

    def to_dict(self) -> dict:
        return {"p1q": self.p1q, "p2q": self.p2q, "trajectories": self.trajectories, "shots": self.shots}

    @classmethod
    def from_dict(cls, data: dict) -> NoiseModel:
        return cls(float(data["p1q"]), float(data["p2q"]), int(data.get("trajectories", 200)), int(data.get("shots", 0)))


IDEAL = NoiseModel()

# error pattern: sorted tuple of (gate position, qubit, pauli) with pauli in 1=X, 2=Y, 3=Z
Pattern = tuple[tuple[int, int, int], ...]


def sample_patterns(circuit: Circuit, noise: NoiseModel, rng: np.random.Generator) -> list[tuple[Pattern, int]]:
    """Draw ``noise.trajectories`` error patterns; returns distinct patterns with multiplicities."""
    arity = np.array([g.arity for g in circuit.gates])
    probs = np.where(arity == 1, noise.p1q, noise.p2q)
    T, G = noise.trajectories, len(circuit.gates)
    hit = rng.random((T, G)) < probs
    # Pauli index over the gate's full group: 0..3 for 1q, 0..15 for 2q
    choice = rng.integers(0, 16, size=(T, G)) % np.where(arity == 1, 4, 16)
    counter: Counter = Counter()
    for t in range(T):
        events = []
        for g in np.flatnonzero(hit[t]):
            c = int(choice[t, g])
            qs = circuit.gates[g].qubits
            paulis = (c,) if len(qs) == 1 else (c // 4, c % 4)
            events += [(int(g), q, pa) for q, pa in zip(qs, paulis) if pa]
        counter[tuple(events)] += 1
    return sorted(counter.items(), key=lambda kv: (kv[0][0][0] if kv[0] else len(circuit.gates), kv[0]))


@lru_cache(maxsize=256)
def _cx_perm(n: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(2**n)
    return idx ^ (((idx >> c) & 1) << t)


def _view(state: np.ndarray, n: int, q: int) -> np.ndarray:
    return state.reshape(state.shape[0], 2 ** (n - 1 - q), 2, 2**q)


def _mix(v, m00, m01, m10, m11):
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = m00 * a0 + m01 * a1
    v[:, :, 1, :] = m10 * a0 + m11 * a1


def apply_gate(state: np.ndarray, n: int, gate: Gate, params: np.ndarray) -> np.ndarray:
    """Apply ``gate`` in place where possible; returns the (possibly new) state array."""
    name = gate.name
    if name == "cx":
        return np.take(state, _cx_perm(n, *gate.qubits), axis=1)
    q = gate.qubits[0]
    v = _view(state, n, q)
    if name == "h":
        r = np.sqrt(0.5)
        _mix(v, r, r, r, -r)
        return state
    if name == "x":
        v[:, :, [0, 1], :] = v[:, :, [1, 0], :]
        return state
    if name == "z":
        v[:, :, 1, :] *= -1
        return state
    theta = gate.coeff * params[:, gate.param]
    if name == "rz":
        ph = np.exp(-0.5j * theta)[:, None, None]
        v[:, :, 0, :] *= ph
        v[:, :, 1, :] *= np.conj(ph)
        return state
    c = np.cos(0.5 * theta)[:, None, None]
    s = np.sin(0.5 * theta)[:, None, None]
    if name == "rx":
        _mix(v, c, -1j * s, -1j * s, c)
    elif name == "ry":
        _mix(v, c, -s, s, c)
    else:
        raise InvalidInputError(f"unsupported gate {name!r}")
    return state


def apply_pauli(state: np.ndarray, n: int, q: int, pauli: int) -> None:
    """Apply X, Y or Z (1, 2, 3) to qubit ``q``; Y is applied as X.Z up to global phase."""
    v = _view(state, n, q)
    if pauli in (2, 3):
        v[:, :, 1, :] *= -1
    if pauli in (1, 2):
        v[:, :, [0, 1], :] = v[:, :, [1, 0], :]


def initial_state(n: int, batch: int) -> np.ndarray:
    state = np.zeros((batch, 2**n), dtype=np.complex128)
    state[:, 0] = 1.0
    return state


def run(circuit: Circuit, params: np.ndarray, pattern: Pattern = (), state=None, start: int = 0) -> np.ndarray:
    """Simulate gates ``start..end`` with the Pauli errors in ``pattern``."""
    n = circuit.n_qubits
    if state is None:
        state = initial_state(n, params.shape[0])
    errors: dict[int, list] = {}
    for g, q, pa in pattern:
        errors.setdefault(g, []).append((q, pa))
    for pos in range(start, len(circuit.gates)):
        state = apply_gate(state, n, circuit.gates[pos], params)
        for q, pa in errors.get(pos, ()):
            apply_pauli(state, n, q, pa)
    return state


def probabilities(circuit: Circuit, params: np.ndarray, patterns: list[tuple[Pattern, int]] | None) -> np.ndarray:
    """Output distribution per parameter row, averaged over weighted error patterns.

    ``patterns=None`` is the ideal circuit. Trajectories share the ideal
    prefix up to their first error.
    """
    n = circuit.n_qubits
    if patterns is None:
        state = run(circuit, params)
        return np.abs(state) ** 2
    total = sum(cnt for _, cnt in patterns)
    ideal = initial_state(n, params.shape[0])
    reached = 0
    acc = np.zeros(ideal.shape, dtype=float)
    clean = 0
    for pattern, cnt in patterns:
        if not pattern:
            clean += cnt
            continue
        first = pattern[0][0]
        for pos in range(reached, first):
            ideal = apply_gate(ideal, n, circuit.gates[pos], params)
        reached = first
        branch = run(circuit, params, pattern, ideal.copy(), first)
        acc += (cnt / total) * (np.abs(branch) ** 2)
    if clean:
        for pos in range(reached, len(circuit.gates)):
            ideal = apply_gate(ideal, n, circuit.gates[pos], params)
        acc += (clean / total) * (np.abs(ideal) ** 2)
    return acc


def chunk_size(n_qubits: int) -> int:
    return max(1, MAX_BATCH_AMPLITUDES // 2**n_qubits)
