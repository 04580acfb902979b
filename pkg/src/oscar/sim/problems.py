"""MaxCut and SK problem instances."""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..errors import InvalidInputError

MAX_QUBITS = 20
KINDS = ("maxcut", "sk")


@dataclass(frozen=True)
class ProblemInstance:
    """Weighted couplings ``(i, j, w)`` with cost ``sum w * (1 - Z_i Z_j) / 2``."""

    n_qubits: int
    kind: str
    edges: tuple[tuple[int, int, float], ...]
    seed: int | None = None

    def __post_init__(self):
        if not 2 <= self.n_qubits <= MAX_QUBITS:
            raise InvalidInputError(f"n_qubits must be in [2, {MAX_QUBITS}], got {self.n_qubits}")
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown problem kind {self.kind!r}")
        edges = []
        seen = set()
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if not 0 <= i < j < self.n_qubits:
                raise InvalidInputError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n_qubits")
            if (i, j) in seen:
                raise InvalidInputError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            edges.append((i, j, w))
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def degrees(self) -> list[int]:
        deg = [0] * self.n_qubits
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def cost_diagonal(self) -> np.ndarray:
        """Cost of every computational basis state; bit ``q`` of the index is qubit ``q``."""
        idx = np.arange(2**self.n_qubits)
        spins = 1 - 2 * ((idx[:, None] >> np.arange(self.n_qubits)) & 1)
        cost = np.zeros(idx.size)
        for i, j, w in self.edges:
            cost += 0.5 * w * (1 - spins[:, i] * spins[:, j])
        return cost

    def to_dict(self) -> dict:
        return {
            "qubits": self.n_qubits,
            "kind": self.kind,
            "edges": [[i, j, w] for i, j, w in self.edges],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ProblemInstance:
        return cls(int(data["qubits"]), data["kind"], tuple(tuple(e) for e in data["edges"]), data.get("seed"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ProblemInstance:
        return cls.from_dict(json.loads(text))


def random_regular_graph(n: int, degree: int = 3, seed: int | None = None) -> ProblemInstance:
    """Unweighted MaxCut on a uniformly random ``degree``-regular graph."""
    if n * degree % 2:
        raise InvalidInputError(f"no {degree}-regular graph on {n} vertices (n*degree is odd)")
    if degree >= n:
        raise InvalidInputError(f"degree {degree} needs more than {n} vertices")
    g = nx.random_regular_graph(degree, n, seed=seed)
    edges = sorted((min(u, v), max(u, v), 1.0) for u, v in g.edges())
    return ProblemInstance(n, "maxcut", tuple(edges), seed)


def random_sk(n: int, seed: int | None = None, couplings: str = "pm1") -> ProblemInstance:
    """All-to-all SK couplings, uniform +-1 by default or standard normal with ``couplings='gaussian'``."""
    rng = np.random.default_rng(seed)
    m = n * (n - 1) // 2
    if couplings == "pm1":
        w = rng.choice([-1.0, 1.0], size=m)
    elif couplings == "gaussian":
        w = rng.standard_normal(m)
    else:
        raise InvalidInputError(f"unknown coupling distribution {couplings!r}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return ProblemInstance(n, "sk", tuple((i, j, float(x)) for (i, j), x in zip(pairs, w)), seed)
