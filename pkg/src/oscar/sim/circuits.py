"""Parametric gate-list circuits for the QAOA and Two-local ansatzes.

A gate angle is ``coeff * params[param]``, so one circuit object serves a
whole batch of parameter vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidInputError
from .problems import ProblemInstance

ONE_QUBIT = {"h", "x", "z", "rx", "ry", "rz"}
TWO_QUBIT = {"cx"}
ROTATIONS = {"rx", "ry", "rz"}
SELF_INVERSE = {"h", "x", "z", "cx"}


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    param: int | None = None
    coeff: float = 1.0

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def inverse(self) -> Gate:
        if self.name in SELF_INVERSE:
            return self
        return Gate(self.name, self.qubits, self.param, -self.coeff)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __len__(self) -> int:
        return len(self.gates)

    def counts(self) -> dict[str, int]:
        one = sum(1 for g in self.gates if g.arity == 1)
        return {"1q": one, "2q": len(self.gates) - one}


@dataclass(frozen=True)
class AnsatzConfig:
    """``kind='qaoa'`` with depth ``p``, or ``kind='twolocal'`` with ``layers`` entangling blocks."""

    kind: str = "qaoa"
    p: int = 1
    layers: int = 1

    def __post_init__(self):
        if self.kind not in ("qaoa", "twolocal"):
            raise InvalidInputError(f"unknown ansatz {self.kind!r}")
        if self.kind == "qaoa" and self.p < 1:
            raise InvalidInputError("QAOA depth p must be >= 1")
        if self.kind == "twolocal" and self.layers < 1:
            raise InvalidInputError("Two-local needs at least one layer")

    def parameter_count(self, n_qubits: int) -> int:
        if self.kind == "qaoa":
            return 2 * self.p
        return n_qubits * (self.layers + 1)

    def to_dict(self) -> dict:
        if self.kind == "qaoa":
            return {"kind": "qaoa", "p": self.p}
        return {"kind": "twolocal", "layers": self.layers}

    @classmethod
    def from_dict(cls, data: dict) -> AnsatzConfig:
        return cls(data["kind"], int(data.get("p", 1)), int(data.get("layers", 1)))


def qaoa_circuit(problem: ProblemInstance, p: int) -> Circuit:
    """Parameters are ``[beta_1..beta_p, gamma_1..gamma_p]``.

    Each coupling phase ``exp(-i gamma w (1 - ZZ)/2)`` is realized, up to
    global phase, as CX . RZ(-w gamma) . CX; the mixer is RX(2 beta).
    """
    n = problem.n_qubits
    gates = [Gate("h", (q,)) for q in range(n)]
    for k in range(p):
        for i, j, w in problem.edges:
            gates += [Gate("cx", (i, j)), Gate("rz", (j,), p + k, -w), Gate("cx", (i, j))]
        gates += [Gate("rx", (q,), k, 2.0) for q in range(n)]
    return Circuit(n, tuple(gates), 2 * p)


def twolocal_circuit(n_qubits: int, layers: int) -> Circuit:
    """RY on every qubit then a linear CX chain, repeated; closed by a final RY layer."""
    gates = []
    idx = 0
    for _ in range(layers):
        for q in range(n_qubits):
            gates.append(Gate("ry", (q,), idx))
            idx += 1
        gates += [Gate("cx", (q, q + 1)) for q in range(n_qubits - 1)]
    for q in range(n_qubits):
        gates.append(Gate("ry", (q,), idx))
        idx += 1
    return Circuit(n_qubits, tuple(gates), idx)


def build_circuit(problem: ProblemInstance, ansatz: AnsatzConfig) -> Circuit:
    if ansatz.kind == "qaoa":
        return qaoa_circuit(problem, ansatz.p)
    return twolocal_circuit(problem.n_qubits, ansatz.layers)
