"""Statevector simulation of QAOA and Two-local cost landscapes."""

from .circuits import AnsatzConfig, Circuit, Gate, build_circuit, qaoa_circuit, twolocal_circuit
from .problems import ProblemInstance, random_regular_graph, random_sk
from .simulate import evaluate_circuit, expectation, generate_landscape
from .statevector import IDEAL, NoiseModel

__all__ = [
    "AnsatzConfig",
    "Circuit",
    "Gate",
    "IDEAL",
    "NoiseModel",
    "ProblemInstance",
    "build_circuit",
    "evaluate_circuit",
    "expectation",
    "generate_landscape",
    "qaoa_circuit",
    "random_regular_graph",
    "random_sk",
    "twolocal_circuit",
]
