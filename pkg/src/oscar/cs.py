"""Orthonormal DCT transforms and l1-regularized landscape reconstruction.

Grids are vectorized column-major (first axis fastest), so the flattened
coefficient vector of an ``(n0, n1)`` grid pairs with the Kronecker basis
``Psi_{n1} (x) Psi_{n0}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.fft import dctn, idctn

from .errors import InvalidInputError

__all__ = [
    "DctPlan",
    "SparseCoefficients",
    "MeasurementSet",
    "SolverConfig",
    "ReconstructionResult",
    "dct_forward",
    "dct_inverse",
    "reconstruct",
    "sparsity_fraction",
]


@dataclass(frozen=True)
class DctPlan:
    """Separable orthonormal DCT-II over a fixed grid shape."""

    shape: tuple[int, ...]

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or any(s < 1 for s in shape):
            raise InvalidInputError(f"DCT shape must be non-empty with positive sizes, got {self.shape}")
        object.__setattr__(self, "shape", shape)

    @property
    def size(self) -> int:
        return prod(self.shape)

    def forward(self, grid: np.ndarray) -> np.ndarray:
        """Analysis transform, returns coefficients with the grid's shape."""
        return dctn(np.asarray(grid, dtype=float), type=2, norm="ortho")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Synthesis transform, returns grid values with the plan's shape."""
        return idctn(np.asarray(coeffs, dtype=float), type=2, norm="ortho")


@dataclass(frozen=True, eq=False)
class SparseCoefficients:
    """DCT-domain coefficients, stored flattened in column-major order."""

    values: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        shape = tuple(int(s) for s in self.shape)
        if values.size != prod(shape):
            raise InvalidInputError(
                f"coefficient length {values.size} does not match shape {shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "shape", shape)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.shape, order="F")

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Sampled grid entries: sorted flat indices (column-major) and their values."""

    indices: np.ndarray
    values: np.ndarray
    grid_shape: tuple[int, ...]

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        shape = tuple(int(s) for s in self.grid_shape)
        n = prod(shape)
        if idx.size != vals.size:
            raise InvalidInputError(f"{idx.size} indices but {vals.size} values")
        if idx.size > n:
            raise InvalidInputError(f"more measurements ({idx.size}) than grid points ({n})")
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise InvalidInputError("measurement index outside the grid")
        if np.any(np.diff(idx) <= 0):
            raise InvalidInputError("measurement indices must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("measurement values must be finite")
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "grid_shape", shape)

    @classmethod
    def from_unsorted(cls, indices, values, grid_shape) -> MeasurementSet:
        """Build from indices in any order; duplicates are rejected."""
        idx = np.asarray(indices, dtype=np.int64).ravel()
        vals = np.asarray(values, dtype=float).ravel()
        order = np.argsort(idx, kind="stable")
        return cls(idx[order], vals[order], grid_shape)

    @classmethod
    def from_grid(cls, grid: np.ndarray, indices) -> MeasurementSet:
        """Sample a dense grid at the given flat (column-major) indices."""
        grid = np.asarray(grid, dtype=float)
        idx = np.sort(np.asarray(indices, dtype=np.int64).ravel())
        return cls(idx, grid.ravel(order="F")[idx], grid.shape)

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def size(self) -> int:
        return prod(self.grid_shape)

    def to_dict(self) -> dict:
        return {
            "grid_shape": list(self.grid_shape),
            "indices": self.indices.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> MeasurementSet:
        return cls(data["indices"], data["values"], data["grid_shape"])


@dataclass(frozen=True)
class SolverConfig:
    """FISTA settings.

    ``lam=None`` picks ``1e-6 * ||A^T y||_inf``. The solver walks the
    regularization weight down geometrically from ``0.5 * ||A^T y||_inf``
    (warm-started continuation) unless ``continuation`` is 1.
    """

    lam: float | None = None
    max_iters: int = 5000
    tolerance: float = 1e-7
    step_backtracking: bool = False
    continuation: float = 0.5

    def __post_init__(self):
        if self.lam is not None and self.lam < 0:
            raise InvalidInputError("lam must be non-negative")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not self.tolerance > 0:
            raise InvalidInputError("tolerance must be > 0")
        if not 0 < self.continuation <= 1:
            raise InvalidInputError("continuation factor must be in (0, 1]")


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    grid: np.ndarray
    coefficients: SparseCoefficients
    residual: float
    converged: bool
    iterations: int
    lam: float
    info: dict = field(default_factory=dict)


def dct_forward(grid) -> SparseCoefficients:
    """Orthonormal separable DCT-II of a dense grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInputError("cannot transform an empty grid")
    plan = DctPlan(grid.shape)
    return SparseCoefficients(plan.forward(grid).ravel(order="F"), grid.shape)


def dct_inverse(coeffs: SparseCoefficients) -> np.ndarray:
    if not isinstance(coeffs, SparseCoefficients):
        raise InvalidInputError("dct_inverse expects SparseCoefficients")
    return DctPlan(coeffs.shape).inverse(coeffs.as_array())


class _SampledDct:
    """Matrix-free ``A = gather(indices) o inverse DCT`` and its adjoint."""

    def __init__(self, shape, indices):
        self.plan = DctPlan(shape)
        self.indices = indices

    def apply(self, s):
        x = self.plan.inverse(s.reshape(self.plan.shape, order="F"))
        return x.ravel(order="F")[self.indices]

    def adjoint(self, r):
        x = np.zeros(self.plan.size)
        x[self.indices] = r
        return self.plan.forward(x.reshape(self.plan.shape, order="F")).ravel(order="F")


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _fista_stage(op, y, s, lam, budget, tol, backtracking, step):
    """Run FISTA at one weight from warm start ``s``.

    Returns (s, iterations used, converged, step).
    """
    z = s.copy()
    t = 1.0
    prev = np.inf
    for it in range(1, budget + 1):
        rz = op.apply(z) - y
        grad = op.adjoint(rz)
        if backtracking:
            fz = 0.5 * rz @ rz
            while True:
                cand = _soft(z - step * grad, step * lam)
                d = cand - z
                rc = op.apply(cand) - y
                if 0.5 * rc @ rc <= fz + grad @ d + (d @ d) / (2 * step) + 1e-15 * abs(fz):
                    break
                step *= 0.5
            s_new, r_new = cand, rc
        else:
            s_new = _soft(z - step * grad, step * lam)
            r_new = op.apply(s_new) - y
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = s_new + ((t - 1.0) / t_new) * (s_new - s)
        s, t = s_new, t_new
        obj = 0.5 * r_new @ r_new + lam * np.abs(s).sum()
        if abs(prev - obj) <= tol * abs(obj):
            return s, it, True, step
        prev = obj
    return s, budget, False, step


def reconstruct(meas: MeasurementSet, config: SolverConfig | None = None) -> ReconstructionResult:
    """Recover the full grid from sampled entries by l1-regularized least squares.

    Solves ``min 0.5*||A s - y||^2 + lam*||s||_1`` with FISTA, ``A`` being the
    sampled inverse DCT, and returns the synthesized grid ``Psi s``.
    Non-convergence is flagged in the result, never raised.
    """
    config = config or SolverConfig()
    if len(meas) == 0:
        raise InvalidInputError("cannot reconstruct from an empty MeasurementSet")
    op = _SampledDct(meas.grid_shape, meas.indices)
    y = meas.values
    aty = op.adjoint(y)
    lam_max = float(np.abs(aty).max())
    lam = 1e-6 * lam_max if config.lam is None else float(config.lam)
    n = op.plan.size

    if lam_max == 0.0:
        s = np.zeros(n)
        coeffs = SparseCoefficients(s, meas.grid_shape)
        return ReconstructionResult(np.zeros(meas.grid_shape), coeffs, 0.0, True, 0, lam)

    if len(meas) == n:
        # every entry sampled: A is orthonormal and the minimizer is a soft threshold
        full = np.asarray(y).reshape(meas.grid_shape, order="F")
        s = _soft(op.plan.forward(full).ravel(order="F"), lam)
        grid = op.plan.inverse(s.reshape(meas.grid_shape, order="F"))
        residual = float(np.linalg.norm(grid.ravel(order="F") - y))
        return ReconstructionResult(grid, SparseCoefficients(s, meas.grid_shape), residual, True, 0, lam)

    s = np.zeros(n)
    used = 0
    converged = False
    step = 10.0 if config.step_backtracking else 1.0
    stage_lam = max(lam, 0.5 * lam_max) if config.continuation < 1 else lam
    while True:
        budget = config.max_iters - used
        s, k, ok, step = _fista_stage(
            op, y, s, stage_lam, budget, config.tolerance, config.step_backtracking, step
        )
        used += k
        if stage_lam <= lam:
            converged = ok
            break
        if used >= config.max_iters:
            break
        stage_lam = max(lam, stage_lam * config.continuation)

    grid = op.plan.inverse(s.reshape(meas.grid_shape, order="F"))
    residual = float(np.linalg.norm(grid.ravel(order="F")[meas.indices] - y))
    coeffs = SparseCoefficients(s, meas.grid_shape)
    return ReconstructionResult(grid, coeffs, residual, converged, used, lam)


def sparsity_fraction(grid, energy: float = 0.99) -> float:
    """Fraction of DCT coefficients needed to hold ``energy`` of the signal's squared norm."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInputError("grid must be non-empty")
    if not 0 < energy <= 1:
        raise InvalidInputError("energy must lie in (0, 1]")
    c2 = np.sort(dct_forward(grid).values ** 2)[::-1]
    total = c2.sum()
    if total == 0:
        return 0.0
    cum = np.cumsum(c2)
    # floating round-off can leave cum[-1] a hair below total
    k = int(np.searchsorted(cum, energy * total * (1 - 1e-12), side="left")) + 1
    return min(k, c2.size) / c2.size
