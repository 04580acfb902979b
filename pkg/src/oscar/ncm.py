"""Noise compensation: affine maps between expectation values of two devices.

Samples gathered on a second device are mapped onto the reference device's
scale before they are merged into a single reconstruction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cs import MeasurementSet, SolverConfig, reconstruct
from .errors import DegenerateFitError, InvalidInputError
from .landscape import GridSpec, Landscape, index_grid, sample_uniform


@dataclass(frozen=True)
class LinearNcm:
    slope: float
    intercept: float
    training_pairs: int
    residual_rms: float
    training: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.isfinite(self.slope) and np.isfinite(self.intercept)):
            raise InvalidInputError("NCM coefficients must be finite")
        if self.training_pairs < 2:
            raise InvalidInputError("an NCM needs at least two training pairs")

    def __call__(self, values):
        return transform(values, self)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "training_pairs": self.training_pairs,
            "residual_rms": self.residual_rms,
            "training": self.training,
        }

    @classmethod
    def from_dict(cls, data: dict) -> LinearNcm:
        return cls(
            float(data["slope"]),
            float(data["intercept"]),
            int(data["training_pairs"]),
            float(data["residual_rms"]),
            dict(data.get("training", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


IDENTITY = LinearNcm(1.0, 0.0, 2, 0.0)


def train(values_src, values_ref, **training_meta) -> LinearNcm:
    """Ordinary least squares ``ref ~ slope * src + intercept`` on paired values."""
    x = np.asarray(values_src, dtype=float).ravel()
    y = np.asarray(values_ref, dtype=float).ravel()
    if x.size != y.size:
        raise InvalidInputError(f"paired vectors differ in length: {x.size} vs {y.size}")
    if x.size < 2:
        raise InvalidInputError("training needs at least two pairs")
    xc = x - x.mean()
    sxx = xc @ xc
    if sxx <= 1e-300 or np.ptp(x) == 0:
        raise DegenerateFitError("source values are constant, slope is undetermined")
    slope = float(xc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    return LinearNcm(slope, intercept, int(x.size), float(np.sqrt(np.mean(resid**2))), training_meta)


def transform(values, model: LinearNcm) -> np.ndarray:
    return model.slope * np.asarray(values, dtype=float) + model.intercept


def merge_measurements(ref: MeasurementSet, other: MeasurementSet) -> MeasurementSet:
    """Union of two sample sets; where both hold an index, the reference value is kept."""
    if ref.grid_shape != other.grid_shape:
        raise InvalidInputError("sample sets come from different grids")
    keep = ~np.isin(other.indices, ref.indices)
    idx = np.concatenate([ref.indices, other.indices[keep]])
    vals = np.concatenate([ref.values, other.values[keep]])
    return MeasurementSet.from_unsorted(idx, vals, ref.grid_shape)


def mixed_reconstruct(
    ref_samples: MeasurementSet,
    other_samples: MeasurementSet,
    model: LinearNcm | None = None,
    config: SolverConfig | None = None,
    spec: GridSpec | None = None,
) -> Landscape:
    """Reconstruct the reference landscape from reference plus (compensated) foreign samples."""
    if model is not None and len(other_samples):
        other_samples = MeasurementSet(other_samples.indices, transform(other_samples.values, model), other_samples.grid_shape)
    merged = merge_measurements(ref_samples, other_samples)
    if len(merged) == 0:
        raise InvalidInputError("no samples to reconstruct from")
    spec = spec or index_grid(ref_samples.grid_shape)
    if spec.shape != merged.grid_shape:
        raise InvalidInputError("spec does not match the sample grid")
    res = reconstruct(merged, config)
    meta = {
        "reconstruction": {
            "samples": len(merged),
            "ref_samples": len(ref_samples),
            "other_samples": len(merged) - len(ref_samples),
            "ncm": None if model is None else model.to_dict(),
            "residual": res.residual,
            "converged": res.converged,
            "iterations": res.iterations,
        }
    }
    return Landscape(spec, res.grid, meta)


@dataclass(frozen=True)
class NcmSplit:
    ref_indices: np.ndarray
    other_indices: np.ndarray
    train_indices: np.ndarray


def split_samples(n: int, fraction: float, ref_share: float, train_fraction: float, seed=None) -> NcmSplit:
    """Draw the reconstruction sample, split it between devices, and draw training points.

    Training points are evaluated on both devices; their reference values
    join the reference sample set.
    """
    if not 0 <= ref_share <= 1:
        raise InvalidInputError("ref_share must be in [0, 1]")
    ss = np.random.SeedSequence(seed)
    s_sample, s_split, s_train = (int(np.random.default_rng(c).integers(2**63)) for c in ss.spawn(3))
    idx = sample_uniform(n, fraction, s_sample)
    perm = np.random.default_rng(s_split).permutation(idx)
    k = int(round(ref_share * idx.size))
    train_idx = sample_uniform(n, train_fraction, s_train) if train_fraction > 0 else np.array([], dtype=np.int64)
    ref_idx = np.union1d(np.sort(perm[:k]), train_idx)
    other_idx = np.setdiff1d(np.sort(perm[k:]), ref_idx)
    return NcmSplit(ref_idx, other_idx, train_idx)


def ncm_reconstruct(
    ref_landscape: Landscape,
    other_landscape: Landscape,
    fraction: float = 0.1,
    ref_share: float = 0.5,
    train_fraction: float = 0.01,
    use_ncm: bool = True,
    seed=None,
    config: SolverConfig | None = None,
) -> tuple[Landscape, LinearNcm | None]:
    """Two-device experiment: sample both landscapes, optionally compensate, reconstruct."""
    if ref_landscape.spec != other_landscape.spec:
        raise InvalidInputError("both devices must share one grid")
    spec = ref_landscape.spec
    split = split_samples(spec.size, fraction, ref_share, train_fraction, seed)
    model = None
    if use_ncm:
        t = split.train_indices
        model = train(other_landscape.flat[t], ref_landscape.flat[t], train_fraction=train_fraction, seed=seed)
    ref = MeasurementSet.from_grid(ref_landscape.values, split.ref_indices)
    other = MeasurementSet.from_grid(other_landscape.values, split.other_indices)
    out = mixed_reconstruct(ref, other, model, config, spec)
    return out.with_values(out.values, fraction=fraction, ref_share=ref_share, seed=seed), model
