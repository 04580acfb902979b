"""Rectangular parameter grids, landscape containers, metrics and file I/O."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateLandscapeError, InvalidInputError, LandscapeFormatError

MAGIC = b"OSCAR\0"
FORMAT_VERSION = 1
DEFAULT_MAX_POINTS = 10**6


@dataclass(frozen=True)
class Dim:
    name: str
    lo: float
    hi: float
    count: int

    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)


@dataclass(frozen=True)
class GridSpec:
    """Per-dimension ranges (radians) and point counts, endpoints inclusive."""

    dims: tuple[Dim, ...]
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        dims = tuple(d if isinstance(d, Dim) else Dim(*d) for d in self.dims)
        if not dims:
            raise InvalidInputError("GridSpec needs at least one dimension")
        for d in dims:
            if not (math.isfinite(d.lo) and math.isfinite(d.hi)) or not d.lo < d.hi:
                raise InvalidInputError(f"dimension {d.name!r}: need lo < hi, got [{d.lo}, {d.hi}]")
            if int(d.count) != d.count or d.count < 2:
                raise InvalidInputError(f"dimension {d.name!r}: count must be an integer >= 2")
        names = [d.name for d in dims]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate dimension names {names}")
        object.__setattr__(self, "dims", dims)
        if self.size > self.max_points:
            raise InvalidInputError(
                f"grid has {self.size} points, above the cap of {self.max_points}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(d.count) for d in self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def axes(self) -> list[np.ndarray]:
        return [d.axis() for d in self.dims]

    def spacing(self) -> np.ndarray:
        return np.array([d.spacing for d in self.dims])

    def lower(self) -> np.ndarray:
        return np.array([d.lo for d in self.dims], dtype=float)

    def upper(self) -> np.ndarray:
        return np.array([d.hi for d in self.dims], dtype=float)

    def to_dict(self) -> dict:
        return {
            "dims": [
                {"name": d.name, "lo": d.lo, "hi": d.hi, "count": int(d.count)} for d in self.dims
            ]
        }

    @classmethod
    def from_dict(cls, data: dict, max_points: int = DEFAULT_MAX_POINTS) -> GridSpec:
        dims = tuple(
            Dim(str(d["name"]), float(d["lo"]), float(d["hi"]), int(d["count"]))
            for d in data["dims"]
        )
        return cls(dims, max_points=max(max_points, math.prod(d.count for d in dims)))


def paper_grid(p: int) -> GridSpec:
    """The reference QAOA grids: p=1 is 50x100 over (beta, gamma), p=2 is 12x12x15x15."""
    if p == 1:
        return GridSpec((
            Dim("beta1", -math.pi / 4, math.pi / 4, 50),
            Dim("gamma1", -math.pi / 2, math.pi / 2, 100),
        ))
    if p == 2:
        return GridSpec((
            Dim("beta1", -math.pi / 8, math.pi / 8, 12),
            Dim("beta2", -math.pi / 8, math.pi / 8, 12),
            Dim("gamma1", -math.pi / 4, math.pi / 4, 15),
            Dim("gamma2", -math.pi / 4, math.pi / 4, 15),
        ))
    raise InvalidInputError(f"no preset grid for p={p}")


GRID_PRESETS = {"paper-p1": lambda: paper_grid(1), "paper-p2": lambda: paper_grid(2)}


def index_grid(shape) -> GridSpec:
    """A grid whose coordinates are plain array indices, for samples with no known ranges."""
    return GridSpec(tuple(Dim(f"axis{i}", 0.0, float(n - 1), n) for i, n in enumerate(shape)))


def grid_points(spec: GridSpec) -> np.ndarray:
    """All grid points as an ``(N, ndim)`` array, first dimension varying fastest."""
    mesh = np.meshgrid(*spec.axes(), indexing="ij")
    return np.stack([m.ravel(order="F") for m in mesh], axis=1)


def _canonical_meta(meta) -> dict:
    try:
        return json.loads(json.dumps(meta or {}, default=_json_default, allow_nan=False))
    except ValueError as exc:
        raise InvalidInputError(f"landscape metadata is not JSON-serializable: {exc}") from exc


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


@dataclass(frozen=True, eq=False)
class Landscape:
    """Dense cost values over a GridSpec.

    ``values`` has shape ``spec.shape``; ``flat`` is the column-major vector.
    Metadata is normalized to plain JSON types on construction.
    """

    spec: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.size != self.spec.size:
            raise InvalidInputError(
                f"{vals.size} values do not fill a grid of {self.spec.size} points"
            )
        if vals.shape != self.spec.shape:
            if vals.ndim != 1:
                raise InvalidInputError(f"values shape {vals.shape} != grid shape {self.spec.shape}")
            vals = vals.reshape(self.spec.shape, order="F")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("landscape values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "meta", _canonical_meta(self.meta))

    @classmethod
    def from_flat(cls, spec: GridSpec, flat, meta=None) -> Landscape:
        return cls(spec, np.asarray(flat, dtype=float).reshape(spec.shape, order="F"), meta or {})

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel(order="F")

    def with_values(self, values, **meta_updates) -> Landscape:
        return Landscape(self.spec, values, {**self.meta, **meta_updates})

    def __eq__(self, other):
        if not isinstance(other, Landscape):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
            and self.meta == other.meta
        )

    __hash__ = None


def sample_uniform(spec_or_size, fraction: float, seed=None) -> np.ndarray:
    """``ceil(fraction * n)`` distinct flat indices, sorted, drawn uniformly."""
    n = spec_or_size.size if isinstance(spec_or_size, GridSpec) else int(spec_or_size)
    if not 0 < fraction <= 1:
        raise InvalidInputError(f"fraction must be in (0, 1], got {fraction}")
    m = math.ceil(fraction * n - 1e-9)
    if m < 1:
        raise InvalidInputError(f"fraction {fraction} of {n} points selects nothing")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=m, replace=False))


def _as_flat(x) -> np.ndarray:
    if isinstance(x, Landscape):
        return x.flat
    return np.asarray(x, dtype=float).ravel(order="F")


def nrmse(truth, recon) -> float:
    """RMSE divided by the interquartile range of ``truth`` (linear-interpolation quartiles)."""
    if isinstance(truth, Landscape) and isinstance(recon, Landscape) and truth.spec != recon.spec:
        raise InvalidInputError("landscapes are defined on different grids")
    x, y = _as_flat(truth), _as_flat(recon)
    if x.shape != y.shape:
        raise InvalidInputError(f"size mismatch {x.shape} vs {y.shape}")
    q1, q3 = np.percentile(x, [25, 75])
    iqr = q3 - q1
    if iqr <= 0:
        raise DegenerateLandscapeError("true landscape has zero interquartile range")
    return float(np.sqrt(np.mean((x - y) ** 2)) / iqr)


def reshape_to_2d(landscape: Landscape) -> Landscape:
    """Merge a 4-D ``(a, b, c, d)`` landscape into ``(a*b, c*d)`` keeping the column-major vector."""
    spec = landscape.spec
    if spec.ndim != 4:
        raise InvalidInputError(f"reshape_to_2d needs a 4-D landscape, got {spec.ndim}-D")
    d0, d1, d2, d3 = spec.dims
    rows, cols = d0.count * d1.count, d2.count * d3.count
    # the merged axes index flattened pairs, so the ranges are nominal
    new_spec = GridSpec(
        (Dim(f"{d0.name}*{d1.name}", 0.0, float(rows - 1), rows),
         Dim(f"{d2.name}*{d3.name}", 0.0, float(cols - 1), cols)),
        max_points=max(spec.max_points, spec.size),
    )
    meta = {**landscape.meta, "reshaped_from": spec.to_dict()}
    return Landscape(new_spec, landscape.flat.reshape((rows, cols), order="F"), meta)


def reshape_from_2d(landscape: Landscape) -> Landscape:
    """Inverse of :func:`reshape_to_2d`."""
    meta = dict(landscape.meta)
    if "reshaped_from" not in meta:
        raise InvalidInputError("landscape was not produced by reshape_to_2d")
    spec = GridSpec.from_dict(meta.pop("reshaped_from"))
    return Landscape(spec, landscape.flat.reshape(spec.shape, order="F"), meta)


@dataclass(frozen=True)
class LandscapeMetrics:
    d2: float
    vog: float
    variance: float

    def to_dict(self) -> dict:
        return {"d2": self.d2, "vog": self.vog, "variance": self.variance}


def metrics(landscape) -> LandscapeMetrics:
    """Roughness (second differences), variance of gradients, and variance.

    The first two are evaluated on every 1-D line along each axis; per-line
    values are averaged within an axis, then across axes. Variances are
    population variances.
    """
    x = landscape.values if isinstance(landscape, Landscape) else np.asarray(landscape, dtype=float)
    if x.size == 0:
        raise InvalidInputError("empty landscape")
    if min(x.shape) < 3:
        raise InvalidInputError(f"every axis needs at least 3 points, got shape {x.shape}")
    d2_axes, vog_axes = [], []
    for ax in range(x.ndim):
        lines = np.moveaxis(x, ax, -1).reshape(-1, x.shape[ax])
        second = lines[:, 2:] - 2 * lines[:, 1:-1] + lines[:, :-2]
        d2_axes.append(np.mean(np.sum(second**2, axis=1) / 4))
        vog_axes.append(np.mean(np.var(np.diff(lines, axis=1), axis=1)))
    return LandscapeMetrics(
        d2=float(np.mean(d2_axes)),
        vog=float(np.mean(vog_axes)),
        variance=float(np.var(x)),
    )


# -- file I/O ---------------------------------------------------------------

_PREFIX = struct.Struct("<6sIQ")


def dumps(landscape: Landscape) -> bytes:
    header = {
        "version": FORMAT_VERSION,
        "dtype": "<f8",
        "order": "F",
        "spec": landscape.spec.to_dict(),
        "meta": landscape.meta,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    body = landscape.flat.astype("<f8").tobytes()
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)) + hbytes + body


def loads(data: bytes) -> Landscape:
    if len(data) < _PREFIX.size:
        raise LandscapeFormatError("file too short for a landscape header")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise LandscapeFormatError(f"bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise LandscapeFormatError(f"unsupported format version {version}")
    start = _PREFIX.size
    if len(data) < start + hlen:
        raise LandscapeFormatError("truncated header")
    try:
        header = json.loads(data[start:start + hlen].decode())
        spec = GridSpec.from_dict(header["spec"])
    except (ValueError, KeyError, TypeError) as exc:
        raise LandscapeFormatError(f"corrupt header: {exc}") from exc
    body = data[start + hlen:]
    if len(body) != 8 * spec.size:
        raise LandscapeFormatError(f"expected {8 * spec.size} value bytes, found {len(body)}")
    flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise LandscapeFormatError("landscape file contains non-finite values")
    return Landscape.from_flat(spec, flat, header.get("meta", {}))


def save(landscape: Landscape, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps(landscape))
    return path


def load(path) -> Landscape:
    return loads(Path(path).read_bytes())


def export_csv(landscape: Landscape, path, header: bool = False) -> Path:
    """Write a 2-D landscape as CSV, one row per first-axis value."""
    if landscape.spec.ndim != 2:
        raise InvalidInputError("CSV export needs a 2-D landscape")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"{landscape.spec.dims[1].name}={v!r}" for v in landscape.spec.dims[1].axis()])
        for row in landscape.values:
            w.writerow([repr(float(v)) for v in row])
    return path


def import_csv(path, dims: Sequence[tuple[str, float, float]], meta: dict[str, Any] | None = None) -> Landscape:
    """Read a CSV grid (rows = first dim, cols = second dim); a non-numeric first line is skipped.

    ``dims`` supplies ``(name, lo, hi)`` for both axes; counts come from the file.
    """
    if len(dims) != 2:
        raise InvalidInputError("CSV import needs exactly two dimension ranges")
    rows = []
    with Path(path).open(newline="") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise InvalidInputError(f"non-numeric CSV entry on line {i + 1}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise InvalidInputError("CSV grid must be a non-empty rectangle")
    values = np.array(rows)
    (n0, lo0, hi0), (n1, lo1, hi1) = dims
    spec = GridSpec((Dim(n0, lo0, hi0, values.shape[0]), Dim(n1, lo1, hi1, values.shape[1])))
    return Landscape(spec, values, {"source": "csv", **(meta or {})})
