"""Concrete totally bounded metric spaces and their delta-coverings.

Two space families are supported: the unit hypercube [0,1]^d with Euclidean
metric, and finite spaces given by an explicit distance matrix. Points are
float64 arrays of shape (n, dim) for the hypercube and int64 label indices of
shape (n,) for finite spaces.

A covering of parameter delta partitions the space into cells of diameter at
most 2*delta, each carrying a representative point; `discretize` maps every
point to the representative of its cell.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, InvalidParameterError

MAX_CELLS = 10_000_000


@dataclass(frozen=True)
class Hypercube:
    """[0,1]^dim with the Euclidean metric."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameterError("hypercube dimension must be >= 1")

    @property
    def diameter(self):
        return math.sqrt(self.dim)

    def metric(self, x, y):
        return float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))

    def pairwise(self, xs, ys):
        return cdist(np.atleast_2d(xs), np.atleast_2d(ys))

    def contains(self, points):
        pts = as_hypercube_points(points, self.dim)
        return np.all((pts >= 0.0) & (pts <= 1.0), axis=1)


@dataclass(frozen=True)
class FiniteSpace:
    """Finite metric space: labels plus a symmetric distance matrix."""

    labels: tuple
    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, float)
        if d.shape != (len(self.labels), len(self.labels)):
            raise InvalidParameterError("distance matrix shape does not match labels")
        if np.any(d < 0) or not np.allclose(d, d.T, atol=1e-12):
            raise InvalidParameterError("distance matrix must be symmetric nonnegative")
        if np.any(np.abs(np.diag(d)) > 1e-12):
            raise InvalidParameterError("distance matrix diagonal must be zero")
        object.__setattr__(self, "dist", d)

    @property
    def n_points(self):
        return len(self.labels)

    @property
    def diameter(self):
        return float(self.dist.max()) if self.n_points else 0.0

    def metric(self, x, y):
        return float(self.dist[int(x), int(y)])

    def pairwise(self, xs, ys):
        xs = np.asarray(xs, int).ravel()
        ys = np.asarray(ys, int).ravel()
        return self.dist[np.ix_(xs, ys)]

    def contains(self, points):
        pts = np.asarray(points).ravel()
        return (pts >= 0) & (pts < self.n_points) & (pts == pts.astype(int))


def as_hypercube_points(points, dim):
    """Coerce to a (n, dim) float64 array; 1-D input is promoted when dim==1."""
    pts = np.asarray(points, float)
    if pts.ndim == 1:
        if dim == 1:
            pts = pts[:, None]
        else:
            pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise InvalidInputError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts


def space_to_json(space):
    if isinstance(space, Hypercube):
        return {"kind": "hypercube", "dim": space.dim}
    return {"kind": "finite", "points": list(space.labels), "dist": space.dist.tolist()}


def space_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "hypercube":
        return Hypercube(dim=int(obj["dim"]))
    if kind == "finite":
        return FiniteSpace(labels=tuple(obj["points"]), dist=np.asarray(obj["dist"], float))
    raise InvalidParameterError(f"unknown space kind {kind!r}")


@dataclass(frozen=True)
class BoxCell:
    """Half-open axis-aligned box; the upper face is closed on the 1-boundary."""

    index: int
    lower: np.ndarray
    upper: np.ndarray
    closed_upper: np.ndarray
    representative: np.ndarray

    def contains(self, point):
        p = np.asarray(point, float).ravel()
        ge = p >= self.lower
        lt = np.where(self.closed_upper, p <= self.upper, p < self.upper)
        return bool(np.all(ge) and np.all(lt))


@dataclass(frozen=True)
class LabelCell:
    index: int
    members: frozenset
    representative: int

    def contains(self, point):
        return int(point) in self.members


class DeltaCovering:
    """Partition of a space into cells of diameter <= 2*delta.

    Immutable after construction; `cell_index` is the vectorized lookup used
    by discretization and counting, while `cells` materializes predicate
    objects whose membership logic is independent of the fast path.
    """

    def __init__(self, space, delta, size, cells_per_axis=None, cell_of=None, rep_labels=None):
        self.space = space
        self.delta = float(delta)
        self.size = int(size)
        self._k = cells_per_axis
        self._cell_of = cell_of
        self._rep_labels = rep_labels

    @property
    def cells_per_axis(self):
        if not isinstance(self.space, Hypercube):
            raise InvalidInputError("cells_per_axis only exists for hypercube coverings")
        return self._k

    def cell_index(self, points):
        """Index of the cell containing each point; raises on points outside the space."""
        if isinstance(self.space, Hypercube):
            pts = as_hypercube_points(points, self.space.dim)
            if not np.all(self.space.contains(pts)):
                raise InvalidInputError("point outside the unit hypercube")
            k = self._k
            axis = np.minimum((pts * k).astype(np.int64), k - 1)
            return np.ravel_multi_index(axis.T, (k,) * self.space.dim).astype(np.int64)
        pts = np.asarray(points, int).ravel()
        if not np.all(self.space.contains(pts)):
            raise InvalidInputError("label outside the finite space")
        return self._cell_of[pts]

    def representative_points(self, indices):
        """Representative points for an array of cell indices."""
        idx = np.asarray(indices, int).ravel()
        if np.any(idx < 0) or np.any(idx >= self.size):
            raise InvalidInputError("cell index out of range")
        if isinstance(self.space, Hypercube):
            axis = np.stack(np.unravel_index(idx, (self._k,) * self.space.dim), axis=1)
            return (axis + 0.5) / self._k
        return self._rep_labels[idx]

    @property
    def representatives(self):
        return self.representative_points(np.arange(self.size))

    def box_bounds(self, indices):
        """(lower, upper) corners of hypercube cells; undefined for finite spaces."""
        if not isinstance(self.space, Hypercube):
            raise InvalidInputError("box bounds only exist for hypercube coverings")
        idx = np.asarray(indices, int).ravel()
        axis = np.stack(np.unravel_index(idx, (self._k,) * self.space.dim), axis=1)
        return axis / self._k, (axis + 1.0) / self._k

    @property
    def cells(self):
        if isinstance(self.space, Hypercube):
            idx = np.arange(self.size)
            lower, upper = self.box_bounds(idx)
            reps = self.representative_points(idx)
            return [
                BoxCell(j, lower[j], upper[j], np.isclose(upper[j], 1.0), reps[j])
                for j in idx
            ]
        out = []
        for j in range(self.size):
            members = frozenset(np.flatnonzero(self._cell_of == j).tolist())
            out.append(LabelCell(j, members, int(self._rep_labels[j])))
        return out


def build_delta_covering(space, delta):
    """Partition `space` into cells of diameter <= 2*delta.

    Hypercube: the uniform axis-aligned grid with ceil(sqrt(dim)/(2*delta))
    cells per axis (side <= 2*delta/sqrt(dim)) and cell centers as
    representatives. Finite space: greedy balls of radius delta around the
    first unassigned label, so singleton cells fall out naturally when delta
    is below the minimal positive pairwise distance.
    """
    delta = float(delta)
    if not delta > 0.0:
        raise InvalidParameterError("delta must be positive")
    if delta > space.diameter:
        raise InvalidParameterError("delta must not exceed the space diameter")
    if isinstance(space, Hypercube):
        k = math.ceil(math.sqrt(space.dim) / (2.0 * delta))
        if k**space.dim > MAX_CELLS:
            raise InvalidParameterError(
                f"covering would need {k}^{space.dim} cells; exceeds {MAX_CELLS}"
            )
        return DeltaCovering(space, delta, size=k**space.dim, cells_per_axis=k)
    cell_of = np.full(space.n_points, -1, dtype=np.int64)
    reps = []
    for i in range(space.n_points):
        if cell_of[i] >= 0:
            continue
        mask = (cell_of < 0) & (space.dist[i] <= delta)
        cell_of[mask] = len(reps)
        reps.append(i)
    return DeltaCovering(
        space,
        delta,
        size=len(reps),
        cell_of=cell_of,
        rep_labels=np.asarray(reps, dtype=np.int64),
    )


def discretize(cov, sample):
    """Map each sample point to the representative of its cell."""
    return cov.representative_points(cov.cell_index(sample))


def cell_counts(cov, sample):
    """Number of sample points falling in each cell (length = covering size)."""
    sample = np.asarray(sample)
    if sample.size == 0:
        return np.zeros(cov.size, dtype=np.int64)
    return np.bincount(cov.cell_index(sample), minlength=cov.size).astype(np.int64)
