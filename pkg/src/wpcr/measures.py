"""Finitely supported probability measures, sampling laws, and seeded RNG.

Measures are canonicalized on construction: weights are validated, atoms
closer than the dedup tolerance are merged, and weights are rescaled to sum
to one exactly. Empirical measures keep the raw ordered sample (duplicates
included) because tuple-based operations need it.

Random streams are counter-based (Philox keyed by a master seed plus a
spawn path), so replications are reproducible independent of scheduling.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidInputError, InvalidParameterError
from .metric import FiniteSpace, Hypercube, as_hypercube_points

DEDUP_TOL = 1e-12


class DiscreteMeasure:
    """Probability measure with finite support.

    points: (n, dim) float64 for hypercube spaces, (n,) int64 for finite
    spaces. Weights are strictly positive and sum to one exactly after
    canonicalization.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights=None, mass_tol=1e-9):
        pts = np.asarray(points)
        if pts.dtype.kind in "iu":
            pts = pts.astype(np.int64).ravel()
            n = len(pts)
        else:
            pts = np.atleast_1d(np.asarray(pts, float))
            if pts.ndim == 1:
                pts = pts[:, None]
            n = pts.shape[0]
        if n == 0:
            raise InvalidInputError("measure needs at least one support point")
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, float).ravel()
        if len(w) != n:
            raise InvalidInputError("weights length does not match support size")
        if np.any(w < -1e-15):
            raise InvalidInputError("weights must be nonnegative")
        w = np.maximum(w, 0.0)
        total = w.sum()
        if abs(total - 1.0) > mass_tol:
            raise InvalidInputError(f"weights sum to {total!r}, not 1")
        pts, w = _dedup(pts, w)
        keep = w > 0.0
        pts, w = pts[keep], w[keep]
        if len(w) == 0:
            raise InvalidInputError("measure has no mass")
        w = w / w.sum()
        self.points = pts
        self.points.setflags(write=False)
        self.weights = w
        self.weights.setflags(write=False)

    @property
    def n_atoms(self):
        return len(self.weights)

    @property
    def is_labels(self):
        return self.points.dtype.kind in "iu"

    @property
    def dim(self):
        return 1 if self.is_labels else self.points.shape[1]

    def coords_1d(self):
        """Support as a flat float array; only valid for 1-D coordinate measures."""
        if self.is_labels or self.dim != 1:
            raise InvalidInputError("measure is not supported on the real line")
        return self.points[:, 0]

    @staticmethod
    def point_mass(point):
        pt = np.asarray(point)
        if pt.dtype.kind in "iu":
            return DiscreteMeasure(np.asarray([int(pt)], dtype=np.int64))
        return DiscreteMeasure(np.atleast_2d(np.asarray(pt, float)))

    def to_json(self):
        return [[p, float(w)] for p, w in zip(self.points.tolist(), self.weights)]

    @staticmethod
    def from_json(obj):
        pts = [p for p, _ in obj]
        w = [wt for _, wt in obj]
        if pts and isinstance(pts[0], int):
            return DiscreteMeasure(np.asarray(pts, dtype=np.int64), w)
        return DiscreteMeasure(np.asarray(pts, float), w)


def _dedup(pts, w):
    """Merge duplicate atoms: exact for labels, DEDUP_TOL per coordinate for floats."""
    if pts.dtype.kind in "iu":
        uniq, inv = np.unique(pts, return_inverse=True)
        return uniq, np.bincount(inv, weights=w)
    order = np.lexsort(pts.T[::-1])
    spts, sw = pts[order], w[order]
    if len(spts) == 1:
        return spts, sw
    new_group = np.any(np.abs(np.diff(spts, axis=0)) > DEDUP_TOL, axis=1)
    group = np.concatenate(([0], np.cumsum(new_group)))
    n_groups = group[-1] + 1
    merged_w = np.bincount(group, weights=sw, minlength=n_groups)
    first = np.searchsorted(group, np.arange(n_groups))
    return spts[first], merged_w


class EmpiricalMeasure:
    """Uniform measure on an ordered sample; duplicates and order are kept."""

    __slots__ = ("points", "_measure")

    def __init__(self, points):
        pts = np.asarray(points)
        if pts.dtype.kind in "iu":
            pts = pts.astype(np.int64).ravel()
        else:
            pts = np.asarray(pts, float)
            if pts.ndim == 1:
                pts = pts[:, None]
        if len(pts) == 0:
            raise InvalidInputError("empirical measure needs at least one point")
        self.points = pts
        self.points.setflags(write=False)
        self._measure = None

    @property
    def n(self):
        return len(self.points)

    def as_measure(self):
        if self._measure is None:
            self._measure = DiscreteMeasure(self.points)
        return self._measure


class SeededRng:
    """Counter-based random stream: Philox keyed by (master seed, spawn path)."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed, path=()):
        self.seed = int(seed)
        self.path = tuple(int(k) for k in path)
        self._gen = None

    @property
    def gen(self):
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def spawn(self, *keys):
        return SeededRng(self.seed, self.path + keys)


@dataclass(frozen=True)
class UniformLaw:
    """Uniform distribution on [0,1]^dim."""

    dim: int = 1


@dataclass(frozen=True)
class TruncatedGaussianLaw:
    """Per-axis Gaussian truncated to [0,1]."""

    mean: tuple
    sd: tuple

    @property
    def dim(self):
        return len(self.mean)


@dataclass(frozen=True)
class MixtureLaw:
    """Convex mixture of a discrete measure and a continuous law."""

    atoms: DiscreteMeasure
    atom_weight: float
    continuous: object

    def __post_init__(self):
        if not 0.0 <= self.atom_weight <= 1.0:
            raise InvalidParameterError("atom weight must lie in [0,1]")


def sample_iid(law, n, rng):
    """n i.i.d. draws from `law` as an EmpiricalMeasure; deterministic in rng."""
    if n < 1:
        raise InvalidParameterError("sample size must be >= 1")
    gen = rng.gen
    return EmpiricalMeasure(_draw(law, n, gen))


def _draw(law, n, gen):
    if isinstance(law, DiscreteMeasure):
        idx = gen.choice(law.n_atoms, size=n, p=law.weights)
        return law.points[idx]
    if isinstance(law, UniformLaw):
        return gen.random((n, law.dim))
    if isinstance(law, TruncatedGaussianLaw):
        cols = []
        for m, s in zip(law.mean, law.sd):
            a, b = (0.0 - m) / s, (1.0 - m) / s
            cols.append(stats.truncnorm.ppf(gen.random(n), a, b, loc=m, scale=s))
        return np.column_stack(cols)
    if isinstance(law, MixtureLaw):
        pick_atom = gen.random(n) < law.atom_weight
        cont = _draw(law.continuous, n, gen) if law.continuous is not None else None
        out = np.empty((n, law.atoms.dim)) if not law.atoms.is_labels else np.empty(n, np.int64)
        k = int(pick_atom.sum())
        if k:
            idx = gen.choice(law.atoms.n_atoms, size=k, p=law.atoms.weights)
            out[pick_atom] = law.atoms.points[idx]
        if k < n:
            if cont is None:
                raise InvalidParameterError("mixture with atom_weight < 1 needs a continuous part")
            out[~pick_atom] = cont[~pick_atom]
        return out
    raise InvalidParameterError(f"unsupported sampling law {type(law).__name__}")


def pushforward(measure, cov):
    """Aggregate a measure's mass onto the covering representatives."""
    idx = cov.cell_index(measure.points)
    masses = np.bincount(idx, weights=measure.weights, minlength=cov.size)
    occupied = np.flatnonzero(masses > 0.0)
    reps = cov.representative_points(occupied)
    return DiscreteMeasure(reps, masses[occupied])


def law_cell_masses(law, cov):
    """Exact mass each covering cell receives under `law`.

    Analytic for the named laws on hypercube grids (uniform cells all share
    the same volume; truncated Gaussian masses are per-axis CDF differences);
    discrete laws are aggregated by cell.
    """
    space = cov.space
    if isinstance(law, DiscreteMeasure):
        idx = cov.cell_index(law.points)
        return np.bincount(idx, weights=law.weights, minlength=cov.size)
    if isinstance(law, MixtureLaw):
        m = law.atom_weight * law_cell_masses(law.atoms, cov)
        if law.continuous is not None and law.atom_weight < 1.0:
            m = m + (1.0 - law.atom_weight) * law_cell_masses(law.continuous, cov)
        return m
    if not isinstance(space, Hypercube):
        raise InvalidParameterError("continuous laws live on the hypercube")
    if isinstance(law, UniformLaw):
        return np.full(cov.size, 1.0 / cov.size)
    if isinstance(law, TruncatedGaussianLaw):
        k = cov.cells_per_axis
        edges = np.arange(k + 1) / k
        axis_masses = []
        for m, s in zip(law.mean, law.sd):
            a, b = (0.0 - m) / s, (1.0 - m) / s
            cdf = stats.truncnorm.cdf(edges, a, b, loc=m, scale=s)
            axis_masses.append(np.diff(cdf))
        idx = np.stack(np.unravel_index(np.arange(cov.size), (k,) * space.dim), axis=1)
        out = np.ones(cov.size)
        for axis in range(space.dim):
            out *= axis_masses[axis][idx[:, axis]]
        return out
    raise InvalidParameterError(f"unsupported law {type(law).__name__}")


def law_dim(law):
    if isinstance(law, DiscreteMeasure):
        return law.dim
    if isinstance(law, (UniformLaw, TruncatedGaussianLaw)):
        return law.dim
    if isinstance(law, MixtureLaw):
        return law.atoms.dim
    raise InvalidParameterError(f"unsupported law {type(law).__name__}")


def as_points(sample, space=None):
    """Raw point array from an EmpiricalMeasure or array-like."""
    if isinstance(sample, EmpiricalMeasure):
        return sample.points
    pts = np.asarray(sample)
    if pts.dtype.kind in "iu":
        return pts.astype(np.int64).ravel()
    if isinstance(space, Hypercube):
        return as_hypercube_points(pts, space.dim)
    pts = np.asarray(pts, float)
    return pts[:, None] if pts.ndim == 1 else pts


__all__ = [
    "DiscreteMeasure",
    "EmpiricalMeasure",
    "SeededRng",
    "UniformLaw",
    "TruncatedGaussianLaw",
    "MixtureLaw",
    "sample_iid",
    "pushforward",
    "law_cell_masses",
    "law_dim",
    "as_points",
    "FiniteSpace",
]
