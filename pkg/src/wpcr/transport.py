"""Exact p-Wasserstein distances and couplings between discrete measures.

The general solver is the discrete optimal-transport linear program solved
exactly with HiGHS; same-size uniform tuples go through an assignment solver
(the two agree, which the test suite checks against a brute-force
permutation oracle). 1-D instances have a closed form via quantile
functions, which is the fast path the Monte Carlo experiments rely on.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog

from . import kernels
from .errors import InvalidInputError, InvalidParameterError, NumericFailureError
from .measures import DiscreteMeasure, UniformLaw, as_points

MARGINAL_TOL = 1e-10


@dataclass
class TransportPlan:
    """Optimal coupling between two discrete measures for cost d(x,y)^p."""

    row_measure: DiscreteMeasure
    col_measure: DiscreteMeasure
    coupling: np.ndarray
    cost: float
    p: float

    def validate(self, space):
        row = self.coupling.sum(axis=1)
        col = self.coupling.sum(axis=0)
        if np.max(np.abs(row - self.row_measure.weights)) > MARGINAL_TOL:
            raise NumericFailureError("coupling row marginals drifted")
        if np.max(np.abs(col - self.col_measure.weights)) > MARGINAL_TOL:
            raise NumericFailureError("coupling column marginals drifted")
        cmat = space.pairwise(self.row_measure.points, self.col_measure.points) ** self.p
        if abs(float(np.sum(self.coupling * cmat)) - self.cost**self.p) > MARGINAL_TOL:
            raise NumericFailureError("coupling cost inconsistent with reported cost")

    def to_csv_rows(self):
        rows = []
        for i, j in zip(*np.nonzero(self.coupling)):
            rows.append((int(i), int(j), float(self.coupling[i, j])))
        return rows


def _check_p(p):
    if not p >= 1.0:
        raise InvalidParameterError("order p must be >= 1")


def wasserstein(mu, nu, p, space):
    """Exact p-Wasserstein distance and an optimal plan, via the OT linear program."""
    _check_p(p)
    if not isinstance(mu, DiscreteMeasure) or not isinstance(nu, DiscreteMeasure):
        raise InvalidInputError("wasserstein expects DiscreteMeasure inputs")
    n, m = mu.n_atoms, nu.n_atoms
    cost_matrix = space.pairwise(mu.points, nu.points) ** p
    var = np.arange(n * m)
    rows = np.concatenate([np.repeat(np.arange(n), m), n + np.tile(np.arange(m), n)])
    a_eq = sp.coo_matrix(
        (np.ones(2 * n * m), (rows, np.concatenate([var, var]))), shape=(n + m, n * m)
    ).tocsr()
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(cost_matrix.ravel(), A_eq=a_eq, b_eq=b_eq, method="highs")
    if res.status != 0:
        raise NumericFailureError(f"LP solver failed: {res.message}", {"status": res.status})
    plan = np.maximum(res.x.reshape(n, m), 0.0)
    costp = max(float(np.sum(plan * cost_matrix)), 0.0)
    cost = costp ** (1.0 / p)
    return cost, TransportPlan(mu, nu, plan, cost, float(p))


def _quantile_form(mu):
    xs = mu.coords_1d()
    if np.any(np.diff(xs) < 0):
        order = np.argsort(xs, kind="stable")
        xs, w = xs[order], mu.weights[order]
    else:
        w = mu.weights
    cw = np.cumsum(w)
    cw[-1] = 1.0
    return np.ascontiguousarray(xs), cw


def wasserstein_1d(mu, nu, p):
    """Closed-form p-Wasserstein distance on the real line.

    cost^p integrates |F_mu^{-1} - F_nu^{-1}|^p over (0,1) exactly, using the
    piecewise-constant quantile functions of the two discrete measures.
    """
    _check_p(p)
    xs, cw = _quantile_form(mu)
    ys, cv = _quantile_form(nu)
    return kernels.quantile_cost_pp(xs, cw, ys, cv, float(p)) ** (1.0 / p)


def wasserstein_vs_uniform01(mu, p):
    """Exact p-Wasserstein distance between a 1-D discrete measure and U[0,1]."""
    _check_p(p)
    xs, cw = _quantile_form(mu)
    return kernels.uniform_cost_pp(xs, cw, float(p)) ** (1.0 / p)


def quotient_distance(x_tuple, y_tuple, p, space):
    """Optimal-permutation average cost between two equal-length tuples.

    Computed with an exact assignment solver; by the Birkhoff theorem this
    equals the p-Wasserstein distance of the two empirical measures.
    """
    _check_p(p)
    xs = as_points(x_tuple, space)
    ys = as_points(y_tuple, space)
    if len(xs) != len(ys):
        raise InvalidInputError("tuples must have equal length")
    cost_matrix = space.pairwise(xs, ys) ** p
    r, c = linear_sum_assignment(cost_matrix)
    return float(np.mean(cost_matrix[r, c]) ** (1.0 / p))


def distance_to_reference(mu, ref, p, space=None):
    """W_p(mu, ref) where ref is a DiscreteMeasure or the uniform law on [0,1]."""
    if isinstance(ref, UniformLaw):
        if ref.dim != 1:
            raise InvalidParameterError("closed-form reference only for uniform on [0,1]")
        return wasserstein_vs_uniform01(mu, p)
    if isinstance(ref, DiscreteMeasure):
        if not mu.is_labels and mu.dim == 1 and not ref.is_labels and ref.dim == 1:
            return wasserstein_1d(mu, ref, p)
        if space is None:
            raise InvalidParameterError("multi-D distances need the metric space")
        return wasserstein(mu, ref, p, space)[0]
    raise InvalidParameterError(f"unsupported reference {type(ref).__name__}")


def wasserstein_to_point_mass(posterior_draws, p0, p, space=None):
    """Distance between a sampled law over measures and the Dirac at p0.

    Equals the p-th root of the mean p-th power distance of the draws to p0;
    exact in the limit of infinitely many draws.
    """
    _check_p(p)
    draws = list(posterior_draws)
    if not draws:
        raise InvalidInputError("need at least one posterior draw")
    dists = np.array([distance_to_reference(d, p0, p, space) for d in draws])
    return float(np.mean(dists**p) ** (1.0 / p))
