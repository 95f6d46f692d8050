import itertools

import numpy as np
import pytest

from wpcr.errors import InvalidInputError, InvalidParameterError
from wpcr.measures import DiscreteMeasure, SeededRng, UniformLaw
from wpcr.metric import FiniteSpace, Hypercube
from wpcr.transport import (
    quotient_distance,
    wasserstein,
    wasserstein_1d,
    wasserstein_to_point_mass,
    wasserstein_vs_uniform01,
)

from conftest import random_measure

SPACE = Hypercube(1)


def brute_force_tuple_cost(xs, ys, p, space):
    """Exhaustive minimum over all permutations; the independent oracle."""
    n = len(xs)
    cost = space.pairwise(xs, ys) ** p
    best = np.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, cost[np.arange(n), perm].mean())
    return best ** (1.0 / p)


def test_identical_measures_zero_cost(rng):
    m = random_measure(rng.gen, 6)
    cost, plan = wasserstein(m, m, 2.0, SPACE)
    assert cost == pytest.approx(0.0, abs=1e-12)
    # zero cost forces the diagonal plan when atoms are distinct
    off_diag = plan.coupling - np.diag(np.diag(plan.coupling))
    assert np.all(np.abs(off_diag) < 1e-12)


def test_point_masses_give_plain_distance():
    mu = DiscreteMeasure.point_mass(np.array([0.1]))
    nu = DiscreteMeasure.point_mass(np.array([0.9]))
    for p in (1.0, 1.7, 3.0):
        cost, _ = wasserstein(mu, nu, p, SPACE)
        assert cost == pytest.approx(0.8, abs=1e-12)


def test_lp_matches_brute_force_uniform_weights(rng):
    gen = rng.gen
    for _ in range(25):
        n = int(gen.integers(2, 6))
        xs = gen.random((n, 1))
        ys = gen.random((n, 1))
        mu = DiscreteMeasure(xs)
        nu = DiscreteMeasure(ys)
        for p in (1.0, 2.0):
            oracle = brute_force_tuple_cost(xs, ys, p, SPACE)
            cost, plan = wasserstein(mu, nu, p, SPACE)
            assert cost == pytest.approx(oracle, abs=1e-9)
            plan.validate(SPACE)


def test_quotient_equals_brute_force_and_lp(rng):
    gen = rng.gen
    for _ in range(25):
        n = int(gen.integers(2, 7))
        xs = gen.random((n, 1))
        ys = gen.random((n, 1))
        p = float(gen.choice([1.0, 2.0]))
        oracle = brute_force_tuple_cost(xs, ys, p, SPACE)
        quot = quotient_distance(xs, ys, p, SPACE)
        lp, _ = wasserstein(DiscreteMeasure(xs), DiscreteMeasure(ys), p, SPACE)
        assert quot == pytest.approx(oracle, abs=1e-9)
        assert quot == pytest.approx(lp, abs=1e-9)


def test_quotient_zero_for_permuted_tuple(rng):
    xs = rng.gen.random((8, 1))
    ys = xs[rng.gen.permutation(8)]
    assert quotient_distance(xs, ys, 1.0, SPACE) == pytest.approx(0.0, abs=1e-12)


def test_quotient_length_mismatch():
    with pytest.raises(InvalidInputError):
        quotient_distance(np.zeros((3, 1)), np.zeros((4, 1)), 1.0, SPACE)


def test_wasserstein_1d_hand_value():
    mu = DiscreteMeasure(np.array([0.0, 0.5, 1.0]))
    nu = DiscreteMeasure.point_mass(np.array([0.5]))
    assert wasserstein_1d(mu, nu, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert wasserstein_1d(mu, mu, 2.0) == pytest.approx(0.0, abs=1e-12)
    d0 = DiscreteMeasure.point_mass(np.array([0.0]))
    d1 = DiscreteMeasure.point_mass(np.array([1.0]))
    assert wasserstein_1d(d0, d1, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_wasserstein_1d_matches_lp(rng):
    gen = rng.gen
    for _ in range(40):
        mu = random_measure(gen, int(gen.integers(1, 12)))
        nu = random_measure(gen, int(gen.integers(1, 12)))
        for p in (1.0, 2.0):
            closed = wasserstein_1d(mu, nu, p)
            lp, _ = wasserstein(mu, nu, p, SPACE)
            assert closed == pytest.approx(lp, abs=1e-9)


def test_metric_axioms_on_sampled_triples(rng):
    gen = rng.gen
    for _ in range(20):
        a = random_measure(gen, 5)
        b = random_measure(gen, 5)
        c = random_measure(gen, 5)
        dab = wasserstein_1d(a, b, 1.0)
        dba = wasserstein_1d(b, a, 1.0)
        assert dab == pytest.approx(dba, abs=1e-12)
        dac = wasserstein_1d(a, c, 1.0)
        dcb = wasserstein_1d(c, b, 1.0)
        assert dab <= dac + dcb + 1e-9


def test_monotone_in_p(rng):
    gen = rng.gen
    for _ in range(20):
        a = random_measure(gen, 6)
        b = random_measure(gen, 6)
        w1 = wasserstein_1d(a, b, 1.0)
        w2 = wasserstein_1d(a, b, 2.0)
        w3 = wasserstein_1d(a, b, 3.0)
        assert w1 <= w2 + 1e-12
        assert w2 <= w3 + 1e-12


def test_convexity_of_cost_power(rng):
    # W_p^p(lam*m1 + (1-lam)*m2, nu) <= lam*W_p^p(m1,nu) + (1-lam)*W_p^p(m2,nu)
    gen = rng.gen
    for _ in range(20):
        m1 = random_measure(gen, 5)
        m2 = random_measure(gen, 5)
        nu = random_measure(gen, 5)
        lam = float(gen.random())
        mix = DiscreteMeasure(
            np.concatenate([m1.points, m2.points]),
            np.concatenate([lam * m1.weights, (1 - lam) * m2.weights]),
        )
        for p in (1.0, 2.0):
            lhs = wasserstein_1d(mix, nu, p) ** p
            rhs = lam * wasserstein_1d(m1, nu, p) ** p + (1 - lam) * wasserstein_1d(
                m2, nu, p
            ) ** p
            assert lhs <= rhs + 1e-9


def test_finite_space_transport():
    dist = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    space = FiniteSpace(("a", "b", "c"), dist)
    mu = DiscreteMeasure(np.array([0, 2], dtype=np.int64), [0.5, 0.5])
    nu = DiscreteMeasure(np.array([1], dtype=np.int64), [1.0])
    cost, _ = wasserstein(mu, nu, 1.0, space)
    assert cost == pytest.approx(1.0, abs=1e-10)


def test_vs_uniform_reference():
    nu = DiscreteMeasure.point_mass(np.array([0.5]))
    assert wasserstein_vs_uniform01(nu, 1.0) == pytest.approx(0.25, abs=1e-14)
    # empirical convergence: fine grid measure is close to the uniform law
    grid = DiscreteMeasure(np.linspace(0.0005, 0.9995, 1000))
    assert wasserstein_vs_uniform01(grid, 1.0) < 1e-3


def test_point_mass_distance_aggregation(rng):
    p0 = DiscreteMeasure.point_mass(np.array([0.5]))
    q02 = DiscreteMeasure.point_mass(np.array([0.7]))
    q04 = DiscreteMeasure.point_mass(np.array([0.9]))
    # distances 0.2 and 0.4 at p=1 average to 0.3
    val = wasserstein_to_point_mass([q02, q04], p0, 1.0, SPACE)
    assert val == pytest.approx(0.3, abs=1e-12)
    assert wasserstein_to_point_mass([p0, p0], p0, 2.0, SPACE) == pytest.approx(0.0)
    single = wasserstein_to_point_mass([q02], p0, 1.0, SPACE)
    assert single == pytest.approx(0.2, abs=1e-12)


def test_invalid_inputs():
    mu = DiscreteMeasure.point_mass(np.array([0.5]))
    with pytest.raises(InvalidParameterError):
        wasserstein(mu, mu, 0.5, SPACE)
    with pytest.raises(InvalidInputError):
        wasserstein_to_point_mass([], mu, 1.0, SPACE)
    two_d = DiscreteMeasure(np.array([[0.1, 0.2]]), [1.0])
    with pytest.raises(InvalidInputError):
        wasserstein_1d(two_d, two_d, 1.0)
