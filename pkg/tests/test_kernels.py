"""The jitted kernels and their numpy fallbacks must agree to float precision."""

import numpy as np

from wpcr import kernels
from wpcr.measures import SeededRng


def _random_quantile_form(gen, n):
    xs = np.sort(gen.random(n))
    w = gen.random(n) + 0.01
    cw = np.cumsum(w / w.sum())
    cw[-1] = 1.0
    return xs, cw


def test_quantile_cost_matches_fallback():
    gen = SeededRng(1).gen
    for _ in range(50):
        xs, cw = _random_quantile_form(gen, int(gen.integers(1, 40)))
        ys, cv = _random_quantile_form(gen, int(gen.integers(1, 40)))
        for p in (1.0, 1.5, 2.0):
            fast = kernels.quantile_cost_pp(xs, cw, ys, cv, p)
            slow = kernels.quantile_cost_pp_py(xs, cw, ys, cv, p)
            assert abs(fast - slow) < 1e-13


def test_uniform_cost_matches_fallback():
    gen = SeededRng(2).gen
    for _ in range(50):
        xs, cw = _random_quantile_form(gen, int(gen.integers(1, 40)))
        for p in (1.0, 2.0):
            fast = kernels.uniform_cost_pp(xs, cw, p)
            slow = kernels.uniform_cost_pp_py(xs, cw, p)
            assert abs(fast - slow) < 1e-13


def test_uniform_cost_known_value():
    # point mass at 0.5 against U[0,1]: integral of |0.5 - t| dt = 1/4
    xs = np.array([0.5])
    cw = np.array([1.0])
    assert abs(kernels.uniform_cost_pp(xs, cw, 1.0) - 0.25) < 1e-15
    # and for p=2: integral of (0.5 - t)^2 dt = 1/12
    assert abs(kernels.uniform_cost_pp(xs, cw, 2.0) - 1.0 / 12.0) < 1e-15


def test_quantile_cost_point_masses():
    xs = np.array([0.0])
    ys = np.array([1.0])
    one = np.array([1.0])
    for p in (1.0, 3.0):
        assert abs(kernels.quantile_cost_pp(xs, one, ys, one, p) - 1.0) < 1e-15
