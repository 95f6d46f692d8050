"""Hot numeric kernels with numba-jitted loops and pure-numpy fallbacks.

The Monte Carlo experiments evaluate one-dimensional transport costs tens of
thousands of times, so these inner loops are compiled with numba by default.
Set the environment variable WPCR_NO_NUMBA=1 before import to force the
numpy path (the benchmark in benchmarks/bench_kernels.py compares both).

All kernels take sorted supports and cumulative weights; the cumulative
arrays must end at 1.0 (callers normalise). The jitted loops accumulate with
Kahan compensation so costs stay reproducible to ~1e-15 for supports up to
1e4 atoms.
"""

import os

import numpy as np

USE_NUMBA = not os.environ.get("WPCR_NO_NUMBA")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def quantile_cost_pp_py(xs, cw, ys, cv, p):
    """p-th power transport cost between two 1-D discrete measures.

    Integrates |F^{-1}(t) - G^{-1}(t)|^p over t in (0, 1), where the inverse
    CDFs are piecewise constant with breakpoints cw and cv.
    """
    t = np.union1d(cw, cv)
    t = t[t > 0.0]
    edges = np.concatenate(([0.0], t))
    dt = np.diff(edges)
    mid = edges[:-1] + 0.5 * dt
    xi = xs[np.minimum(np.searchsorted(cw, mid, side="left"), len(xs) - 1)]
    yi = ys[np.minimum(np.searchsorted(cv, mid, side="left"), len(ys) - 1)]
    return float(np.sum(dt * np.abs(xi - yi) ** p))


def uniform_cost_pp_py(xs, cw, p):
    """p-th power transport cost between a 1-D discrete measure and U[0,1].

    The uniform quantile function is the identity, so each atom x_k with
    quantile interval [a, b] contributes the exact integral of |x_k - t|^p.
    """
    lo = np.concatenate(([0.0], cw[:-1]))
    hi = cw
    q = p + 1.0
    below = xs <= lo
    above = xs >= hi
    inside = ~(below | above)
    out = np.empty_like(xs)
    out[below] = (hi[below] - xs[below]) ** q - (lo[below] - xs[below]) ** q
    out[above] = (xs[above] - lo[above]) ** q - (xs[above] - hi[above]) ** q
    out[inside] = (xs[inside] - lo[inside]) ** q + (hi[inside] - xs[inside]) ** q
    return float(np.sum(out) / q)


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _quantile_cost_pp_nb(xs, cw, ys, cv, p):
        n = len(xs)
        m = len(ys)
        i = 0
        j = 0
        t = 0.0
        acc = 0.0
        comp = 0.0  # Kahan compensation
        while True:
            ti = cw[i] if i < n else 1.0
            tj = cv[j] if j < m else 1.0
            tn = ti if ti < tj else tj
            d = xs[i] - ys[j]
            if d < 0.0:
                d = -d
            term = (tn - t) * d**p
            y = term - comp
            s = acc + y
            comp = (s - acc) - y
            acc = s
            t = tn
            if ti <= tn and i < n - 1:
                i += 1
            if tj <= tn and j < m - 1:
                j += 1
            if t >= 1.0:
                break
        return acc

    @njit(cache=True, nogil=True)
    def _uniform_cost_pp_nb(xs, cw, p):
        q = p + 1.0
        lo = 0.0
        acc = 0.0
        comp = 0.0
        for k in range(len(xs)):
            hi = cw[k]
            x = xs[k]
            if x <= lo:
                term = ((hi - x) ** q - (lo - x) ** q) / q
            elif x >= hi:
                term = ((x - lo) ** q - (x - hi) ** q) / q
            else:
                term = ((x - lo) ** q + (hi - x) ** q) / q
            y = term - comp
            s = acc + y
            comp = (s - acc) - y
            acc = s
            lo = hi
        return acc

    quantile_cost_pp = _quantile_cost_pp_nb
    uniform_cost_pp = _uniform_cost_pp_nb
else:
    quantile_cost_pp = quantile_cost_pp_py
    uniform_cost_pp = uniform_cost_pp_py
