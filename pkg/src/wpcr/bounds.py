"""Assembly of the contraction bound, rate exponents, and the Bernoulli
concentration-ratio machinery used to ceiling posterior-mean deviations.

The profile functions are built from a base measure chi on [0,1]: phi(h) is
the smallest mass chi gives to a width-h window fully inside [0,1], g(h) the
smallest Bernoulli relative entropy across a gap of h, and psi(h) the window
mass at the shrunken width h* = min(h, g(h)*(g(h) - 2h^2)/2). The ratio
R(n,p,h) of in-window to out-of-window likelihood mass then dominates
psi(h)*exp(2nh^2), which yields the bound h + exp(-2nh^2)/psi(h) on
|phi - posterior mean|.

Beta-law integrals go through regularized incomplete-beta differences (log
domain, no overflow up to n ~ 1e6); psi's small-h exponent is detected by a
log-log fit rather than assumed.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincc, logsumexp

from .errors import (
    HypothesisViolatedError,
    InvalidParameterError,
    NumericFailureError,
    UnsupportedMeasureError,
)
from .measures import DiscreteMeasure


def theorem_bound(gc, l_n, delta, m_n, v_n, diam, p):
    """Assembled contraction bound:
    gc + 2*(2 + l_n)*delta + diam*(0.5*(m_n + v_n))^(1/p)."""
    vals = [gc, l_n, delta, m_n, v_n, diam, p]
    if not all(np.isfinite(vals)) or min(gc, l_n, m_n, v_n, diam) < 0 or delta <= 0:
        raise InvalidParameterError("bound inputs must be finite and nonnegative")
    if p < 1:
        raise InvalidParameterError("order p must be >= 1")
    return gc + 2.0 * (2.0 + l_n) * delta + diam * (0.5 * (m_n + v_n)) ** (1.0 / p)


@dataclass(frozen=True)
class RateExponents:
    d: float
    s: float
    alpha: float
    p: float
    beta_opt: float
    rate_exponent: float

    def delta_schedule(self, n):
        """Recommended covering parameter delta_n = n^(-beta_opt)."""
        return np.asarray(n, float) ** (-self.beta_opt)


def corollary_rate(d, s, alpha, p):
    """Optimal covering exponent and the resulting polynomial rate exponent.

    Balancing the covering term against the moment-aggregate term gives
    beta_opt = (alpha + p*s)/(d + p) and rate exponent (alpha - d*s)/(d + p);
    requires alpha > s*d.
    """
    if d <= 0 or s < 0 or p < 1:
        raise InvalidParameterError("need d > 0, s >= 0, p >= 1")
    if not alpha > s * d:
        raise HypothesisViolatedError(f"alpha={alpha} must exceed s*d={s * d}")
    beta_opt = (alpha + p * s) / (d + p)
    rate = (alpha - d * s) / (d + p)
    return RateExponents(float(d), float(s), float(alpha), float(p), beta_opt, rate)


def assembled_bound_curve(rates, n_grid, mv_constant, diam=1.0, covering_sizes=None):
    """Bound values (gc term excluded) along the recommended delta schedule.

    The moment aggregate is plugged in at its ceiling mv_constant * N * n^(-alpha)
    with N the covering size at delta_n (supplied, or the idealized
    (1/delta)^d). Returns (values, fitted log-log slope).
    """
    n_arr = np.asarray(list(n_grid), float)
    deltas = rates.delta_schedule(n_arr)
    if covering_sizes is None:
        sizes = (1.0 / deltas) ** rates.d
    else:
        sizes = np.asarray(covering_sizes, float)
    l_n = n_arr**rates.s
    vals = np.array(
        [
            theorem_bound(0.0, l, dl, mv_constant * size * n ** (-rates.alpha), 0.0, diam, rates.p)
            for n, l, dl, size in zip(n_arr, l_n, deltas, sizes)
        ]
    )
    slope = float(np.polyfit(np.log(n_arr), np.log(vals), 1)[0])
    return vals, slope


# ---------------------------------------------------------------------------
# base measures on [0,1]


@dataclass(frozen=True)
class BetaChi:
    """Beta(a, b) base measure; (1,1) is the uniform law."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise InvalidParameterError("Beta parameters must be positive")

    def window_mass(self, lo, hi):
        lo = np.clip(lo, 0.0, 1.0)
        hi = np.clip(hi, 0.0, 1.0)
        return np.maximum(betainc(self.a, self.b, hi) - betainc(self.a, self.b, lo), 0.0)


@dataclass(frozen=True)
class DiscreteChi:
    measure: DiscreteMeasure

    def window_mass(self, lo, hi):
        t = self.measure.coords_1d()
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        inside = (t[None, :] >= np.atleast_1d(lo)[:, None]) & (
            t[None, :] <= np.atleast_1d(hi)[:, None]
        )
        out = inside @ self.measure.weights
        return out if np.ndim(lo) else float(out[0])


def bernoulli_relative_entropy(p, t):
    """H(p,t) - H(p,p) with the boundary conventions H(0,t) = -log(1-t),
    H(1,t) = -log t; infinite when t hits {0,1} against an interior p."""
    p = np.asarray(p, float)
    t = np.asarray(t, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term1 = np.where(p > 0, p * (np.log(p) - np.log(t)), 0.0)
        term2 = np.where(p < 1, (1.0 - p) * (np.log1p(-p) - np.log1p(-t)), 0.0)
    return term1 + term2


def _two_stage_min(fn, lo, hi, resolution):
    """Coarse grid then refined grid around the incumbent; returns the min value."""
    grid = np.linspace(lo, hi, resolution)
    vals = np.asarray(fn(grid), float)
    i = int(np.nanargmin(vals))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, resolution - 1)]
    fine = np.linspace(left, right, resolution)
    fvals = np.asarray(fn(fine), float)
    return float(min(np.nanmin(vals), np.nanmin(fvals)))


class DFProfile:
    """Window-mass and entropy-gap profiles of a base measure on [0,1]."""

    def __init__(self, chi, resolution=400):
        if isinstance(chi, DiscreteChi):
            raise UnsupportedMeasureError(
                "discrete base measures have zero-mass windows at small widths"
            )
        if not isinstance(chi, BetaChi):
            raise InvalidParameterError("supported base measures: BetaChi, DiscreteChi")
        self.chi = chi
        self.resolution = int(resolution)
        self.h_grid = np.linspace(0.01, 0.24, 47)
        self.phi_vals = np.array([self.phi(h) for h in self.h_grid])
        self.g_vals = np.array([self.entropy_gap(h) for h in self.h_grid])
        self.psi_vals = np.array([self.psi(h) for h in self.h_grid])

    def phi(self, h):
        """Smallest chi-mass of a width-h window [p, p+h] inside [0,1]."""
        h = float(h)
        if h <= 0.0:
            return 0.0
        if h >= 1.0:
            return 1.0
        return _two_stage_min(
            lambda p: self.chi.window_mass(p, p + h), 0.0, 1.0 - h, self.resolution
        )

    def entropy_gap(self, h):
        """Smallest Bernoulli relative entropy across a parameter gap of h."""
        h = float(h)
        if h <= 0.0:
            return 0.0
        if h >= 1.0:
            return float("inf")
        return _two_stage_min(
            lambda p: bernoulli_relative_entropy(p, p + h), 0.0, 1.0 - h, self.resolution
        )

    def h_star(self, h):
        g = self.entropy_gap(h)
        return min(h, max(0.5 * g * (g - 2.0 * h * h), 0.0))

    def psi(self, h):
        return self.phi(self.h_star(h))

    def psi_exponent(self):
        """Fitted small-h exponent of psi (log-log fit over the cached grid)."""
        keep = self.psi_vals > 0
        if keep.sum() < 2:
            raise NumericFailureError("psi vanished on the whole grid")
        return float(
            np.polyfit(np.log(self.h_grid[keep]), np.log(self.psi_vals[keep]), 1)[0]
        )


def df_profile(chi, resolution=400):
    """Profile object for a base measure; rejects measures with zero-mass windows."""
    profile = DFProfile(chi, resolution)
    if profile.phi_vals.min() <= 0.0:
        raise UnsupportedMeasureError("base measure has a zero-mass window on the grid")
    return profile


def df_ratio(chi, n, p, h):
    """Likelihood-mass ratio of the window [p-h, p+h] against its complement.

    For Beta base measures this is exact through regularized incomplete-beta
    values (the normalizations cancel); discrete base measures are summed in
    the log domain.
    """
    if not (0.0 <= p <= 1.0) or h <= 0.0:
        raise InvalidParameterError("need p in [0,1] and h > 0")
    lo = max(p - h, 0.0)
    hi = min(p + h, 1.0)
    if isinstance(chi, BetaChi):
        a_post = n * p + chi.a
        b_post = n * (1.0 - p) + chi.b
        inside = float(betainc(a_post, b_post, hi) - betainc(a_post, b_post, lo))
        outside = float(betainc(a_post, b_post, lo) + betaincc(a_post, b_post, hi))
        if outside <= 0.0:
            if inside <= 0.0:
                raise NumericFailureError(
                    "both window integrals underflowed", {"n": n, "p": p, "h": h}
                )
            return float("inf")
        return inside / outside
    if isinstance(chi, DiscreteChi):
        t = chi.measure.coords_1d()
        w = chi.measure.weights
        with np.errstate(divide="ignore", invalid="ignore"):
            logterm = np.log(w) + n * p * np.log(t) + n * (1.0 - p) * np.log1p(-t)
        logterm = np.where(np.isnan(logterm), -np.inf, logterm)
        in_win = (t >= lo) & (t <= hi)
        if not np.any(~in_win) or np.all(logterm[~in_win] == -np.inf):
            return float("inf")
        if not np.any(in_win) or np.all(logterm[in_win] == -np.inf):
            return 0.0
        return float(np.exp(logsumexp(logterm[in_win]) - logsumexp(logterm[~in_win])))
    raise InvalidParameterError(f"unsupported base measure {type(chi).__name__}")


def _golden_section(fn, lo, hi, tol=1e-10, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol * max(abs(a), abs(b), 1.0):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def df_moment_bound(profile, n, phi_hat=None):
    """Minimized ceiling h + exp(-2nh^2)/psi(h) over h in (0, 1/4).

    Scans a log grid and refines around the incumbent by golden-section
    search. The returned value bounds |phi_hat - posterior mean| for every
    realized phi_hat, so the argument is only echoed for reporting.
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")

    def objective(h):
        psi = profile.psi(h)
        if psi <= 0.0:
            return float("inf")
        return h + math.exp(-2.0 * n * h * h) / psi

    grid = np.logspace(math.log10(1e-4), math.log10(0.2499), 120)
    vals = np.array([objective(h) for h in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    h_opt, val = _golden_section(objective, lo, hi, tol=1e-8)
    if val > vals[i]:
        h_opt, val = float(grid[i]), float(vals[i])
    return float(h_opt), float(val)
