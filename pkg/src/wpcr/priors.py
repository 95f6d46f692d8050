"""Nonparametric priors: Dirichlet process and normalized extended Gamma process.

The DP side is fully conjugate: its predictive is a two-component mixture and
posterior draws come from truncated stick-breaking with a certifiable tail
mass. The extended Gamma side works through the latent normalization
variable: its density on (0, infinity) is integrated by adaptive quadrature
after mapping to (0,1), with all integrands evaluated in the log domain so
sample sizes in the hundreds stay finite.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar
from scipy.special import betaln

from .errors import InvalidInputError, InvalidParameterError, NumericFailureError
from .measures import (
    DiscreteMeasure,
    EmpiricalMeasure,
    MixtureLaw,
    UniformLaw,
    _dedup,
    _draw,
)
from .transport import wasserstein, wasserstein_1d

GAUSS_LEGENDRE_NODES = 128


@dataclass(frozen=True)
class DirichletProcessPrior:
    """Dirichlet process with concentration `total_mass` and base law `base`."""

    total_mass: float
    base: object

    def __post_init__(self):
        if not self.total_mass > 0.0:
            raise InvalidParameterError("total mass must be positive")


@dataclass(frozen=True)
class ConstantBeta:
    value: float

    @property
    def lipschitz(self):
        return 0.0

    @property
    def lower(self):
        return self.value

    @property
    def upper(self):
        return self.value

    def __call__(self, points):
        pts = np.atleast_1d(np.asarray(points, float))
        n = pts.shape[0] if pts.ndim > 1 else len(pts)
        return np.full(n, self.value)


def _first_coord(points):
    pts = np.asarray(points, float)
    return pts[:, 0] if pts.ndim == 2 else np.atleast_1d(pts)


@dataclass(frozen=True)
class AffineBeta:
    """intercept + slope * z on [0,1], clipped to [lower_clip, upper_clip]."""

    intercept: float
    slope: float
    lower_clip: float = -np.inf
    upper_clip: float = np.inf

    @property
    def lipschitz(self):
        return abs(self.slope)

    @property
    def lower(self):
        return max(min(self.intercept, self.intercept + self.slope), self.lower_clip)

    @property
    def upper(self):
        return min(max(self.intercept, self.intercept + self.slope), self.upper_clip)

    def __call__(self, points):
        z = _first_coord(points)
        return np.clip(self.intercept + self.slope * z, self.lower_clip, self.upper_clip)


@dataclass(frozen=True)
class SinusoidalBeta:
    """base + amplitude * sin(2 pi freq z); requires base > |amplitude|."""

    base: float
    amplitude: float
    frequency: float = 1.0

    def __post_init__(self):
        if not self.base > abs(self.amplitude):
            raise InvalidParameterError("sinusoidal beta must stay positive")

    @property
    def lipschitz(self):
        return abs(self.amplitude) * 2.0 * math.pi * self.frequency

    @property
    def lower(self):
        return self.base - abs(self.amplitude)

    @property
    def upper(self):
        return self.base + abs(self.amplitude)

    def __call__(self, points):
        z = _first_coord(points)
        return self.base + self.amplitude * np.sin(2.0 * math.pi * self.frequency * z)


@dataclass(frozen=True)
class ExtendedGammaPrior:
    """Normalized extended Gamma process prior.

    `alpha` is the shape of the intensity's spatial measure (a probability
    measure: DiscreteMeasure, or the uniform law for quadrature-based
    evaluation) and `a` its total mass. `beta` maps points to positive
    reals; its Lipschitz constant and bounds are taken from the family
    object unless given explicitly (mandatory for bare callables).
    """

    space: object
    alpha: object
    a: float
    beta: object
    lipschitz: float = None
    beta_min: float = None
    beta_max: float = None

    def __post_init__(self):
        if not self.a > 0.0:
            raise InvalidParameterError("alpha total mass must be positive")
        lip = self.lipschitz if self.lipschitz is not None else getattr(self.beta, "lipschitz", None)
        lo = self.beta_min if self.beta_min is not None else getattr(self.beta, "lower", None)
        hi = self.beta_max if self.beta_max is not None else getattr(self.beta, "upper", None)
        if lip is None or lo is None or hi is None:
            raise InvalidParameterError(
                "beta bounds (lipschitz, beta_min, beta_max) required for custom callables"
            )
        if not (0.0 < lo <= hi):
            raise InvalidParameterError("beta bounds must satisfy 0 < beta_min <= beta_max")
        object.__setattr__(self, "lipschitz", float(lip))
        object.__setattr__(self, "beta_min", float(lo))
        object.__setattr__(self, "beta_max", float(hi))

    def check_beta(self, rng, n_samples=256):
        """Spot-check the bound and Lipschitz invariants on sampled pairs."""
        pts = _draw(UniformLaw(getattr(self.space, "dim", 1)), n_samples, rng.gen)
        vals = np.asarray(self.beta(pts), float)
        if np.any(vals < self.beta_min - 1e-9) or np.any(vals > self.beta_max + 1e-9):
            raise InvalidParameterError("beta violates its stated bounds")
        other = _draw(UniformLaw(getattr(self.space, "dim", 1)), n_samples, rng.gen)
        d = np.linalg.norm(pts - other, axis=1)
        dv = np.abs(vals - np.asarray(self.beta(other), float))
        if np.any(dv > self.lipschitz * d + 1e-9):
            raise InvalidParameterError("beta violates its stated Lipschitz constant")


def dp_predictive(prior, sample):
    """Predictive law of the DP: mixture of the base and the empirical measure.

    Weights are q/(q+n) on the base and n/(q+n) on the sample. Discrete
    bases collapse to a single DiscreteMeasure; continuous bases return a
    MixtureLaw tagging the continuous part.
    """
    q = prior.total_mass
    if sample is None or (isinstance(sample, EmpiricalMeasure) and sample.n == 0):
        return prior.base
    emp = sample.as_measure()
    n = sample.n
    w_base = q / (q + n)
    base = prior.base
    if isinstance(base, DiscreteMeasure):
        pts = np.concatenate([base.points, emp.points])
        w = np.concatenate([w_base * base.weights, (1.0 - w_base) * emp.weights])
        return DiscreteMeasure(pts, w)
    if isinstance(base, MixtureLaw):
        pts = np.concatenate([base.atoms.points, emp.points])
        w = np.concatenate(
            [w_base * base.atom_weight * base.atoms.weights, (1.0 - w_base) * emp.weights]
        )
        atom_weight = w_base * base.atom_weight + (1.0 - w_base)
        return MixtureLaw(
            atoms=DiscreteMeasure(pts, w / atom_weight),
            atom_weight=atom_weight,
            continuous=base.continuous,
        )
    return MixtureLaw(atoms=emp, atom_weight=1.0 - w_base, continuous=base)


def stick_tail_mass(concentration, truncation):
    """Expected stick-breaking mass beyond the truncation level."""
    return (concentration / (concentration + 1.0)) ** truncation


def truncation_for_tail(concentration, tail):
    """Smallest truncation whose expected leftover mass is below `tail`."""
    return max(1, math.ceil(math.log(tail) / math.log(concentration / (concentration + 1.0))))


def dp_posterior_sample(prior, sample, truncation, rng):
    """One draw from the DP posterior by truncated stick-breaking.

    The posterior is a DP with concentration q+n and base equal to the
    predictive; leftover stick mass past `truncation` is folded into the
    last atom, with expected tail mass stick_tail_mass(q+n, truncation).
    """
    if truncation < 1:
        raise InvalidParameterError("truncation must be >= 1")
    n = sample.n if sample is not None else 0
    concentration = prior.total_mass + n
    base = dp_predictive(prior, sample)
    gen = rng.gen
    if truncation == 1:
        return DiscreteMeasure(_draw(base, 1, gen), [1.0])
    v = gen.beta(1.0, concentration, size=truncation)
    keep = np.cumprod(1.0 - v)
    w = v.copy()
    w[1:] *= keep[:-1]
    w[-1] += max(1.0 - w.sum(), 0.0)
    atoms = _draw(base, truncation, gen)
    return DiscreteMeasure(atoms, w, mass_tol=1e-6)


def _combined_intensity_terms(prior, sample):
    """(values b_i, weights c_i) so that the latent-density exponent is
    sum_i c_i*log(u + b_i), for the measure alpha + n*(empirical)."""
    pts_w = []
    if isinstance(prior.alpha, DiscreteMeasure):
        pts_w.append((prior.alpha.points, prior.a * prior.alpha.weights))
    elif isinstance(prior.alpha, UniformLaw) and prior.alpha.dim == 1:
        nodes, wts = np.polynomial.legendre.leggauss(GAUSS_LEGENDRE_NODES)
        nodes = 0.5 * (nodes + 1.0)
        pts_w.append((nodes[:, None], prior.a * 0.5 * wts))
    else:
        raise InvalidParameterError("alpha must be a DiscreteMeasure or 1-D uniform law")
    emp = sample.as_measure()
    pts_w.append((emp.points, sample.n * emp.weights))
    pts = np.concatenate([p for p, _ in pts_w])
    w = np.concatenate([w for _, w in pts_w])
    b = np.asarray(prior.beta(pts), float)
    if np.any(b <= 0.0):
        raise InvalidParameterError("beta must be strictly positive")
    return b, w


class LatentDensityProfile:
    """Normalized density of the latent variable behind the extended Gamma predictive.

    pdf(u) is proportional to u^(n-1) * exp(-sum_i c_i log(u + b_i)); the
    normalization Z is computed by adaptive quadrature on (0,1) after the
    substitution u = t/(1-t), with a log-domain shift at the mode.
    """

    def __init__(self, sample, b, c, n, tol):
        self.sample = sample
        self.n = int(n)
        self._b = b
        self._c = c
        self.tol = float(tol)
        self.mode = self._find_mode()
        self._shift = self._log_integrand(self.mode)
        val, err = self._integrate(lambda u: 1.0)
        if not np.isfinite(val) or val <= 0.0 or err > 10.0 * tol * val:
            raise NumericFailureError(
                "latent-density normalization did not converge",
                {"value": val, "abserr": err, "tol": tol},
            )
        self.log_norm = math.log(val) + self._shift
        self.norm_error = err / val

    @property
    def norm(self):
        """The normalizing integral Z of the unnormalized density."""
        return math.exp(self.log_norm)

    def _log_integrand(self, u):
        u = np.asarray(u, float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.n - 1) * np.log(u) - np.log(u[:, None] + self._b[None, :]) @ self._c
        if self.n == 1:
            out = np.where(u == 0.0, -np.log(self._b) @ self._c, out)
        return float(out[0]) if scalar else out

    def _find_mode(self):
        if self.n == 1:
            return 0.0
        grid = np.logspace(-8, 8, 400)
        vals = self._log_integrand(grid)
        i = int(np.argmax(vals))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(
            lambda u: -self._log_integrand(u), bounds=(lo, hi), method="bounded"
        )
        return float(res.x)

    def _integrate(self, factor, shift=None):
        """Quadrature of factor(u)*exp(log_integrand(u) - shift) over (0, inf)."""
        shift = self._shift if shift is None else shift

        def g(t):
            u = t / (1.0 - t)
            return factor(u) * math.exp(self._log_integrand(u) - shift) / (1.0 - t) ** 2

        t_mode = self.mode / (1.0 + self.mode)
        pieces = sorted({0.0, t_mode, 1.0})
        val, err = integrate.quad(
            g, 0.0, 1.0, points=pieces[1:-1] or None, limit=300,
            epsabs=0.0, epsrel=min(self.tol, 1e-9),
        )
        return val, err

    def log_pdf(self, u):
        return self._log_integrand(u) - self.log_norm

    def pdf(self, u):
        return np.exp(self.log_pdf(u))

    def expectation(self, factor, tol=None):
        """E[factor(U)] under the normalized density."""
        val, err = self._integrate(factor, shift=self.log_norm)
        return val, err


def egp_latent_density(prior, sample, tol=1e-8):
    """Latent-variable density profile conditioned on the sample."""
    if sample is None or sample.n < 1:
        raise InvalidInputError("latent density requires at least one observation")
    b, c = _combined_intensity_terms(prior, sample)
    return LatentDensityProfile(sample, b, c, sample.n, tol)


def egp_predictive_masses(prior, sample, tol=1e-8):
    """Support points and raw predictive masses before normalization.

    Each support point z of alpha + n*(empirical) receives mass
    weight(z)/n * E[U/(U + beta(z))] under the latent density; the raw
    masses sum to 1 up to quadrature error, which callers can check.
    """
    if not isinstance(prior.alpha, DiscreteMeasure):
        raise InvalidParameterError("the predictive needs a discrete alpha measure")
    profile = egp_latent_density(prior, sample, tol)
    emp = sample.as_measure()
    pts = np.concatenate([prior.alpha.points, emp.points])
    w = np.concatenate([prior.a * prior.alpha.weights, sample.n * emp.weights])
    pts, w = _dedup(pts, w)
    b = np.asarray(prior.beta(pts), float)
    n = sample.n
    masses = np.empty(len(w))
    for i in range(len(w)):
        bi = float(b[i])
        val, _ = profile.expectation(lambda u: u / (u + bi))
        masses[i] = w[i] * val / n
    return pts, masses


def egp_predictive(prior, sample, tol=1e-8):
    """Predictive law of the normalized extended Gamma process.

    Requires a discrete alpha so the output is a finite measure; the total
    mass is checked to be 1 within 1e-6 (a quadrature identity).
    """
    pts, masses = egp_predictive_masses(prior, sample, tol)
    total = masses.sum()
    if abs(total - 1.0) > 1e-6:
        raise NumericFailureError(
            "predictive mass drifted from 1", {"total": total, "tol": 1e-6}
        )
    return DiscreteMeasure(pts, masses, mass_tol=1e-5)


def egp_l1_distance(prior, sample_x, sample_y, tol=1e-8):
    """L1 distance between the two latent densities, with its theoretical ceiling.

    Returns (l1, bound) where bound = 2*beta_max^a*a*L/beta_min^(a+1) times
    the 1-Wasserstein distance of the two empirical measures; the measured
    l1 is checked against the ceiling.
    """
    if sample_x.n != sample_y.n:
        raise InvalidInputError("samples must have equal size")
    fx = egp_latent_density(prior, sample_x, tol)
    fy = egp_latent_density(prior, sample_y, tol)

    def diff(t):
        u = t / (1.0 - t)
        return abs(
            math.exp(fx._log_integrand(u) - fx.log_norm)
            - math.exp(fy._log_integrand(u) - fy.log_norm)
        ) / (1.0 - t) ** 2

    pieces = sorted({fx.mode / (1.0 + fx.mode), fy.mode / (1.0 + fy.mode)} - {0.0, 1.0})
    l1, err = integrate.quad(
        diff, 0.0, 1.0, points=pieces or None, limit=400, epsabs=1e-10, epsrel=1e-8
    )
    mu_x, mu_y = sample_x.as_measure(), sample_y.as_measure()
    if not mu_x.is_labels and mu_x.dim == 1:
        w1 = wasserstein_1d(mu_x, mu_y, 1.0)
    else:
        w1 = wasserstein(mu_x, mu_y, 1.0, prior.space)[0]
    a, lo, hi = prior.a, prior.beta_min, prior.beta_max
    bound = 2.0 * hi**a * a * prior.lipschitz / lo ** (a + 1.0) * w1
    if l1 > bound + 1e-6:
        raise NumericFailureError(
            "measured L1 distance exceeds its theoretical ceiling",
            {"l1": l1, "bound": bound, "quad_error": err},
        )
    return float(l1), float(bound)


def egp_lipschitz_constant(prior, n):
    """Predictive Lipschitz constant of the extended Gamma process at sample size n."""
    if n < 1:
        raise InvalidParameterError("sample size must be >= 1")
    diam = prior.space.diameter
    a, lo, hi, lip = prior.a, prior.beta_min, prior.beta_max, prior.lipschitz
    l1_factor = 2.0 * hi**a * a * lip / lo ** (a + 1.0)
    return (1.0 + lip * diam / lo) + (a / n + 1.0) * diam * l1_factor


def constant_beta_norm(a, n, c):
    """Closed-form normalization for constant beta: B(a,n)/c^a."""
    return math.exp(betaln(a, n) - a * math.log(c))
