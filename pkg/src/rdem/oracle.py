"""Exact posterior for the Newton-cooling model, used as ground truth.

With the closed-form mean curve x(t) = theta2 - (theta2 - x0) e^{theta1 t}
and equally spaced times t_i = t0 + i h, the initial state integrates out
of the Gaussian likelihood in closed form.  Writing

    z_i(theta)  = y_i - theta2 + theta2 e^{theta1 i h}
    u~(theta)   = mu^2/c + sum z_i^2
                  - (1/c + sum e^{2 theta1 i h})^{-1} (mu/c + sum z_i e^{theta1 i h})^2

the posterior factorises as

    lambda | theta ~ Gamma(n p/2 + a_lambda, u~(theta)/2 + b_lambda)
    theta          ~ (u~(theta)/2 + b_lambda)^{-(n p/2 + a_lambda)}  on the box.

Sampling theta is done on a rectangular grid with log-sum-exp
normalisation; node values are returned without jitter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ObservationSeries
from .errors import AllMassZero, NonUniformGrid
from .priors import PriorSpec

_SPACING_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (theta1, theta2) evaluation grid, endpoints included."""

    lo: np.ndarray
    hi: np.ndarray
    points_per_axis: int = 51

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != (2,) or hi.shape != (2,):
            raise ValueError("grid bounds must be length-2 (theta1, theta2)")
        if np.any(lo >= hi):
            raise ValueError("grid box is empty")
        if self.points_per_axis < 1:
            raise ValueError("points_per_axis must be >= 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def axes(self):
        return (np.linspace(self.lo[0], self.hi[0], self.points_per_axis),
                np.linspace(self.lo[1], self.hi[1], self.points_per_axis))

    def nodes(self) -> np.ndarray:
        """All grid nodes as an (points^2, 2) array, theta1 varying fastest."""
        a1, a2 = self.axes()
        g1, g2 = np.meshgrid(a1, a2, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])


def _uniform_spacing(series: ObservationSeries) -> float:
    """The common step h of an equally spaced series (t0 one step early)."""
    t = series.times
    if t.size < 1:
        raise NonUniformGrid("empty series")
    t0 = series.start_time()
    steps = np.diff(np.concatenate(([t0], t)))
    h = float(steps.mean())
    if np.max(np.abs(steps - h)) > _SPACING_RTOL * abs(h):
        raise NonUniformGrid(
            "the exact cooling posterior requires equally spaced times "
            f"(max deviation {np.max(np.abs(steps - h)):.3e})")
    return h


def cooling_quadratic_form(theta, series: ObservationSeries,
                           prior: PriorSpec) -> np.ndarray:
    """u~(theta): the x0-marginalised quadratic form of the likelihood.

    Vectorised over theta rows.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    h = _uniform_spacing(series)
    prior = prior.resolved(series.y[0])
    mu = float(prior.mu_x0[0])
    c = prior.c
    y = series.y[:, 0]
    i_h = h * np.arange(1, series.n + 1)
    th1 = theta[:, 0:1]
    th2 = theta[:, 1:2]
    e = np.exp(th1 * i_h)  # (k, n)
    z = y - th2 + th2 * e
    a = 1.0 / c + np.sum(e * e, axis=1)
    b = mu / c + np.sum(z * e, axis=1)
    cc = mu * mu / c + np.sum(z * z, axis=1)
    return cc - b * b / a


def cooling_log_marginal_theta(theta, series: ObservationSeries,
                               prior: PriorSpec) -> np.ndarray:
    """Unnormalised log posterior of theta for the cooling model.

    -(n p / 2 + a_lambda) log(u~(theta)/2 + b_lambda) on the open support
    box, -inf outside.  Requires an equally spaced series.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    th = np.atleast_2d(theta)
    prior_r = prior.resolved(series.y[0])
    inside = prior_r.theta_prior.support(th)
    out = np.full(th.shape[0], -np.inf)
    if inside.any():
        u = cooling_quadratic_form(th[inside], series, prior_r)
        expo = 0.5 * series.n * series.p + prior_r.a_lambda
        out[inside] = -expo * np.log(0.5 * u + prior_r.b_lambda)
    return float(out[0]) if single else out


def grid_sample_theta(series: ObservationSeries, prior: PriorSpec,
                      grid: GridSpec, n_samples: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Draw theta samples from the grid-discretised exact posterior.

    Nodes are weighted by the normalised posterior (log-sum-exp); samples
    are node values without jitter.
    """
    nodes = grid.nodes()
    logp = cooling_log_marginal_theta(nodes, series, prior)
    finite = np.isfinite(logp)
    if not finite.any():
        raise AllMassZero("every grid node has zero posterior mass; "
                          "the grid box is off the support or underflows")
    lse = logp - logp[finite].max()
    probs = np.exp(lse, where=finite, out=np.zeros_like(lse))
    probs /= probs.sum()
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    idx = np.minimum(np.searchsorted(cum, rng.random(int(n_samples)),
                                     side="left"), nodes.shape[0] - 1)
    return nodes[idx]


def sample_lambda_given_theta(theta, series: ObservationSeries,
                              prior: PriorSpec, rng: np.random.Generator,
                              size: int | None = None):
    """Exact draw lambda | theta, y ~ Gamma(np/2 + a, u~(theta)/2 + b).

    ``theta`` may be a single point (with optional ``size``) or an array
    of points yielding one draw each.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    prior_r = prior.resolved(series.y[0])
    u = cooling_quadratic_form(theta, series, prior_r)
    shape = 0.5 * series.n * series.p + prior_r.a_lambda
    rate = 0.5 * u + prior_r.b_lambda
    if single:
        return rng.gamma(shape, 1.0 / rate[0], size=size)
    return rng.gamma(shape, 1.0 / rate)


def posterior_samples(series: ObservationSeries, prior: PriorSpec,
                      grid: GridSpec, n_samples: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Joint (theta1, theta2, sigma2) samples from the exact posterior."""
    theta = grid_sample_theta(series, prior, grid, n_samples, rng)
    lam = sample_lambda_given_theta(theta, series, prior, rng)
    return np.column_stack([theta, 1.0 / lam])
