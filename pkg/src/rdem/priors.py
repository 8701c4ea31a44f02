"""Prior specification and sampling for (x0, lambda, theta).

The joint prior factorises as

    lambda        ~ Gamma(a_lambda, b_lambda)        (rate parameterisation)
    x0 | lambda   ~ N_p(mu_x0, (c / lambda) I_p)
    theta         ~ theta_prior, independent of the pair above.

``theta_prior`` is any object exposing ``sample``, ``log_density`` and
``support``; the uniform box used by every built-in experiment is
provided here.  All samplers take an explicit numpy Generator and keep
no global state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidBox


@dataclass(frozen=True)
class UniformBoxPrior:
    """Uniform distribution on an open axis-aligned box in R^q."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidBox("lo and hi must be 1-D arrays of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise InvalidBox("box bounds must be finite")
        if np.any(lo >= hi):
            raise InvalidBox(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def sample(self, rng: np.random.Generator, size: int | None = None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lo + (self.hi - self.lo) * rng.random(shape)

    def support(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.all((theta > self.lo) & (theta < self.hi), axis=-1)

    def log_density(self, theta):
        const = -np.sum(np.log(self.hi - self.lo))
        inside = self.support(theta)
        return np.where(inside, const, -np.inf)


def uniform_box_prior(lo, hi) -> UniformBoxPrior:
    """Uniform prior on the open box prod_j (lo_j, hi_j)."""
    return UniformBoxPrior(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the (x0, lambda, theta) prior.

    ``mu_x0=None`` means "use the first observation", resolved against a
    data series before filtering starts.
    """

    theta_prior: UniformBoxPrior
    mu_x0: np.ndarray | None = None
    c: float = 1.0
    a_lambda: float = 1.0
    b_lambda: float = 1.0

    def __post_init__(self):
        if self.c <= 0 or self.a_lambda <= 0 or self.b_lambda <= 0:
            raise ValueError("c, a_lambda, b_lambda must be positive")
        if self.mu_x0 is not None:
            mu = np.atleast_1d(np.asarray(self.mu_x0, dtype=float))
            object.__setattr__(self, "mu_x0", mu)

    def resolved(self, first_observation) -> "PriorSpec":
        """Fill mu_x0 with the first observation when left unset."""
        if self.mu_x0 is not None:
            return self
        return replace(self, mu_x0=np.atleast_1d(np.asarray(first_observation,
                                                            dtype=float)))


def sample_lambda(prior: PriorSpec, rng: np.random.Generator,
                  size: int | None = None):
    """Draw lambda ~ Gamma(a_lambda, b_lambda); mean a/b, variance a/b^2."""
    return rng.gamma(prior.a_lambda, 1.0 / prior.b_lambda, size=size)


def sample_x0(prior: PriorSpec, lam, rng: np.random.Generator):
    """Draw x0 | lambda ~ N_p(mu_x0, (c/lambda) I_p).

    ``lam`` may be a scalar or an (N,) array; the result is (p,) or (N, p).
    """
    if prior.mu_x0 is None:
        raise ValueError("mu_x0 unresolved; call PriorSpec.resolved first")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    mu = prior.mu_x0
    sd = np.sqrt(prior.c / lam)
    if lam.ndim == 0:
        return mu + sd * rng.standard_normal(mu.size)
    return mu + sd[:, None] * rng.standard_normal((lam.size, mu.size))
