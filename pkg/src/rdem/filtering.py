"""Extended Liu-West auxiliary particle filter for relaxed ODE models.

The state-space model being filtered is

    y_i     ~ N(x_i, sigma^2 I_p)                      observation
    x_i     ~ N(g(x_{i-1}, t_{i-1}; theta_i), u^2 I_p) relaxed dynamics
    theta_i ~ N(a theta_{i-1} + (1-a) theta_bar, (1-a^2) V_{i-1})

where g is the (m-segment) RK4 image of the previous state and u^2 is
the relaxation variance.  The observation precision gamma = 1/sigma^2
has a conjugate Gamma posterior driven by a running sufficient
statistic, so it is refreshed exactly at every step.

One filter step, in the auxiliary-particle-filter ordering:

    1. propose theta through the shrinkage kernel,
    2. weight each particle by the one-step-ahead marginal
       N(y_next | g, (sigma^2 + u^2) I),
    3. resample whole (x, theta, gamma, s) tuples,
    4. draw the new state from the precision-weighted combination of
       observation and model prediction,
    5. update the sufficient statistic,
    6. redraw gamma from its Gamma posterior.

Everything is vectorised over particles; randomness comes from
counter-based streams (see :mod:`rdem.rngstream`) so results are
reproducible bit-for-bit for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ObservationSeries
from .errors import AllWeightsZero, EmptyProposal
from .ode import OdeSystem, composite_step
from .priors import PriorSpec
from .rngstream import DOMAIN_INIT, DOMAIN_PREDICT, DOMAIN_STEP, as_family

RESAMPLING_SCHEMES = ("systematic", "multinomial")


@dataclass(frozen=True)
class FilterConfig:
    """Tuning knobs of one filter run.

    ``u2`` is the relaxation (state-noise) variance; ``m`` the RK4
    segment count per observation interval; ``a`` the Liu-West shrinkage
    coefficient, with kernel variance factor 1 - a^2.
    """

    n_particles: int
    u2: float
    m: int = 1
    a: float = 0.95
    seed: int = 0
    refine_passes: int = 1
    resampling: str = "systematic"
    max_support_redraws: int = 100

    def __post_init__(self):
        if int(self.n_particles) < 2:
            raise ValueError("need at least 2 particles (covariance undefined "
                             "for N = 1)")
        if self.u2 < 0:
            raise ValueError("relaxation variance u2 must be >= 0")
        if int(self.m) < 1:
            raise ValueError("segment count m must be >= 1")
        if not 0.0 < self.a < 1.0:
            raise ValueError("shrinkage a must lie in (0, 1)")
        if int(self.refine_passes) < 0:
            raise ValueError("refine_passes must be >= 0")
        if self.resampling not in RESAMPLING_SCHEMES:
            raise ValueError(f"resampling must be one of {RESAMPLING_SCHEMES}")

    @property
    def h_tilde2(self) -> float:
        """Kernel variance factor 1 - a^2 (0.0975 at a = 0.95)."""
        return 1.0 - self.a * self.a

    @property
    def delta(self) -> float:
        """Equivalent discount factor 1/(3 - 2a); derived, not used directly."""
        return 1.0 / (3.0 - 2.0 * self.a)


@dataclass(frozen=True)
class SufficientStat:
    """Gamma-posterior accumulator for the observation precision.

    After i observations the precision posterior is
    Gamma(shape_acc, rate_acc) with

        shape_acc = a_lambda + (i + 1) p / 2
        rate_acc  = b_lambda + (||x_0 - mu||^2 / c + sum_k ||y_k - x_k||^2) / 2.

    Fields may be scalars or per-particle arrays.
    """

    shape_acc: np.ndarray | float
    rate_acc: np.ndarray | float

    def take(self, idx) -> "SufficientStat":
        sh = self.shape_acc if np.ndim(self.shape_acc) == 0 \
            else np.asarray(self.shape_acc)[idx]
        rt = self.rate_acc if np.ndim(self.rate_acc) == 0 \
            else np.asarray(self.rate_acc)[idx]
        return SufficientStat(sh, rt)


@dataclass(frozen=True)
class Particle:
    """Single-particle view (mostly for tests and debugging)."""

    x: np.ndarray
    theta: np.ndarray
    gamma: float
    suff: SufficientStat


@dataclass
class ParticleCloud:
    """N weighted particles at one time point.

    Arrays are struct-of-arrays: ``x`` (N, p), ``theta`` (N, q), ``gamma``
    (N,), plus the sufficient-statistic pair.  Weights are kept
    normalised; after a full filter step they are uniform.
    """

    x: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    suff: SufficientStat
    weights: np.ndarray
    time_index: int
    time: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a particle cloud needs N >= 2")
        s = float(np.sum(self.weights))
        if not math.isfinite(s) or s <= 0:
            raise ValueError("cloud weights must have positive finite sum")
        if abs(s - 1.0) > 1e-9:
            self.weights = self.weights / s

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def sigma2(self) -> np.ndarray:
        """Observation-variance samples 1/gamma."""
        return 1.0 / self.gamma

    def particle(self, j: int) -> Particle:
        return Particle(self.x[j], self.theta[j], float(self.gamma[j]),
                        self.suff.take(j))


@dataclass(frozen=True)
class StepSummary:
    """Per-step posterior snapshot plus filter health counters."""

    index: int
    time: float
    ess: float
    n_off_support: int
    n_nonfinite: int
    theta_mean: np.ndarray
    theta_quantiles: np.ndarray  # (3, q) rows: 5%, 50%, 95%
    sigma2_mean: float
    sigma2_quantiles: np.ndarray  # (3,)


@dataclass(frozen=True)
class FilterResult:
    cloud: ParticleCloud
    steps: list
    off_support_total: int
    nonfinite_total: int
    pass_index: int = 0


@dataclass(frozen=True)
class PredictionBand:
    """Per-time 5%/50%/95% bands of predicted observations, (k, p) each."""

    times: np.ndarray
    q05: np.ndarray
    q50: np.ndarray
    q95: np.ndarray
    n_dropped: int = 0

    def width(self) -> np.ndarray:
        return self.q95 - self.q05


# ---------------------------------------------------------------------------
# cloud initialisation


def init_cloud(sys: OdeSystem, prior: PriorSpec, config: FilterConfig,
               rng: np.random.Generator, proposal=None,
               t0: float = 0.0) -> ParticleCloud:
    """Draw the time-0 cloud.

    (theta, gamma) pairs come from the prior, or from ``proposal`` (a
    ``(theta_array, gamma_array)`` tuple) when restarting from an earlier
    posterior.  x0 is drawn from N(mu_x0, (c/lambda) I) using each
    particle's gamma as lambda, and the sufficient statistic starts at
    its zero-observation value.
    """
    n = int(config.n_particles)
    p = sys.state_dim
    if prior.mu_x0 is None:
        raise ValueError("prior.mu_x0 unresolved; call PriorSpec.resolved")
    if proposal is not None:
        theta_src, gamma_src = proposal
        theta_src = np.asarray(theta_src, dtype=float)
        gamma_src = np.asarray(gamma_src, dtype=float)
        if theta_src.size == 0 or gamma_src.size == 0:
            raise EmptyProposal("refinement proposal set is empty")
        if theta_src.shape[0] != n:
            idx = rng.integers(0, theta_src.shape[0], size=n)
            theta_src, gamma_src = theta_src[idx], gamma_src[idx]
        theta, gamma = theta_src.copy(), gamma_src.copy()
    else:
        theta = prior.theta_prior.sample(rng, n)
        gamma = rng.gamma(prior.a_lambda, 1.0 / prior.b_lambda, size=n)
    mu = prior.mu_x0
    x0 = mu + np.sqrt(prior.c / gamma)[:, None] * rng.standard_normal((n, p))
    dev2 = np.sum((x0 - mu) ** 2, axis=-1)
    suff = SufficientStat(shape_acc=prior.a_lambda + 0.5 * p,
                          rate_acc=prior.b_lambda + dev2 / (2.0 * prior.c))
    return ParticleCloud(x=x0, theta=theta, gamma=gamma, suff=suff,
                         weights=np.full(n, 1.0 / n), time_index=0,
                         time=float(t0))


# ---------------------------------------------------------------------------
# Liu-West theta kernel


def liu_west_moments(cloud_or_theta):
    """Unweighted mean and (N-1)-denominator covariance of particle thetas."""
    theta = getattr(cloud_or_theta, "theta", cloud_or_theta)
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] < 2:
        raise ValueError("need at least two particles for moments")
    mean = theta.mean(axis=0)
    dev = theta - mean
    cov = dev.T @ dev / (theta.shape[0] - 1)
    return mean, cov


def _kernel_factor(cov: np.ndarray, scale2: float):
    """Cholesky-like factor L with L L^T = scale2 * cov, or None when cov = 0.

    Singular covariances are nudged by eps*I (eps = 1e-10 tr/q, absolute
    1e-12 when the trace vanishes); as a last resort the symmetric part
    is eigen-clipped.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if not np.any(cov):
        return None
    try:
        return np.linalg.cholesky(scale2 * cov)
    except np.linalg.LinAlgError:
        q = cov.shape[0]
        tr = float(np.trace(cov))
        eps = 1e-10 * tr / q if tr > 0 else 1e-12
        try:
            return np.linalg.cholesky(scale2 * (cov + eps * np.eye(q)))
        except np.linalg.LinAlgError:
            w, u = np.linalg.eigh(scale2 * 0.5 * (cov + cov.T))
            return u * np.sqrt(np.clip(w, eps, None))


def propose_theta(theta, theta_bar, cov, a, rng: np.random.Generator,
                  support=None, max_redraws: int = 100):
    """Shrinkage-kernel proposals N(a theta + (1-a) theta_bar, (1-a^2) cov).

    Off-support draws are redrawn (up to ``max_redraws`` rounds); any
    particle still off support keeps its pre-kernel theta and is flagged
    in the returned mask, so callers can count the events.

    Returns ``(proposals, exhausted_mask)`` matching the input shape.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    th = theta[None, :] if single else theta
    mean = a * th + (1.0 - a) * np.asarray(theta_bar, dtype=float)
    lfac = _kernel_factor(cov, 1.0 - a * a)
    n, q = th.shape
    if lfac is None:
        prop = mean.copy()
        bad = ~np.asarray(support(prop), dtype=bool) if support is not None \
            else np.zeros(n, dtype=bool)
    else:
        prop = mean + rng.standard_normal((n, q)) @ lfac.T
        bad = ~np.asarray(support(prop), dtype=bool) if support is not None \
            else np.zeros(n, dtype=bool)
        rounds = 0
        while bad.any() and rounds < max_redraws:
            k = int(bad.sum())
            prop[bad] = mean[bad] + rng.standard_normal((k, q)) @ lfac.T
            still = ~np.asarray(support(prop[bad]), dtype=bool)
            bad[np.nonzero(bad)[0][~still]] = False
            rounds += 1
    exhausted = bad
    if exhausted.any():
        prop[exhausted] = th[exhausted]
    if single:
        return prop[0], bool(exhausted[0])
    return prop, exhausted


# ---------------------------------------------------------------------------
# weights, resampling, state propagation


def _lookahead(sys, x, theta, gamma, y_next, t, h, config):
    """Log lookahead weights plus the cached RK4 predictions.

    Returns (log_weights, g, nonfinite_mask); rows with a non-finite
    prediction get weight -inf instead of raising.
    """
    p = sys.state_dim
    with np.errstate(all="ignore"):
        g = composite_step(sys, x, t, h, config.m, theta, check=False)
        var = 1.0 / np.asarray(gamma, dtype=float) + config.u2
        resid2 = np.sum((np.asarray(y_next, dtype=float) - g) ** 2, axis=-1)
        lw = -0.5 * p * np.log(2.0 * np.pi * var) - resid2 / (2.0 * var)
    bad = ~np.isfinite(g).all(axis=-1)
    if bad.any():
        lw = np.where(bad, -np.inf, lw)
    lw = np.where(np.isnan(lw), -np.inf, lw)
    return lw, g, bad


def lookahead_log_weight(sys, x, theta, gamma, y_next, t, h,
                         config: FilterConfig):
    """Log N(y_next | g(x, t; theta), (1/gamma + u^2) I_p) per particle.

    Non-finite predictions yield -inf (the particle is down-weighted,
    never raised).  Accepts single particles or (N, .) batches.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    thb = np.asarray(theta, dtype=float)
    thb = thb[None, :] if thb.ndim == 1 else thb
    gb = np.atleast_1d(np.asarray(gamma, dtype=float))
    lw, _, _ = _lookahead(sys, xb, thb, gb, y_next, t, h, config)
    return float(lw[0]) if single else lw


def normalized_weights(log_weights, step_index=None):
    """Max-subtracted exponentiation; raises AllWeightsZero on degeneracy."""
    lw = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(lw)
    if not finite.any():
        raise AllWeightsZero(
            "all particle weights are zero"
            + (f" at step {step_index}" if step_index is not None else ""),
            step_index=step_index)
    w = np.exp(lw - lw[finite].max(), where=finite, out=np.zeros_like(lw))
    total = w.sum()
    if not math.isfinite(total) or total <= 0:
        raise AllWeightsZero("weight normalisation degenerated",
                             step_index=step_index)
    return w / total


def resample_indices(weights, rng: np.random.Generator,
                     scheme: str = "systematic") -> np.ndarray:
    """Indices of N survivors drawn according to normalised weights."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    cum = np.cumsum(w)
    cum[-1] = 1.0
    if scheme == "systematic":
        positions = (rng.random() + np.arange(n)) / n
    elif scheme == "multinomial":
        positions = rng.random(n)
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}")
    return np.minimum(np.searchsorted(cum, positions, side="left"), n - 1)


def resample(cloud: ParticleCloud, log_weights, rng: np.random.Generator,
             scheme: str | None = None) -> ParticleCloud:
    """Resample whole particle tuples; output weights are uniform."""
    w = normalized_weights(log_weights, step_index=cloud.time_index)
    idx = resample_indices(w, rng, scheme or "systematic")
    n = cloud.n
    return ParticleCloud(x=cloud.x[idx], theta=cloud.theta[idx],
                         gamma=cloud.gamma[idx], suff=cloud.suff.take(idx),
                         weights=np.full(n, 1.0 / n),
                         time_index=cloud.time_index, time=cloud.time)


def _propagate_from_mean(g, y_next, gamma, u2, rng: np.random.Generator):
    """Draw x_next given the model prediction g and observation y_next.

    x_next ~ N((gamma y + g/u2) / (gamma + 1/u2), I / (gamma + 1/u2));
    u2 = 0 short-circuits to the deterministic model prediction.
    """
    if u2 == 0.0:
        return np.array(g, dtype=float, copy=True)
    gamma = np.asarray(gamma, dtype=float)
    prec = gamma[..., None] + 1.0 / u2
    mean = (gamma[..., None] * y_next + g / u2) / prec
    return mean + rng.standard_normal(np.shape(g)) / np.sqrt(prec)


def propagate_state(sys, x, theta, gamma, y_next, t, h, config: FilterConfig,
                    rng: np.random.Generator):
    """Public form of the state-propagation draw (recomputes g)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    thb = np.asarray(theta, dtype=float)
    thb = thb[None, :] if thb.ndim == 1 else thb
    gb = np.atleast_1d(np.asarray(gamma, dtype=float))
    with np.errstate(all="ignore"):
        g = composite_step(sys, xb, t, h, config.m, thb, check=False)
    out = _propagate_from_mean(g, np.asarray(y_next, dtype=float), gb,
                               config.u2, rng)
    return out[0] if single else out


def update_suffstat(suff: SufficientStat, y_next, x_next,
                    p: int | None = None) -> SufficientStat:
    """shape += p/2, rate += ||y - x||^2 / 2 (vectorised over particles)."""
    y = np.asarray(y_next, dtype=float)
    x = np.asarray(x_next, dtype=float)
    if p is None:
        p = y.shape[-1] if y.ndim else 1
    resid2 = np.sum((y - x) ** 2, axis=-1)
    return SufficientStat(shape_acc=suff.shape_acc + 0.5 * p,
                          rate_acc=suff.rate_acc + 0.5 * resid2)


def sample_gamma(suff: SufficientStat, rng: np.random.Generator):
    """Gamma(shape_acc, rate_acc) draws (rate parameterisation)."""
    return rng.gamma(suff.shape_acc, 1.0 / np.asarray(suff.rate_acc, dtype=float))


# ---------------------------------------------------------------------------
# the filter itself


def filter_step(cloud: ParticleCloud, y_next, t_next, sys: OdeSystem,
                prior: PriorSpec, config: FilterConfig,
                rng: np.random.Generator):
    """Advance the cloud one observation; returns (new_cloud, StepSummary).

    Follows the propose / weight / resample / propagate / update /
    redraw-gamma ordering; the RK4 prediction computed for the weights is
    reused for propagation of the resampled tuples.
    """
    t = cloud.time
    h = float(t_next) - t
    if h <= 0:
        raise ValueError("t_next must exceed the cloud time")
    y_next = np.asarray(y_next, dtype=float)
    step_idx = cloud.time_index + 1

    theta_bar, cov = liu_west_moments(cloud.theta)
    theta_new, exhausted = propose_theta(
        cloud.theta, theta_bar, cov, config.a, rng,
        support=prior.theta_prior.support,
        max_redraws=config.max_support_redraws)

    lw, g, bad = _lookahead(sys, cloud.x, theta_new, cloud.gamma, y_next,
                            t, h, config)
    w = normalized_weights(lw, step_index=step_idx)
    ess = float(1.0 / np.sum(w * w))

    idx = resample_indices(w, rng, config.resampling)
    gamma_res = cloud.gamma[idx]
    suff_res = cloud.suff.take(idx)

    x_next = _propagate_from_mean(g[idx], y_next, gamma_res, config.u2, rng)
    suff_next = update_suffstat(suff_res, y_next, x_next, sys.state_dim)
    gamma_next = sample_gamma(suff_next, rng)

    new_cloud = ParticleCloud(x=x_next, theta=theta_new[idx],
                              gamma=gamma_next, suff=suff_next,
                              weights=np.full(cloud.n, 1.0 / cloud.n),
                              time_index=step_idx, time=float(t_next))
    summary = _summarize_step(new_cloud, ess, int(exhausted.sum()),
                              int(bad.sum()))
    return new_cloud, summary


def _summarize_step(cloud, ess, n_off, n_bad):
    qs = np.quantile(cloud.theta, [0.05, 0.5, 0.95], axis=0)
    sigma2 = cloud.sigma2
    s_qs = np.quantile(sigma2, [0.05, 0.5, 0.95])
    return StepSummary(index=cloud.time_index, time=cloud.time, ess=ess,
                       n_off_support=n_off, n_nonfinite=n_bad,
                       theta_mean=cloud.theta.mean(axis=0),
                       theta_quantiles=qs,
                       sigma2_mean=float(sigma2.mean()),
                       sigma2_quantiles=s_qs)


def run_filter(series: ObservationSeries, sys: OdeSystem, prior: PriorSpec,
               config: FilterConfig, rng=None, proposal=None,
               pass_index: int = 0) -> FilterResult:
    """Run the filter over the whole series; returns the final cloud plus
    per-step posterior summaries.

    ``rng`` may be an int seed or :class:`RngFamily`; by default the
    config seed is used.  Streams are keyed by (pass, step) so a given
    seed reproduces identical output regardless of scheduling.
    """
    fam = as_family(config.seed if rng is None else rng)
    if series.n > 0:
        prior = prior.resolved(series.y[0])
    t0 = series.start_time() if (series.n > 0 or series.t0 is not None) else 0.0
    cloud = init_cloud(sys, prior, config,
                       fam.stream(DOMAIN_INIT, pass_index, 0),
                       proposal=proposal, t0=t0)
    steps = []
    for i in range(series.n):
        cloud, summary = filter_step(
            cloud, series.y[i], series.times[i], sys, prior, config,
            fam.stream(DOMAIN_STEP, pass_index, i + 1))
        steps.append(summary)
    return FilterResult(cloud=cloud, steps=steps,
                        off_support_total=sum(s.n_off_support for s in steps),
                        nonfinite_total=sum(s.n_nonfinite for s in steps),
                        pass_index=pass_index)


def refine(series: ObservationSeries, sys: OdeSystem, prior: PriorSpec,
           config: FilterConfig, rng=None) -> FilterResult:
    """Filter, then rerun with (theta, gamma) drawn from the previous
    pass's final posterior (x0 is redrawn from its prior each pass).

    With ``refine_passes = 0`` this is exactly :func:`run_filter`.
    """
    fam = as_family(config.seed if rng is None else rng)
    result = run_filter(series, sys, prior, config, rng=fam, pass_index=0)
    for k in range(1, int(config.refine_passes) + 1):
        proposal = (result.cloud.theta, result.cloud.gamma)
        result = run_filter(series, sys, prior, config, rng=fam,
                            proposal=proposal, pass_index=k)
    return result


# ---------------------------------------------------------------------------
# prediction


def weighted_quantile(values, qs, weights=None):
    """Weighted quantiles with midpoint plotting positions.

    Sorted values v_(1..n) with normalised weights w get positions
    (cumsum(w) - w/2); quantiles interpolate linearly between them.
    Matches a plain midpoint empirical quantile for uniform weights.
    """
    v = np.asarray(values, dtype=float)
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    if weights is None:
        w = np.full(v.size, 1.0 / v.size)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
    order = np.argsort(v, kind="stable")
    v = v[order]
    w = w[order]
    positions = np.cumsum(w) - 0.5 * w
    return np.interp(qs, positions, v)


def predict(cloud: ParticleCloud, sys: OdeSystem, config: FilterConfig,
            horizon: int, future_times=None, h: float | None = None,
            rng=None) -> PredictionBand:
    """k-step-ahead credible bands of future observations.

    Each particle is propagated ``horizon`` composite steps with state
    noise N(0, u^2 I) per step, and an observation draw N(0, I/gamma) is
    added at every future time.  Per-time 5%/50%/95% weighted quantiles
    of those draws form the band.  Particles that turn non-finite are
    dropped (counted in ``n_dropped``); if all drop, the prediction
    degenerates and raises.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("prediction horizon must be >= 1")
    if future_times is not None:
        times = np.asarray(future_times, dtype=float)
        if times.ndim != 1 or times.size != horizon:
            raise ValueError("future_times must be a (horizon,) array")
        if times[0] <= cloud.time or np.any(np.diff(times) <= 0):
            raise ValueError("future times must increase past the cloud time")
    else:
        if h is None or h <= 0:
            raise ValueError("either future_times or a positive h is required")
        times = cloud.time + h * np.arange(1, horizon + 1)

    fam = as_family(config.seed if rng is None else rng) \
        if not isinstance(rng, np.random.Generator) else None
    gen = rng if isinstance(rng, np.random.Generator) \
        else fam.stream(DOMAIN_PREDICT, 0, 0)

    n, p = cloud.x.shape
    x = cloud.x.copy()
    alive = np.ones(n, dtype=bool)
    u = math.sqrt(config.u2)
    sd_obs = np.sqrt(1.0 / cloud.gamma)[:, None]
    q05 = np.empty((horizon, p))
    q50 = np.empty((horizon, p))
    q95 = np.empty((horizon, p))
    t_prev = cloud.time
    for k in range(horizon):
        with np.errstate(all="ignore"):
            x = composite_step(sys, x, t_prev, times[k] - t_prev, config.m,
                               cloud.theta, check=False)
            if u > 0:
                x = x + u * gen.standard_normal((n, p))
            y_draw = x + sd_obs * gen.standard_normal((n, p))
        alive &= np.isfinite(y_draw).all(axis=-1)
        if not alive.any():
            raise AllWeightsZero(
                f"all particles became non-finite at prediction step {k + 1}")
        w_alive = cloud.weights[alive]
        for d in range(p):
            q05[k, d], q50[k, d], q95[k, d] = weighted_quantile(
                y_draw[alive, d], [0.05, 0.5, 0.95], w_alive)
        t_prev = times[k]
    return PredictionBand(times=times, q05=q05, q50=q50, q95=q95,
                          n_dropped=int(n - alive.sum()))
