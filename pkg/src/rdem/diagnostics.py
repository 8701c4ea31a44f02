"""Posterior summaries, multi-run stability checks and convergence harnesses.

Conventions fixed here so independent reimplementations can match:

* quantiles of plain sample sets use linear interpolation between order
  statistics (numpy's default ``method="linear"``);
* distances between marginal sample sets are 1-Wasserstein, which for
  equal sample counts equals the mean absolute difference of the sorted
  samples;
* the default stability threshold is 0.5 x the pooled posterior standard
  deviation, per marginal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sps

from .data import ObservationSeries
from .errors import DegenerateFit
from .filtering import FilterConfig, FilterResult, refine
from .models import cooling_solution, cooling_system
from .ode import OdeSystem, TimeGrid, integrate
from .priors import PriorSpec
from .rngstream import as_family

MIN_SUMMARY_SAMPLES = 100


def wasserstein_1d(a, b) -> float:
    """1-Wasserstein distance between two 1-D empirical distributions."""
    return float(sps.wasserstein_distance(np.asarray(a, dtype=float).ravel(),
                                          np.asarray(b, dtype=float).ravel()))


@dataclass(frozen=True)
class PosteriorSummary:
    """Mean / median / 90% interval / sd per parameter column."""

    names: tuple
    mean: np.ndarray
    median: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    sd: np.ndarray

    def rows(self):
        for j, name in enumerate(self.names):
            yield (name, self.mean[j], self.median[j], self.q05[j],
                   self.q95[j], self.sd[j])


def summarize(samples, names=None) -> PosteriorSummary:
    """Summary statistics of posterior sample columns.

    ``samples`` is (n, d) or (n,); requires at least 100 samples so the
    5%/95% quantiles are meaningful.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] < MIN_SUMMARY_SAMPLES:
        raise ValueError(f"summarize needs >= {MIN_SUMMARY_SAMPLES} samples, "
                         f"got {arr.shape[0]}")
    d = arr.shape[1]
    if names is None:
        names = tuple(f"param{j + 1}" for j in range(d))
    qs = np.quantile(arr, [0.05, 0.5, 0.95], axis=0)
    return PosteriorSummary(names=tuple(names), mean=arr.mean(axis=0),
                            median=qs[1], q05=qs[0], q95=qs[2],
                            sd=arr.std(axis=0, ddof=1))


@dataclass(frozen=True)
class StabilityReport:
    """Pairwise 1-Wasserstein distances across R runs, per marginal."""

    names: tuple
    distances: np.ndarray      # (d, R, R) symmetric, zero diagonal
    thresholds: np.ndarray     # (d,)
    max_distance: np.ndarray   # (d,)
    stable: bool


def stability_check(sample_sets, threshold=None, names=None,
                    threshold_factor: float = 0.5) -> StabilityReport:
    """Are R posterior sample sets close enough to each other?

    ``sample_sets`` is a sequence of (n_r, d) arrays.  The default
    per-marginal threshold is ``threshold_factor`` x the pooled sd;
    stable means every pairwise distance is below threshold for every
    marginal.
    """
    sets = [np.atleast_2d(np.asarray(s, dtype=float)) for s in sample_sets]
    sets = [s[:, None] if s.ndim == 1 else s for s in sets]
    r = len(sets)
    if r < 2:
        raise ValueError("stability check needs at least two runs")
    d = sets[0].shape[1]
    if any(s.shape[1] != d for s in sets):
        raise ValueError("runs disagree on marginal count")
    if names is None:
        names = tuple(f"param{j + 1}" for j in range(d))
    if threshold is None:
        pooled_sd = np.array([np.concatenate([s[:, j] for s in sets]).std(ddof=1)
                              for j in range(d)])
        thresholds = threshold_factor * pooled_sd
    else:
        thresholds = np.broadcast_to(np.asarray(threshold, dtype=float),
                                     (d,)).copy()
    dist = np.zeros((d, r, r))
    for j in range(d):
        for u in range(r):
            for v in range(u + 1, r):
                dv = wasserstein_1d(sets[u][:, j], sets[v][:, j])
                dist[j, u, v] = dist[j, v, u] = dv
    max_d = dist.reshape(d, -1).max(axis=1)
    return StabilityReport(names=tuple(names), distances=dist,
                           thresholds=thresholds, max_distance=max_d,
                           stable=bool(np.all(max_d < thresholds)))


def _marginal_matrix(result: FilterResult) -> np.ndarray:
    """(N, q+1) matrix of theta columns plus sigma^2."""
    return np.column_stack([result.cloud.theta, result.cloud.sigma2])


@dataclass(frozen=True)
class LadderEntry:
    u2: float
    report: StabilityReport


@dataclass(frozen=True)
class LadderReport:
    """Outcome of the descending-u2 selection procedure."""

    entries: list
    chosen_u2: float
    all_unstable: bool = False


def u2_ladder(series: ObservationSeries, sys: OdeSystem, prior: PriorSpec,
              base_config: FilterConfig, ladder, runs_each: int = 2,
              threshold_factor: float = 0.5, rng=None) -> LadderReport:
    """Run the filter at each u2 with ``runs_each`` seeds and pick the
    smallest entry whose runs agree (stability check per marginal).

    Falls back to the largest entry, flagged, when nothing is stable.
    """
    ladder = [float(v) for v in ladder]
    if not ladder:
        raise ValueError("u2 ladder must not be empty")
    if runs_each < 2:
        raise ValueError("need at least two runs per ladder entry")
    fam = as_family(base_config.seed if rng is None else rng)
    names = tuple(f"theta{j + 1}" for j in range(sys.param_dim)) + ("sigma2",)
    entries = []
    for k, u2 in enumerate(sorted(ladder, reverse=True)):
        cfg = replace(base_config, u2=u2)
        sets = []
        for run in range(runs_each):
            res = refine(series, sys, prior, cfg, rng=fam.child(k * 1000 + run))
            sets.append(_marginal_matrix(res))
        entries.append(LadderEntry(u2=u2, report=stability_check(
            sets, names=names, threshold_factor=threshold_factor)))
    stable_u2 = [e.u2 for e in entries if e.report.stable]
    if stable_u2:
        return LadderReport(entries=entries, chosen_u2=min(stable_u2))
    return LadderReport(entries=entries, chosen_u2=max(e.u2 for e in entries),
                        all_unstable=True)


@dataclass(frozen=True)
class ConvergenceCurve:
    """Median marginal distances to a reference, per relaxation variance."""

    u2_values: np.ndarray          # descending
    names: tuple
    distances: np.ndarray          # (len(u2), d) median over seeds
    per_seed: np.ndarray           # (len(u2), n_seeds, d)


def theorem1_curve(series: ObservationSeries, sys: OdeSystem,
                   prior: PriorSpec, config: FilterConfig, u2_list,
                   reference: np.ndarray, seeds) -> ConvergenceCurve:
    """Distance of each marginal posterior to a reference sample set as
    the relaxation variance descends.

    ``reference`` is an (n_ref, d) matrix whose columns align with
    (theta_1..theta_q, sigma2); columns of NaN are skipped.  The same
    seeds are reused across u2 values (common random numbers) and the
    median over seeds is reported.
    """
    u2s = np.asarray(sorted((float(v) for v in u2_list), reverse=True))
    seeds = list(seeds)
    ref = np.atleast_2d(np.asarray(reference, dtype=float))
    d = sys.param_dim + 1
    names = tuple(f"theta{j + 1}" for j in range(sys.param_dim)) + ("sigma2",)
    if ref.shape[1] != d:
        raise ValueError(f"reference must have {d} columns (theta, sigma2)")
    per_seed = np.full((u2s.size, len(seeds), d), np.nan)
    for i, u2 in enumerate(u2s):
        cfg = replace(config, u2=float(u2))
        for s, seed in enumerate(seeds):
            res = refine(series, sys, prior, cfg, rng=int(seed))
            samples = _marginal_matrix(res)
            for j in range(d):
                if np.all(np.isnan(ref[:, j])):
                    continue
                per_seed[i, s, j] = wasserstein_1d(samples[:, j], ref[:, j])
    med = np.nanmedian(per_seed, axis=1) if len(seeds) else per_seed.mean(axis=1)
    return ConvergenceCurve(u2_values=u2s, names=names, distances=med,
                            per_seed=per_seed)


@dataclass(frozen=True)
class RateFit:
    """log-log fit of the likelihood-exponent gap against sample size."""

    n_values: np.ndarray
    deltas: np.ndarray
    slope: float
    intercept: float


def theorem3_error_rate(n_values=(25, 50, 100, 200), m: int = 1,
                        horizon: float = 15.0, theta=(-0.5, 80.0),
                        x0: float = 20.0, data_offset: float = 5.0,
                        sys: OdeSystem | None = None) -> RateFit:
    """Measure how the discretisation error of the likelihood exponent
    shrinks as n grows with h = horizon / n and fixed m.

    Delta(n) = | sum_i ||y_i - x_i||^2 - sum_i ||y_i - x_i^m||^2 | with
    x_i the analytic cooling trajectory and x_i^m its RK4 approximation.
    The data y_i = x_i + data_offset are a deterministic offset of the
    truth so Delta isolates the discretisation error; the expected
    log-log slope with a 4th-order method is -3.
    """
    sys = sys or cooling_system()
    theta = np.asarray(theta, dtype=float)
    n_values = np.asarray([int(n) for n in n_values])
    deltas = np.empty(n_values.size)
    for k, n in enumerate(n_values):
        h = horizon / n
        times = h * np.arange(n + 1)
        exact = cooling_solution(x0, theta, times[1:])
        approx = integrate(sys, np.array([x0]), TimeGrid(times), m,
                           theta)[:, 0]
        y = exact + data_offset
        deltas[k] = abs(np.sum((y - exact) ** 2) - np.sum((y - approx) ** 2))
    positive = deltas > 0
    if positive.sum() < 2:
        raise DegenerateFit(
            "discretisation error underflowed at (almost) every n; "
            "decrease m or the horizon")
    slope, intercept = np.polyfit(np.log(n_values[positive]),
                                  np.log(deltas[positive]), 1)
    return RateFit(n_values=n_values, deltas=deltas, slope=float(slope),
                   intercept=float(intercept))
