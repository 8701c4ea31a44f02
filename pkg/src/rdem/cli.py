"""Batch driver: simulate / fit / predict / compare-oracle / diagnose.

Every command reads one YAML config (flags override individual values),
writes its outputs into the chosen directory and drops a manifest there
that reproduces the run byte-for-byte when passed back as ``--config``.

Exit codes: 0 success, 2 config error, 3 filter degeneracy, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import replace as _replace
import os
import sys as _sys
import time

import numpy as np

from . import diagnostics, oracle
from .config import RunConfig, load_config, write_manifest
from .data import FLOAT_FMT, ObservationSeries, read_series_csv, \
    write_series_csv
from .errors import AllWeightsZero, ConfigError, DataFormatError, RdemError
from .filtering import FilterResult, predict as predict_band, refine
from .ode import TimeGrid, integrate
from .oracle import GridSpec
from .rngstream import DOMAIN_ORACLE, DOMAIN_SIMULATE, RngFamily

log = logging.getLogger("rdem")


# ---------------------------------------------------------------------------
# small output helpers


def _fmt(v) -> str:
    return f"{float(v):.3f}"


def _write_records(path, blocks) -> None:
    """Structured key/value text: one blank-line-separated block per record."""
    lines = []
    for block in blocks:
        lines.extend(f"{k}: {v}" for k, v in block)
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def _summary_blocks(summary, extra=None):
    blocks = []
    for name, mean, median, q05, q95, sd in summary.rows():
        blocks.append([("parameter", name), ("mean", _fmt(mean)),
                       ("median", _fmt(median)), ("q05", _fmt(q05)),
                       ("q95", _fmt(q95)), ("sd", _fmt(sd))])
    if extra:
        blocks.append(extra)
    return blocks


def _marginal_names(sys):
    return tuple(f"theta{j + 1}" for j in range(sys.param_dim)) + ("sigma2",)


def _write_samples_csv(path, samples, names) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in samples:
            fh.write(",".join(FLOAT_FMT.format(v) for v in row) + "\n")


def _load_series(config: RunConfig) -> ObservationSeries:
    if config.data is None:
        raise ConfigError("this command needs a 'data' path in the config")
    return read_series_csv(config.data, t0=config.t0)


def _fit(config: RunConfig, series: ObservationSeries) -> FilterResult:
    t_start = time.perf_counter()
    result = refine(series, config.system, config.prior_spec,
                    config.filter_config)
    log.info("filter finished in %.2f s (%d particles, %d steps, "
             "%d off-support proposals, %d non-finite predictions)",
             time.perf_counter() - t_start, config.filter_config.n_particles,
             len(result.steps), result.off_support_total,
             result.nonfinite_total)
    return result


def _posterior_matrix(result: FilterResult) -> np.ndarray:
    return np.column_stack([result.cloud.theta, result.cloud.sigma2])


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(config: RunConfig) -> None:
    sim = config.simulate
    if sim is None:
        raise ConfigError("simulate requires a 'simulate' section for this "
                          "model (theta, x0, sigma2, n, h)")
    sys = config.system
    times = sim["t0"] + sim["h"] * np.arange(1, sim["n"] + 1)
    grid = TimeGrid(np.concatenate(([sim["t0"]], times)))
    traj = integrate(sys, np.asarray(sim["x0"]), grid, sim["m"],
                     np.asarray(sim["theta"]))
    rng = RngFamily(config.seed).stream(DOMAIN_SIMULATE, 0, 0)
    noise = (np.sqrt(sim["sigma2"]) * rng.standard_normal(traj.shape)
             if sim["sigma2"] > 0 else 0.0)
    series = ObservationSeries(times=times, y=traj + noise, t0=sim["t0"])
    write_series_csv(os.path.join(config.out, "data.csv"), series)
    _write_records(os.path.join(config.out, "truth.txt"), [[
        ("record", "simulation-truth"), ("model", config.model),
        ("theta", " ".join(FLOAT_FMT.format(v) for v in sim["theta"])),
        ("x0", " ".join(FLOAT_FMT.format(v) for v in sim["x0"])),
        ("sigma2", FLOAT_FMT.format(sim["sigma2"])),
        ("n", sim["n"]), ("h", FLOAT_FMT.format(sim["h"])),
        ("m", sim["m"]), ("t0", FLOAT_FMT.format(sim["t0"]))]])
    write_manifest(os.path.join(config.out, "manifest.yaml"), "simulate",
                   config)


def cmd_fit(config: RunConfig) -> None:
    series = _load_series(config)
    sys = config.system
    result = _fit(config, series)
    names = _marginal_names(sys)
    samples = _posterior_matrix(result)
    _write_samples_csv(os.path.join(config.out, "posterior_samples.csv"),
                       samples, names)
    summary = diagnostics.summarize(samples, names)
    extra = [("record", "run"),
             ("particles", config.filter_config.n_particles),
             ("steps", len(result.steps)),
             ("off_support_proposals", result.off_support_total),
             ("nonfinite_predictions", result.nonfinite_total),
             ("final_ess", _fmt(result.steps[-1].ess) if result.steps else "")]
    _write_records(os.path.join(config.out, "summary.txt"),
                   _summary_blocks(summary, extra))
    write_manifest(os.path.join(config.out, "manifest.yaml"), "fit", config)


def cmd_predict(config: RunConfig) -> None:
    if config.predict is None:
        raise ConfigError("predict requires a 'predict' section with a "
                          "horizon >= 1")
    series = _load_series(config)
    sys = config.system
    result = _fit(config, series)
    h = config.predict["h"]
    if h is None:
        if series.n < 2:
            raise ConfigError("predict.h is required with fewer than two "
                              "observations")
        h = float(series.times[-1] - series.times[-2])
    band = predict_band(result.cloud, sys, config.filter_config,
                        config.predict["horizon"], h=h,
                        rng=RngFamily(config.seed))
    p = sys.state_dim
    if p == 1:
        header = ["t", "q05", "q50", "q95"]
    else:
        header = ["t"]
        for d in range(p):
            header += [f"y{d + 1}_q05", f"y{d + 1}_q50", f"y{d + 1}_q95"]
    with open(os.path.join(config.out, "prediction_band.csv"), "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(band.times.size):
            row = [FLOAT_FMT.format(band.times[k])]
            for d in range(p):
                row += [FLOAT_FMT.format(band.q05[k, d]),
                        FLOAT_FMT.format(band.q50[k, d]),
                        FLOAT_FMT.format(band.q95[k, d])]
            fh.write(",".join(row) + "\n")
    write_manifest(os.path.join(config.out, "manifest.yaml"), "predict",
                   config)


def cmd_compare_oracle(config: RunConfig) -> None:
    if config.model != "cooling":
        raise ConfigError("compare-oracle only applies to the cooling model "
                          "(no exact posterior elsewhere)")
    series = _load_series(config)
    sys = config.system
    result = _fit(config, series)
    names = _marginal_names(sys)
    rdem_samples = _posterior_matrix(result)

    spec = GridSpec(lo=np.asarray(config.oracle["grid_lo"]),
                    hi=np.asarray(config.oracle["grid_hi"]),
                    points_per_axis=config.oracle["points_per_axis"])
    rng = RngFamily(config.seed).stream(DOMAIN_ORACLE, 0, 0)
    oracle_samples = oracle.posterior_samples(series, config.prior_spec, spec,
                                              config.oracle["samples"], rng)

    _write_samples_csv(os.path.join(config.out, "rdem_samples.csv"),
                       rdem_samples, names)
    _write_samples_csv(os.path.join(config.out, "oracle_samples.csv"),
                       oracle_samples, names)

    sum_rdem = diagnostics.summarize(rdem_samples, names)
    sum_oracle = diagnostics.summarize(oracle_samples, names)
    blocks = []
    for j, name in enumerate(names):
        dist = diagnostics.wasserstein_1d(rdem_samples[:, j],
                                          oracle_samples[:, j])
        blocks.append([
            ("parameter", name),
            ("wasserstein", f"{dist:.6g}"),
            ("rdem_mean", _fmt(sum_rdem.mean[j])),
            ("oracle_mean", _fmt(sum_oracle.mean[j])),
            ("rdem_q05", _fmt(sum_rdem.q05[j])),
            ("rdem_q95", _fmt(sum_rdem.q95[j])),
            ("oracle_q05", _fmt(sum_oracle.q05[j])),
            ("oracle_q95", _fmt(sum_oracle.q95[j])),
            ("rdem_sd", _fmt(sum_rdem.sd[j])),
            ("oracle_sd", _fmt(sum_oracle.sd[j])),
            ("rdem_variance_exceeds_oracle",
             str(bool(sum_rdem.sd[j] >= sum_oracle.sd[j])).lower()),
        ])
    _write_records(os.path.join(config.out, "comparison.txt"), blocks)
    write_manifest(os.path.join(config.out, "manifest.yaml"), "compare-oracle",
                   config)


def cmd_diagnose(config: RunConfig) -> None:
    series = _load_series(config)
    sys = config.system
    prior = config.prior_spec
    diag = config.diagnose
    names = _marginal_names(sys)

    if "ladder" in diag["checks"]:
        report = diagnostics.u2_ladder(
            series, sys, prior, config.filter_config, diag["ladder"],
            runs_each=diag["runs_per_entry"],
            threshold_factor=diag["threshold_factor"])
        blocks = [[("record", "u2-ladder"),
                   ("chosen_u2", f"{report.chosen_u2:.6g}"),
                   ("all_unstable", str(report.all_unstable).lower())]]
        for entry in report.entries:
            block = [("u2", f"{entry.u2:.6g}"),
                     ("stable", str(entry.report.stable).lower())]
            for j, nm in enumerate(names):
                block.append((f"max_distance_{nm}",
                              f"{entry.report.max_distance[j]:.6g}"))
                block.append((f"threshold_{nm}",
                              f"{entry.report.thresholds[j]:.6g}"))
            blocks.append(block)
        _write_records(os.path.join(config.out, "ladder_report.txt"), blocks)

    if "stability" in diag["checks"]:
        fam = RngFamily(config.seed)
        sets = []
        for run in range(diag["runs_per_entry"]):
            res = refine(series, sys, prior, config.filter_config,
                         rng=fam.child(run))
            sets.append(_posterior_matrix(res))
        rep = diagnostics.stability_check(
            sets, names=names, threshold_factor=diag["threshold_factor"])
        block = [("record", "stability"),
                 ("runs", diag["runs_per_entry"]),
                 ("u2", f"{config.filter_config.u2:.6g}"),
                 ("stable", str(rep.stable).lower())]
        for j, nm in enumerate(names):
            block.append((f"max_distance_{nm}", f"{rep.max_distance[j]:.6g}"))
            block.append((f"threshold_{nm}", f"{rep.thresholds[j]:.6g}"))
        _write_records(os.path.join(config.out, "stability_report.txt"),
                       [block])

    if "theorem1" in diag["checks"]:
        if diag["theorem1_reference"] == "oracle":
            if config.model != "cooling":
                raise ConfigError("theorem1 oracle reference requires the "
                                  "cooling model")
            spec = GridSpec(lo=np.asarray(config.oracle["grid_lo"]),
                            hi=np.asarray(config.oracle["grid_hi"]),
                            points_per_axis=config.oracle["points_per_axis"])
            rng = RngFamily(config.seed).stream(DOMAIN_ORACLE, 0, 0)
            reference = oracle.posterior_samples(
                series, prior, spec, config.oracle["samples"], rng)
        else:
            smallest = min(float(v) for v in diag["ladder"])
            res = refine(series, sys, prior,
                         _replace(config.filter_config, u2=smallest),
                         rng=RngFamily(config.seed).child(999))
            reference = _posterior_matrix(res)
        curve = diagnostics.theorem1_curve(
            series, sys, prior, config.filter_config, diag["ladder"],
            reference, seeds=range(1, diag["theorem1_seeds"] + 1))
        blocks = [[("record", "theorem1-convergence"),
                   ("reference", diag["theorem1_reference"]),
                   ("seeds", diag["theorem1_seeds"])]]
        for i, u2 in enumerate(curve.u2_values):
            block = [("u2", f"{u2:.6g}")]
            for j, nm in enumerate(curve.names):
                block.append((f"median_distance_{nm}",
                              f"{curve.distances[i, j]:.6g}"))
            blocks.append(block)
        _write_records(os.path.join(config.out, "theorem1_report.txt"), blocks)

    if "theorem3" in diag["checks"]:
        if config.model != "cooling":
            raise ConfigError("theorem3 requires the cooling model (needs an "
                              "analytic solution)")
        fit = diagnostics.theorem3_error_rate(n_values=diag["theorem3_n"],
                                              m=diag["theorem3_m"])
        blocks = [[("record", "theorem3-rate"),
                   ("slope", f"{fit.slope:.6g}"),
                   ("intercept", f"{fit.intercept:.6g}"),
                   ("m", diag["theorem3_m"])]]
        for n, delta in zip(fit.n_values, fit.deltas):
            blocks.append([("n", int(n)), ("delta", f"{delta:.6g}")])
        _write_records(os.path.join(config.out, "theorem3_report.txt"), blocks)

    write_manifest(os.path.join(config.out, "manifest.yaml"), "diagnose",
                   config)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "compare-oracle": cmd_compare_oracle,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdem",
        description="Bayesian ODE parameter inference via relaxed dynamic "
                    "models and an extended Liu-West particle filter.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run config "
                        "(a manifest from a previous run also works)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--particles", type=int, default=None)
        sp.add_argument("--u2", type=float, default=None)
        sp.add_argument("--m", type=int, default=None)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in (("seed", args.seed), ("out", args.out),
                                   ("particles", args.particles),
                                   ("u2", args.u2), ("m", args.m))
                 if v is not None}
    try:
        config = load_config(args.config, overrides)
        os.makedirs(config.out, exist_ok=True)
        COMMANDS[args.command](config)
    except ConfigError as err:
        log.error("config error: %s", err)
        return 2
    except AllWeightsZero as err:
        log.error("filter degeneracy: %s", err)
        return 3
    except (OSError, DataFormatError) as err:
        log.error("i/o error: %s", err)
        return 4
    except RdemError as err:
        log.error("%s", err)
        return 2
    return 0


if __name__ == "__main__":
    _sys.exit(main())
