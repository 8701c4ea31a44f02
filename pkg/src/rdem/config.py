"""Run configuration: YAML schema, validation, defaults and manifests.

One YAML file describes a run; CLI flags override individual values.
The resolved configuration (with every default filled in) is written
next to the outputs as ``manifest.yaml`` and can itself be passed back
as ``--config`` to reproduce the run byte-for-byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, InvalidBox
from .filtering import FilterConfig
from .models import DEFAULT_THETA_BOX, REGISTRY, get_system
from .priors import PriorSpec, uniform_box_prior

# Data-generation settings of the built-in experiments: cooling follows
# the classic n=100, h=0.15 cooling benchmark; the FitzHugh-Nagumo noise
# variance is 0.25, consistent with the state scale and the reference
# figures (the alternative 25 would drown states ranging in [-2, 2]).
DEFAULT_SIMULATE = {
    "cooling": {"theta": [-0.5, 80.0], "x0": [20.0], "sigma2": 25.0,
                "n": 100, "h": 0.15, "m": 1, "t0": 0.0},
    "fitzhugh-nagumo": {"theta": [0.2, 0.2, 3.0], "x0": [-1.0, 1.0],
                        "sigma2": 0.25, "n": 100, "h": 0.2, "m": 400,
                        "t0": 0.0},
}

DEFAULT_FILTER = {"particles": 20000, "u2": 1e-5, "m": 1, "a": 0.95,
                  "refine_passes": 1, "resampling": "systematic"}

DEFAULT_PRIOR = {"mu_x0": "first-observation", "c": 1.0,
                 "a_lambda": 1.0, "b_lambda": 1.0}

DEFAULT_ORACLE = {"grid_lo": [-2.0, 70.0], "grid_hi": [0.0, 90.0],
                  "points_per_axis": 51, "samples": 20000}

DEFAULT_DIAGNOSE = {"checks": ["ladder"], "ladder": [1.0, 0.1, 0.01, 1e-5],
                    "runs_per_entry": 2, "threshold_factor": 0.5,
                    "theorem1_seeds": 10, "theorem1_reference": "oracle",
                    "theorem3_n": [25, 50, 100, 200], "theorem3_m": 1}


@dataclass
class RunConfig:
    """Fully resolved settings for one CLI invocation."""

    model: str
    seed: int
    out: str
    data: str | None
    t0: float | None
    prior_spec: PriorSpec
    filter_config: FilterConfig
    simulate: dict | None
    predict: dict | None
    oracle: dict
    diagnose: dict
    resolved: dict

    @property
    def system(self):
        return get_system(self.model)


def _as_float_list(value, what, length=None):
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a list of numbers, got {value!r}")
    if length is not None and len(out) != length:
        raise ConfigError(f"{what} must have length {length}, got {len(out)}")
    return out


def _merged(defaults, given, what):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{what} section must be a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {sorted(unknown)}")
    return {**defaults, **given}


def _build_prior(raw, model, sys) -> tuple[PriorSpec, dict]:
    merged = _merged({**DEFAULT_PRIOR, "theta_box": None}, raw, "prior")
    box = merged.get("theta_box")
    if box is None:
        if model not in DEFAULT_THETA_BOX:
            raise ConfigError(
                f"model {model!r} has no default theta box; set "
                "prior.theta_box explicitly (lo/hi lists)")
        lo, hi = DEFAULT_THETA_BOX[model]
        lo, hi = lo.tolist(), hi.tolist()
    else:
        if not isinstance(box, dict) or set(box) != {"lo", "hi"}:
            raise ConfigError("prior.theta_box must be {lo: [...], hi: [...]}")
        lo = _as_float_list(box["lo"], "prior.theta_box.lo", sys.param_dim)
        hi = _as_float_list(box["hi"], "prior.theta_box.hi", sys.param_dim)
    mu = merged["mu_x0"]
    if isinstance(mu, str):
        if mu != "first-observation":
            raise ConfigError("prior.mu_x0 must be a list of numbers or "
                              "'first-observation'")
        mu_val = None
    else:
        mu_val = np.asarray(_as_float_list(mu, "prior.mu_x0", sys.state_dim))
    try:
        theta_prior = uniform_box_prior(lo, hi)
        spec = PriorSpec(theta_prior=theta_prior, mu_x0=mu_val,
                         c=float(merged["c"]),
                         a_lambda=float(merged["a_lambda"]),
                         b_lambda=float(merged["b_lambda"]))
    except (ValueError, InvalidBox) as err:
        raise ConfigError(str(err))
    resolved = {"mu_x0": mu if isinstance(mu, str) else _as_float_list(
        mu, "prior.mu_x0"), "c": float(merged["c"]),
        "a_lambda": float(merged["a_lambda"]),
        "b_lambda": float(merged["b_lambda"]),
        "theta_box": {"lo": lo, "hi": hi}}
    return spec, resolved


def _build_filter(raw, seed) -> tuple[FilterConfig, dict]:
    merged = _merged(DEFAULT_FILTER, raw, "filter")
    try:
        cfg = FilterConfig(n_particles=int(merged["particles"]),
                           u2=float(merged["u2"]), m=int(merged["m"]),
                           a=float(merged["a"]), seed=int(seed),
                           refine_passes=int(merged["refine_passes"]),
                           resampling=str(merged["resampling"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid filter settings: {err}")
    resolved = {"particles": cfg.n_particles, "u2": cfg.u2, "m": cfg.m,
                "a": cfg.a, "refine_passes": cfg.refine_passes,
                "resampling": cfg.resampling}
    return cfg, resolved


def _build_simulate(raw, model, sys) -> tuple[dict | None, dict | None]:
    if raw is None and model not in DEFAULT_SIMULATE:
        return None, None
    defaults = DEFAULT_SIMULATE.get(
        model, {"theta": None, "x0": None, "sigma2": None, "n": None,
                "h": None, "m": 1, "t0": 0.0})
    merged = _merged(defaults, raw, "simulate")
    for key in ("theta", "x0", "sigma2", "n", "h"):
        if merged[key] is None:
            raise ConfigError(f"simulate.{key} is required for model {model!r}")
    sim = {"theta": _as_float_list(merged["theta"], "simulate.theta",
                                   sys.param_dim),
           "x0": _as_float_list(merged["x0"], "simulate.x0", sys.state_dim),
           "sigma2": float(merged["sigma2"]), "n": int(merged["n"]),
           "h": float(merged["h"]), "m": int(merged["m"]),
           "t0": float(merged["t0"])}
    if sim["sigma2"] < 0:
        raise ConfigError("simulate.sigma2 must be >= 0")
    if sim["n"] < 1 or sim["h"] <= 0 or sim["m"] < 1:
        raise ConfigError("simulate needs n >= 1, h > 0, m >= 1")
    return sim, sim


def _build_predict(raw) -> dict | None:
    if raw is None:
        return None
    merged = _merged({"horizon": None, "h": None}, raw, "predict")
    if merged["horizon"] is None:
        raise ConfigError("predict.horizon is required")
    horizon = int(merged["horizon"])
    if horizon < 1:
        raise ConfigError("predict.horizon must be >= 1")
    h = merged["h"]
    if h is not None:
        h = float(h)
        if h <= 0:
            raise ConfigError("predict.h must be positive")
    return {"horizon": horizon, "h": h}


def _build_oracle(raw) -> dict:
    merged = _merged(DEFAULT_ORACLE, raw, "oracle")
    out = {"grid_lo": _as_float_list(merged["grid_lo"], "oracle.grid_lo", 2),
           "grid_hi": _as_float_list(merged["grid_hi"], "oracle.grid_hi", 2),
           "points_per_axis": int(merged["points_per_axis"]),
           "samples": int(merged["samples"])}
    if out["points_per_axis"] < 1 or out["samples"] < 1:
        raise ConfigError("oracle grid needs points_per_axis >= 1, samples >= 1")
    return out


def _build_diagnose(raw) -> dict:
    merged = _merged(DEFAULT_DIAGNOSE, raw, "diagnose")
    checks = merged["checks"]
    known = {"ladder", "stability", "theorem1", "theorem3"}
    if not isinstance(checks, list) or not checks or set(checks) - known:
        raise ConfigError(f"diagnose.checks must be a non-empty subset of "
                          f"{sorted(known)}")
    ladder = _as_float_list(merged["ladder"], "diagnose.ladder")
    if not ladder:
        raise ConfigError("diagnose.ladder must not be empty")
    out = {"checks": list(checks), "ladder": ladder,
           "runs_per_entry": int(merged["runs_per_entry"]),
           "threshold_factor": float(merged["threshold_factor"]),
           "theorem1_seeds": int(merged["theorem1_seeds"]),
           "theorem1_reference": str(merged["theorem1_reference"]),
           "theorem3_n": [int(v) for v in merged["theorem3_n"]],
           "theorem3_m": int(merged["theorem3_m"])}
    if out["runs_per_entry"] < 2:
        raise ConfigError("diagnose.runs_per_entry must be >= 2")
    if out["theorem1_reference"] not in ("oracle", "smallest"):
        raise ConfigError("diagnose.theorem1_reference must be 'oracle' or "
                          "'smallest'")
    return out


def load_config(path, overrides=None) -> RunConfig:
    """Parse and validate a YAML run configuration.

    ``overrides`` maps {seed, out, particles, u2, m} CLI flags onto the
    file values.  A manifest produced by a previous run (with a nested
    ``config`` key) is accepted unchanged.
    """
    overrides = overrides or {}
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}")
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML in {path}: {err}")
    if isinstance(raw, dict) and "config" in raw and "command" in raw:
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    known = {"model", "seed", "out", "data", "t0", "prior", "filter",
             "simulate", "predict", "oracle", "diagnose"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    model = raw.get("model")
    if model not in REGISTRY:
        raise ConfigError(f"model must be one of {sorted(REGISTRY)}, "
                          f"got {model!r}")
    sys = get_system(model)

    seed = int(overrides.get("seed", raw.get("seed", 0)))
    out = str(overrides.get("out", raw.get("out", "runs/out")))
    data = raw.get("data")
    if data is not None:
        data = str(data)
        if not os.path.exists(data):
            raise ConfigError(f"data file does not exist: {data}")
    t0 = raw.get("t0")
    t0 = float(t0) if t0 is not None else None

    filter_raw = dict(raw.get("filter") or {})
    for flag, key in (("particles", "particles"), ("u2", "u2"), ("m", "m")):
        if flag in overrides:
            filter_raw[key] = overrides[flag]
    prior_spec, prior_resolved = _build_prior(raw.get("prior"), model, sys)
    filter_config, filter_resolved = _build_filter(filter_raw, seed)
    simulate, simulate_resolved = _build_simulate(raw.get("simulate"), model,
                                                  sys)
    predict = _build_predict(raw.get("predict"))
    oracle = _build_oracle(raw.get("oracle"))
    diagnose = _build_diagnose(raw.get("diagnose"))

    resolved = {"model": model, "seed": seed, "data": data, "t0": t0,
                "prior": prior_resolved, "filter": filter_resolved,
                "oracle": oracle, "diagnose": diagnose}
    if simulate_resolved is not None:
        resolved["simulate"] = simulate_resolved
    if predict is not None:
        resolved["predict"] = predict

    return RunConfig(model=model, seed=seed, out=out, data=data, t0=t0,
                     prior_spec=prior_spec, filter_config=filter_config,
                     simulate=simulate, predict=predict, oracle=oracle,
                     diagnose=diagnose, resolved=resolved)


def write_manifest(path, command: str, config: RunConfig) -> None:
    """Persist the resolved config; the output directory is omitted so a
    rerun into a fresh directory stays byte-identical."""
    payload = {"command": command, "config": config.resolved}
    with open(path, "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=True, default_flow_style=False)
