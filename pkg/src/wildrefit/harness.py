"""Experiment presets, configuration handling and deterministic orchestration.

A run is described by a JSON document whose top-level fields override the
named preset. Each seed is expanded with :class:`numpy.random.SeedSequence`
into a noise seed and a sign seed, so every row is a pure function of the
configuration. Work is split into tasks keyed by ``(seed, parameter index)``
and rows are merged in that order before writing.
"""

import copy
import csv
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .bounds import default_rho_grid, mse_upper_bound, optimism_bound_check, risk_report
from .core import (
    InvalidInputError,
    NumericError,
    apply_method,
    constant_method,
    identity_method,
)
from .datagen import NoiseSpec, SignalSpec, draw_noise, make_nrsfm_scene, make_signal
from .predictors import (
    NuclearBallParams,
    nuclear_ball_method,
    nuclear_norm,
    projection_predictor,
    tikhonov_ball_method,
    tikhonov_method,
    tv_ball_method,
    tv_method,
)

EXPERIMENTS = ("tiktv", "nrsfm", "sweep", "oracle", "denoise1d")

SIGNAL = {"n": 301, "gamma": 0.0, "levels": [0.0, 1.0, -0.5], "breakpoints": [0.35, 0.7]}
GAUSSIAN = {"kind": "gaussian", "sigma": 0.3}
LIGHT_TV_PILOT = {"method": "tv", "lam": 0.003}

PRESETS = {
    "tiktv": {
        "experiment": "tiktv",
        "signal": SIGNAL,
        "gamma_grid": [0.0, 0.01, 0.02, 0.03, 0.05, 0.08],
        "noise": GAUSSIAN,
        "candidates": [
            {"label": "tikhonov", "method": "tikhonov", "lam": 0.5},
            {"label": "tv", "method": "tv", "lam": 0.05},
        ],
        "pilot": LIGHT_TV_PILOT,
        "rho_grid": [1.0, 1.2, 1.4],
        "seeds": list(range(20)),
    },
    "tiktv_noiseless": {
        "experiment": "tiktv",
        "signal": SIGNAL,
        "gamma_grid": [0.0, 0.05],
        "noise": {"kind": "gaussian", "sigma": 0.0},
        "candidates": [
            {"label": "tikhonov", "method": "tikhonov", "lam": 0.0},
            {"label": "tv", "method": "tv", "lam": 0.0},
        ],
        "pilot": None,
        "rho_grid": [1.0],
        "seeds": [0],
    },
    "denoise1d": {
        "experiment": "denoise1d",
        "signal": dict(SIGNAL, gamma=0.02),
        "noise": [
            dict(GAUSSIAN, label="gaussian"),
            {"label": "student_t", "kind": "student_t", "dof": 6.0,
             "scale": 0.3 / math.sqrt(1.5)},
            {"label": "hetero_band", "kind": "hetero_band", "sigma0": 0.05,
             "sigma1": 1.0, "band": [1 / 3, 2 / 3]},
        ],
        "family": {"method": "tikhonov", "lam_grid": np.geomspace(0.01, 10.0, 9).tolist()},
        "pilot": LIGHT_TV_PILOT,
        "rho_grid": [1.0, 1.15, 1.3],
        "seeds": list(range(20)),
    },
    "nrsfm": {
        "experiment": "nrsfm",
        "scene": {"m": 40, "p": 10, "rank": 3, "sigma": 0.25},
        "radius_scales": np.geomspace(0.25, 4.0, 9).tolist(),
        "nuclear": {"max_iters": 5000, "tol": 1e-13},
        "pilot": None,
        "rho_grid": [1.0, 1.1, 1.2],
        "seeds": list(range(20)),
    },
    "sweep": {
        "experiment": "sweep",
        "signal": dict(SIGNAL, gamma=0.02),
        "noise": GAUSSIAN,
        "predictor": {"method": "tikhonov_ball", "budget_scale": 1.0},
        "pilot": None,
        "rho_grid": default_rho_grid().tolist(),
        "seeds": list(range(20)),
    },
    "sweep_identity": {
        "experiment": "sweep",
        "signal": dict(SIGNAL, gamma=0.02),
        "noise": GAUSSIAN,
        "predictor": {"method": "identity"},
        "pilot": {"method": "tikhonov", "lam": 0.5},
        "rho_grid": np.linspace(0.5, 4.0, 15).tolist(),
        "seeds": list(range(5)),
    },
    "oracle": {
        "experiment": "oracle",
        "signal": dict(SIGNAL, gamma=0.02),
        "noise": GAUSSIAN,
        "predictor": {"method": "tikhonov_ball", "budget_scale": 1.0},
        "pilot": None,
        "rho_grid": default_rho_grid().tolist(),
        "t": 2.0,
        "seeds": list(range(20)),
    },
    "oracle_noiseless": {
        "experiment": "oracle",
        "signal": dict(SIGNAL, gamma=0.02),
        "noise": {"kind": "gaussian", "sigma": 0.0},
        "predictor": {"method": "tikhonov_ball", "budget_scale": 1.0},
        "pilot": None,
        "rho_grid": default_rho_grid().tolist(),
        "t": 2.0,
        "seeds": [0, 1],
    },
}

FIELDS = (
    "experiment", "preset", "signal", "gamma_grid", "noise", "candidates", "family",
    "predictor", "pilot", "scene", "radius_scales", "nuclear", "rho_grid", "seeds",
    "t", "workers", "out",
)

COLUMNS = {
    "tiktv": ("experiment", "seed", "gamma", "label", "rho", "r_tilde", "wild_optimism",
              "mse_bound", "true_mse", "selected_label", "oracle_label"),
    "denoise1d": ("experiment", "seed", "noise", "lam", "rho", "r_tilde", "wild_optimism",
                  "mse_bound", "true_mse", "selected_lam", "oracle_lam"),
    "nrsfm": ("experiment", "seed", "radius_scale", "radius", "rho", "r_tilde",
              "wild_optimism", "mse_bound", "true_mse", "selected_scale", "oracle_scale"),
    "sweep": ("experiment", "seed", "rho", "r_tilde", "wild_optimism", "b1", "b2"),
    "sweep_crossing": ("experiment", "seed", "rho_star", "r_bound", "status", "rhat",
                       "covered"),
    "oracle": ("experiment", "seed", "rho_star", "r", "rho_opt", "wild_optimism",
               "true_optimism", "h_term", "pilot_error", "rhs", "holds", "true_mse",
               "empirical_excess", "rhat", "w_infnorm", "t", "pilot_tag"),
}

OUTPUTS = {
    "tiktv": ("tiktv",),
    "denoise1d": ("denoise1d",),
    "nrsfm": ("nrsfm",),
    "sweep": ("sweep", "sweep_crossing"),
    "oracle": ("oracle",),
}


class ConfigError(InvalidInputError):
    """The experiment configuration is malformed."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (preset merged with overrides)."""

    experiment: str
    preset: str
    rho_grid: tuple
    seeds: tuple
    signal: dict | None = None
    gamma_grid: tuple | None = None
    noise: object = None
    candidates: tuple | None = None
    family: dict | None = None
    predictor: dict | None = None
    pilot: object = None
    scene: dict | None = None
    radius_scales: tuple | None = None
    nuclear: dict | None = None
    t: float = 2.0
    workers: int = 1
    out: str | None = None

    def to_dict(self):
        return json.loads(json.dumps(asdict(self)))


# -- configuration ------------------------------------------------------------


def _real_list(value, name, positive=False, ascending=False, nonempty=True):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list of numbers")
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of numbers") from exc
    if nonempty and not out:
        raise ConfigError(f"{name} must not be empty")
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must hold finite numbers")
    if positive and any(v <= 0 for v in out):
        raise ConfigError(f"{name} must hold positive numbers")
    if ascending and any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{name} must be strictly ascending")
    return out


def _seed_list(value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("seeds must be a non-empty list of integers")
    seeds = []
    for s in value:
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            raise ConfigError(f"seed {s!r} is not a nonnegative integer")
        seeds.append(s)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    return tuple(seeds)


def _signal_spec(signal, gamma=None):
    try:
        kw = dict(signal)
        if gamma is not None:
            kw["gamma"] = gamma
        kw["levels"] = tuple(kw.get("levels", SIGNAL["levels"]))
        kw["breakpoints"] = tuple(kw.get("breakpoints", SIGNAL["breakpoints"]))
        return SignalSpec(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad signal section: {exc}") from exc


def _noise_spec(noise, seed=0):
    kw = {k: v for k, v in dict(noise).items() if k != "label"}
    if "band" in kw:
        kw["band"] = tuple(kw["band"])
    try:
        return NoiseSpec(seed=seed, **kw)
    except TypeError as exc:
        raise ConfigError(f"bad noise section: {exc}") from exc


def _penalty(kind, f):
    d = np.diff(f)
    return float((d**2).sum()) if kind == "tikhonov_ball" else float(np.abs(d).sum())


def build_method(spec, n, fstar=None):
    """Construct a 1-D predictor from a config mapping.

    ``method`` is one of ``tikhonov``, ``tv`` (with ``lam``),
    ``tikhonov_ball``, ``tv_ball`` (with ``budget``, or ``budget_scale``
    times the penalty of ``fstar``), ``identity``, ``constant`` or
    ``projection`` (with a ``set`` mapping).
    """
    if not isinstance(spec, dict) or "method" not in spec:
        raise ConfigError(f"predictor spec needs a 'method' key: {spec!r}")
    kind = spec["method"]
    if kind in ("tikhonov", "tv"):
        if "lam" not in spec:
            raise ConfigError(f"{kind} predictor needs 'lam'")
        make = tikhonov_method if kind == "tikhonov" else tv_method
        return make(spec["lam"], n)
    if kind in ("tikhonov_ball", "tv_ball"):
        make = tikhonov_ball_method if kind == "tikhonov_ball" else tv_ball_method
        if "budget" in spec:
            return make(spec["budget"], n)
        if "budget_scale" in spec:
            if fstar is None:
                raise ConfigError("budget_scale needs a known signal")
            return make(float(spec["budget_scale"]) * _penalty(kind, fstar), n)
        raise ConfigError(f"{kind} predictor needs 'budget' or 'budget_scale'")
    if kind == "identity":
        return identity_method(n)
    if kind == "constant":
        return constant_method(n)
    if kind == "projection":
        return projection_predictor(spec.get("set", {}), n)
    raise ConfigError(f"unknown predictor method {kind!r}")


def _check_pilot(pilot, n, fstar):
    if pilot is None or pilot == "fstar":
        return
    if isinstance(pilot, dict):
        build_method(pilot, n, fstar)
        return
    raise ConfigError("pilot must be null, \"fstar\", or a predictor mapping")


def _pilot_values(pilot, y, fstar):
    if pilot is None:
        return None
    if pilot == "fstar":
        return fstar
    return apply_method(build_method(pilot, y.shape[0], fstar), y)


def config_from_dict(doc):
    """Merge ``doc`` over its preset and validate every referenced parameter."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown configuration fields: {', '.join(unknown)}")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    preset = doc.get("preset", experiment)
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    base = copy.deepcopy(PRESETS[preset])
    if base["experiment"] != experiment:
        raise ConfigError(f"preset {preset!r} belongs to experiment {base['experiment']!r}")
    base.update(copy.deepcopy(doc))
    base["preset"] = preset

    kw = {
        "experiment": experiment,
        "preset": preset,
        "rho_grid": _real_list(base.get("rho_grid"), "rho_grid", positive=True, ascending=True),
        "seeds": _seed_list(base.get("seeds")),
        "pilot": base.get("pilot"),
    }
    t = base.get("t", 2.0)
    if isinstance(t, bool) or not isinstance(t, (int, float)) or not t > 0:
        raise ConfigError("t must be a positive number")
    kw["t"] = float(t)
    workers = base.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")
    kw["workers"] = workers
    out = base.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a string path")
    kw["out"] = out

    try:
        if experiment == "nrsfm":
            _validate_nrsfm(base, kw)
        else:
            _validate_1d(experiment, base, kw)
    except ConfigError:
        raise
    except (InvalidInputError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**kw)


def _validate_1d(experiment, base, kw):
    if not isinstance(base.get("signal"), dict):
        raise ConfigError("signal section must be a mapping")
    spec = _signal_spec(base["signal"])
    kw["signal"] = dict(base["signal"])
    gammas = [spec.gamma]
    if experiment == "tiktv":
        kw["gamma_grid"] = _real_list(base.get("gamma_grid"), "gamma_grid")
        gammas = list(kw["gamma_grid"])
    fstars = [make_signal(_signal_spec(base["signal"], g)) for g in gammas]
    n = spec.n

    noise = base.get("noise")
    if experiment == "denoise1d":
        if isinstance(noise, dict):
            noise = [dict(noise, label=noise.get("label", noise.get("kind")))]
        if not isinstance(noise, list) or not noise:
            raise ConfigError("noise must be a mapping or a non-empty list of mappings")
        labels = []
        for item in noise:
            if not isinstance(item, dict) or "label" not in item:
                raise ConfigError("each noise variant needs a 'label'")
            _noise_spec(item)
            labels.append(item["label"])
        if len(set(labels)) != len(labels):
            raise ConfigError("noise labels must be unique")
        kw["noise"] = tuple(dict(item) for item in noise)
    else:
        if not isinstance(noise, dict):
            raise ConfigError("noise must be a mapping")
        _noise_spec(noise)
        kw["noise"] = dict(noise)

    if experiment == "tiktv":
        cands = base.get("candidates")
        if not isinstance(cands, list) or not cands:
            raise ConfigError("candidates must be a non-empty list")
        labels = [c.get("label") if isinstance(c, dict) else None for c in cands]
        if any(not isinstance(lab, str) or not lab for lab in labels):
            raise ConfigError("every candidate needs a non-empty string 'label'")
        if len(set(labels)) != len(labels):
            raise ConfigError("candidate labels must be unique")
        for c in cands:
            for f in fstars:
                build_method(c, n, f)
        kw["candidates"] = tuple(dict(c) for c in cands)
    elif experiment == "denoise1d":
        family = base.get("family")
        if not isinstance(family, dict) or "method" not in family:
            raise ConfigError("family must be a mapping with 'method' and 'lam_grid'")
        lams = _real_list(family.get("lam_grid"), "family.lam_grid", ascending=True)
        for lam in lams:
            build_method({"method": family["method"], "lam": lam}, n)
        kw["family"] = {"method": family["method"], "lam_grid": list(lams)}
    else:
        if not isinstance(base.get("predictor"), dict):
            raise ConfigError("predictor must be a mapping")
        build_method(base["predictor"], n, fstars[0])
        kw["predictor"] = dict(base["predictor"])
    for f in fstars:
        _check_pilot(kw["pilot"], n, f)


def _validate_nrsfm(base, kw):
    scene = base.get("scene")
    if not isinstance(scene, dict):
        raise ConfigError("scene must be a mapping")
    unknown = set(scene) - {"m", "p", "rank", "sigma"}
    if unknown:
        raise ConfigError(f"unknown scene fields: {', '.join(sorted(unknown))}")
    make_nrsfm_scene(**scene, seed=0)
    kw["scene"] = dict(scene)
    kw["radius_scales"] = _real_list(
        base.get("radius_scales"), "radius_scales", positive=True, ascending=True
    )
    nuclear = dict(base.get("nuclear") or {})
    unknown = set(nuclear) - {"max_iters", "tol", "step"}
    if unknown:
        raise ConfigError(f"unknown nuclear fields: {', '.join(sorted(unknown))}")
    NuclearBallParams(1.0, **nuclear)
    kw["nuclear"] = nuclear
    if kw["pilot"] not in (None, "fstar"):
        raise ConfigError("nrsfm pilot must be null or \"fstar\"")


def load_config(path, seed_count=None):
    """Read a JSON config file; ``seed_count`` replaces the seeds by ``0..N-1``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if seed_count is not None:
        if seed_count < 1:
            raise ConfigError("--seed-count must be positive")
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        doc["seeds"] = list(range(seed_count))
    return config_from_dict(doc)


# -- execution ------------------------------------------------------------------


def seed_pair(seed):
    """Independent ``(noise_seed, sign_seed)`` derived from one integer seed."""
    state = np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _argmin_label(values, labels):
    """First label with the smallest value."""
    best = min(range(len(labels)), key=lambda i: (values[i], i))
    return labels[best]


def _selection_rows(exp, seed, fits, y, sign_seed, pilot, rho_grid, key_names,
                    choice_names, truth):
    """Rows for one data set and its candidate fits, one per (candidate, rho).

    ``fits`` holds ``(key_values, label, method, fhat)``. The wild and
    oracle choices are written under ``choice_names``; ``truth`` is the
    noiseless response vector behind the true MSE.
    """
    labels = [label for _, label, _, _ in fits]
    true_mse = [float(np.mean((fhat - truth) ** 2)) for _, _, _, fhat in fits]
    oracle = _argmin_label(true_mse, labels)
    selected_name, oracle_name = choice_names
    rows = []
    for rho in rho_grid:
        reps, bounds = [], []
        for _, _, method, fhat in fits:
            bound, rep = mse_upper_bound(method, y, fhat, sign_seed, rho, pilot)
            reps.append(rep)
            bounds.append(bound)
        chosen = _argmin_label(bounds, labels)
        for (keys, _, _, _), rep, bound, err in zip(fits, reps, bounds, true_mse):
            row = {"experiment": exp, "seed": seed, "rho": float(rho)}
            row.update(zip(key_names, keys))
            row.update(
                r_tilde=rep.wild_radius,
                wild_optimism=rep.wild_optimism,
                mse_bound=bound,
                true_mse=err,
            )
            row[selected_name] = chosen
            row[oracle_name] = oracle
            rows.append(row)
    return rows


def _task_tiktv(cfg, seed, index):
    gamma = cfg.gamma_grid[index]
    fstar = make_signal(_signal_spec(cfg.signal, gamma))
    noise_seed, sign_seed = seed_pair(seed)
    y = fstar + draw_noise(_noise_spec(cfg.noise, noise_seed), fstar.shape[0])
    pilot = _pilot_values(cfg.pilot, y, fstar)
    fits = []
    for cand in cfg.candidates:
        m = build_method(cand, y.shape[0], fstar)
        fits.append(((gamma, cand["label"]), cand["label"], m, apply_method(m, y)))
    return _selection_rows("tiktv", seed, fits, y, sign_seed, pilot, cfg.rho_grid,
                           ("gamma", "label"), ("selected_label", "oracle_label"), fstar)


def _task_denoise1d(cfg, seed, index):
    noise = cfg.noise[index]
    fstar = make_signal(_signal_spec(cfg.signal))
    noise_seed, sign_seed = seed_pair(seed)
    y = fstar + draw_noise(_noise_spec(noise, noise_seed), fstar.shape[0])
    pilot = _pilot_values(cfg.pilot, y, fstar)
    fits = []
    for lam in cfg.family["lam_grid"]:
        m = build_method({"method": cfg.family["method"], "lam": lam}, y.shape[0])
        fits.append(((noise["label"], lam), lam, m, apply_method(m, y)))
    return _selection_rows("denoise1d", seed, fits, y, sign_seed, pilot, cfg.rho_grid,
                           ("noise", "lam"), ("selected_lam", "oracle_lam"), fstar)


def _task_nrsfm(cfg, seed, index):
    noise_seed, sign_seed = seed_pair(seed)
    scene = make_nrsfm_scene(**cfg.scene, seed=noise_seed)
    y = scene.Y.ravel()
    truth = scene.clean.ravel()
    pilot = truth if cfg.pilot == "fstar" else None
    scale_ref = nuclear_norm(scene.S_star)
    fits = []
    for s in cfg.radius_scales:
        radius = s * scale_ref
        m = nuclear_ball_method(scene.R, scene.p, NuclearBallParams(radius, **cfg.nuclear))
        fits.append(((s, radius), s, m, apply_method(m, y)))
    return _selection_rows("nrsfm", seed, fits, y, sign_seed, pilot, cfg.rho_grid,
                           ("radius_scale", "radius"), ("selected_scale", "oracle_scale"),
                           truth)


def _simulate_1d(cfg, seed):
    fstar = make_signal(_signal_spec(cfg.signal))
    noise_seed, sign_seed = seed_pair(seed)
    y = fstar + draw_noise(_noise_spec(cfg.noise, noise_seed), fstar.shape[0])
    m = build_method(cfg.predictor, y.shape[0], fstar)
    fhat = apply_method(m, y)
    pilot = _pilot_values(cfg.pilot, y, fstar)
    return fstar, y, m, fhat, pilot, sign_seed


def _task_sweep(cfg, seed, index):
    fstar, y, m, fhat, pilot, sign_seed = _simulate_1d(cfg, seed)
    report = risk_report(m, y, fhat, sign_seed, cfg.rho_grid, pilot)
    rhat = float(np.sqrt(np.mean((fhat - apply_method(m, fstar)) ** 2)))
    rows = [
        {"table": "sweep", "experiment": "sweep", "seed": seed, "rho": p.rho,
         "r_tilde": p.r_tilde, "wild_optimism": p.w_complexity, "b1": p.b1, "b2": p.b2}
        for p in report.sweep
    ]
    rows.append(
        {"table": "sweep_crossing", "experiment": "sweep", "seed": seed,
         "rho_star": report.rho_star, "r_bound": report.r_bound,
         "status": report.crossing_status, "rhat": rhat,
         "covered": bool(report.r_bound >= rhat)}
    )
    return rows


def _task_oracle(cfg, seed, index):
    fstar, y, m, fhat, pilot, sign_seed = _simulate_1d(cfg, seed)
    report = risk_report(m, y, fhat, sign_seed, cfg.rho_grid, pilot)
    check, diag = optimism_bound_check(m, y, fhat, fstar, sign_seed, report.r_bound,
                                       cfg.t, pilot)
    return [{
        "experiment": "oracle", "seed": seed, "rho_star": report.rho_star,
        "r": report.r_bound, "rho_opt": report.rho_opt,
        "wild_optimism": check.wild_optimism, "true_optimism": check.true_optimism,
        "h_term": check.h_term, "pilot_error": check.pilot_error,
        "rhs": check.wild_optimism + check.h_term + check.pilot_error,
        "holds": check.holds, "true_mse": diag.true_mse,
        "empirical_excess": diag.empirical_excess, "rhat": diag.rhat,
        "w_infnorm": diag.w_infnorm, "t": diag.t,
        "pilot_tag": "fhat" if cfg.pilot is None else (
            "fstar" if cfg.pilot == "fstar" else "explicit"),
    }]


TASKS = {
    "tiktv": _task_tiktv,
    "denoise1d": _task_denoise1d,
    "nrsfm": _task_nrsfm,
    "sweep": _task_sweep,
    "oracle": _task_oracle,
}


def task_keys(cfg):
    """Work units ``(seed, parameter index)`` in output order."""
    if cfg.experiment == "tiktv":
        params = range(len(cfg.gamma_grid))
    elif cfg.experiment == "denoise1d":
        params = range(len(cfg.noise))
    else:
        params = range(1)
    return [(seed, i) for seed in cfg.seeds for i in params]


def _run_one(args):
    cfg, seed, index = args
    return TASKS[cfg.experiment](cfg, seed, index)


def run_experiment(cfg):
    """Execute every task and return ``{table name: rows}`` in key order."""
    keys = task_keys(cfg)
    jobs = [(cfg, seed, i) for seed, i in keys]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    # results arrive in job order already; sort explicitly so the contract
    # does not depend on executor behaviour
    ordered = [rows for _, rows in sorted(zip(keys, results), key=lambda kv: kv[0])]
    tables = {name: [] for name in OUTPUTS[cfg.experiment]}
    for rows in ordered:
        for row in rows:
            name = row.pop("table", cfg.experiment)
            tables[name].append(row)
    return tables


# -- output -------------------------------------------------------------------------


def format_value(value):
    """CSV text for one cell: shortest round-trip floats, ``null`` for missing."""
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise NumericError(f"non-finite value {value!r} in results")
        return repr(value)
    return str(value)


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if set(row) != set(columns):
            raise NumericError(f"row does not match schema: {sorted(set(row) ^ set(columns))}")
        writer.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def resolve_out_dir(cli_out=None, cfg=None):
    """``--out`` beats ``WILDREFIT_OUT``, which beats the config's ``out``."""
    if cli_out:
        return cli_out
    env = os.environ.get("WILDREFIT_OUT")
    if env:
        return env
    if cfg is not None and cfg.out:
        return cfg.out
    return "wildrefit_out"


def _versions():
    import scipy

    from . import __version__

    return {
        "wildrefit": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernel_backend": kernels.BACKEND,
    }


def write_outputs(cfg, tables, out_dir, wall_time):
    """Write one CSV per table plus ``<experiment>_manifest.json``; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    files = {}
    for name, rows in tables.items():
        columns = COLUMNS[name]
        text = rows_to_csv(rows, columns)
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
        files[f"{name}.csv"] = {"columns": list(columns), "rows": len(rows)}
    manifest = {
        "experiment": cfg.experiment,
        "preset": cfg.preset,
        "config": cfg.to_dict(),
        "seeds": list(cfg.seeds),
        "seed_derivation": "SeedSequence(seed).generate_state(2) -> (noise, signs)",
        "files": files,
        "versions": _versions(),
        "wall_time_s": wall_time,
    }
    path = os.path.join(out_dir, f"{cfg.experiment}_manifest.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    return paths


def run_and_write(cfg, out_dir):
    start = time.perf_counter()
    tables = run_experiment(cfg)
    return write_outputs(cfg, tables, out_dir, time.perf_counter() - start)


__all__ = [
    "COLUMNS",
    "ConfigError",
    "EXPERIMENTS",
    "ExperimentConfig",
    "PRESETS",
    "build_method",
    "config_from_dict",
    "format_value",
    "load_config",
    "resolve_out_dir",
    "rows_to_csv",
    "run_and_write",
    "run_experiment",
    "seed_pair",
    "task_keys",
    "write_outputs",
]
