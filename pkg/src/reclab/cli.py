"""Command line front end: config ingestion, orchestration, artifacts.

Config files are flat UTF-8 text, one `key = value` per line, `#` comments,
dotted section keys.  Unknown keys are fatal and every violation is reported,
not just the first.  Runs write RFC-4180-style CSV artifacts plus a pretty
JSON summary with fixed key order, and a manifest holding sha256 digests of
every artifact.  For a fixed (config, master seed) the artifacts are bitwise
identical across repeat runs and worker counts; wall clock and worker count
live only in the manifest, never inside the compared artifacts.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._kernels import backend_name
from .errors import (
    ConfigError,
    DegenerateMassError,
    DegenerateSupportError,
    DimensionMismatchError,
    InexactRegimeError,
    NumericalFailureError,
    RejectedInputError,
    UnsupportedPairingError,
)
from .experiments import (
    CENSORED,
    boshernitzan_stat,
    estimate_correlation_decay,
    estimate_E_measure,
    estimate_E_pair,
    local_stats,
    run_sbc,
)
from .measures import grid_density_from_csv, lebesgue, sample_measure
from .observables import constant, cosine_wave, distance_to_point, sine_wave
from .phase import CHEBYSHEV, EUCLIDEAN, Point, SpaceSpec
from .rng import seed_stream
from .systems import identity, rotation, shift_map, toral_automorphism
from .targets import (
    explicit_targets,
    log_power_targets,
    power_targets,
    validate_target_sequence,
)

__all__ = [
    "ExperimentConfig",
    "validate_config",
    "serialize_config",
    "run_experiment",
    "main",
]

EXPERIMENTS = ("sbc", "en", "pair", "decay", "local", "bosh", "validate")

_DEGENERATE_ERRORS = (
    ConfigError,
    RejectedInputError,
    DegenerateMassError,
    DegenerateSupportError,
    DimensionMismatchError,
    UnsupportedPairingError,
    InexactRegimeError,
)


# ---------------------------------------------------------------------------
# config schema

# key -> (default or None, parse hint).  None default means "required only
# when some rule below demands it"; parsing still type-checks every key that
# appears.
_SCHEMA: dict[str, str] = {
    "experiment": "choice",
    "master_seed": "int",
    "out": "str",
    "workers": "int",
    "space.dimension": "int",
    "space.metric": "metric",
    "system.kind": "str",
    "system.matrix": "int_list",
    "system.base": "int",
    "system.angle": "float",
    "measure.kind": "str",
    "measure.csv": "str",
    "measure.resolution": "int",
    "targets.kind": "str",
    "targets.c": "float",
    "targets.gamma": "float",
    "targets.beta": "float",
    "targets.horizon": "int",
    "targets.values": "float_list",
    "targets.epsilon": "float",
    "sbc.n_max": "int",
    "sbc.n_seeds": "int",
    "sbc.checkpoints": "int_list",
    "sbc.fixed_center": "float_list",
    "en.n": "int_list",
    "en.n_samples": "int",
    "pair.pairs": "pair_list",
    "pair.n_samples": "int",
    "decay.observables": "obs_list",
    "decay.gaps": "int_list",
    "decay.n_samples": "int",
    "local.r_grid": "float_list",
    "local.cap": "int",
    "local.n_seeds": "int",
    "bosh.alpha": "float",
    "bosh.n_max": "int",
    "bosh.n_seeds": "int",
}

_DEFAULTS: dict[str, str] = {
    "master_seed": "0",
    "out": "results",
    "workers": "1",
    "space.dimension": "1",
    "space.metric": "chebyshev-quotient",
    "measure.kind": "lebesgue",
    "targets.epsilon": "0.5",
    "sbc.n_seeds": "100",
    "en.n_samples": "1000000",
    "pair.n_samples": "1000000",
    "decay.n_samples": "100000",
    "local.cap": "100000000",
    "local.n_seeds": "100",
    "bosh.n_seeds": "100",
}


def _parse_scalar(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "int_list":
        return [int(p) for p in raw.split(",") if p.strip() != ""]
    if kind == "float_list":
        return [float(p) for p in raw.split(",") if p.strip() != ""]
    if kind == "pair_list":
        out = []
        for part in raw.split(","):
            a, b = part.split(":")
            out.append((int(a), int(b)))
        return out
    if kind == "metric":
        if raw not in (CHEBYSHEV, EUCLIDEAN):
            raise ValueError(f"must be {CHEBYSHEV} or {EUCLIDEAN}")
        return raw
    if kind == "choice":
        if raw not in EXPERIMENTS:
            raise ValueError(f"must be one of {', '.join(EXPERIMENTS)}")
        return raw
    return raw


def _parse_observable(spec: str, space: SpaceSpec):
    name, _, arg = spec.partition(":")
    name = name.strip()
    if name == "cos":
        return cosine_wave([int(p) for p in arg.split(";")])
    if name == "sin":
        return sine_wave([int(p) for p in arg.split(";")])
    if name == "dist":
        return distance_to_point(space, Point.from_floats([float(p) for p in arg.split(";")]))
    if name == "const":
        return constant(float(arg))
    raise ValueError(f"unknown observable {name!r} (cos, sin, dist, const)")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved run description plus its normalized text echo."""

    echo: dict[str, str]
    experiment: str
    master_seed: int
    out: str
    workers: int
    space: SpaceSpec
    system: object
    measure: object
    seq: object
    params: dict
    source_path: str = ""


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parsing it back reproduces the same echo."""
    return "".join(f"{k} = {cfg.echo[k]}\n" for k in sorted(cfg.echo))


def _parse_text(text: str) -> tuple[dict[str, str], list[str]]:
    pairs: dict[str, str] = {}
    violations: list[str] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            violations.append(f"line {ln}: expected 'key = value', got {body!r}")
            continue
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            violations.append(f"unknown key {key!r}")
            continue
        if key in pairs:
            violations.append(f"duplicate key {key!r}")
            continue
        pairs[key] = value
    return pairs, violations


def _require(pairs: dict, key: str, violations: list[str]) -> bool:
    if key not in pairs:
        violations.append(f"missing required key {key!r}")
        return False
    return True


def validate_config(path_or_text: str, is_text: bool = False) -> ExperimentConfig:
    """Parse and fully validate a config; raises ConfigError listing every
    violation found rather than stopping at the first."""
    if is_text:
        text, src = path_or_text, "<inline>"
    else:
        src = str(path_or_text)
        try:
            with open(src, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError([f"cannot read config: {e}"]) from None

    pairs, violations = _parse_text(text)
    for key, default in _DEFAULTS.items():
        pairs.setdefault(key, default)

    values: dict[str, object] = {}
    for key, raw in pairs.items():
        try:
            values[key] = _parse_scalar(_SCHEMA[key], raw)
        except (ValueError, TypeError) as e:
            violations.append(f"{key}: cannot parse {raw!r} ({e})")

    def val(key):
        return values.get(key)

    if not _require(pairs, "experiment", violations):
        raise ConfigError(violations)
    experiment = val("experiment")

    # ---- space ----
    dim = val("space.dimension")
    if isinstance(dim, int) and dim < 1:
        violations.append("space.dimension: must be >= 1")
    space = None
    if not violations:
        try:
            space = SpaceSpec(dimension=dim, metric=val("space.metric"))
        except Exception as e:
            violations.append(f"space: {e}")

    # ---- system ----
    system = None
    if _require(pairs, "system.kind", violations):
        kind = val("system.kind")
        try:
            if kind == "toral_automorphism":
                if _require(pairs, "system.matrix", violations):
                    flat = val("system.matrix")
                    d = dim if isinstance(dim, int) else 0
                    if len(flat) != d * d:
                        violations.append(
                            f"system.matrix: need {d * d} row-major entries for dimension {d}"
                        )
                    else:
                        rows = tuple(
                            tuple(flat[i * d + j] for j in range(d)) for i in range(d)
                        )
                        system = toral_automorphism(rows)
            elif kind == "shift_map":
                if _require(pairs, "system.base", violations):
                    system = shift_map(val("system.base"))
            elif kind == "rotation":
                if _require(pairs, "system.angle", violations):
                    system = rotation(val("system.angle"))
            elif kind == "identity":
                system = identity()
            else:
                violations.append(f"system.kind: unknown kind {kind!r}")
        except Exception as e:
            violations.append(f"system: {e}")

    # ---- measure ----
    measure = None
    mkind = val("measure.kind")
    if mkind == "lebesgue":
        measure = lebesgue()
    elif mkind == "grid_density":
        ok = _require(pairs, "measure.csv", violations)
        ok = _require(pairs, "measure.resolution", violations) and ok
        if ok and isinstance(dim, int):
            csv_path = str(val("measure.csv"))
            if not is_text and not os.path.isabs(csv_path):
                csv_path = os.path.join(os.path.dirname(os.path.abspath(src)), csv_path)
            if not os.path.exists(csv_path):
                violations.append(f"measure.csv: file not found: {csv_path}")
            else:
                try:
                    measure = grid_density_from_csv(csv_path, val("measure.resolution"), dim)
                except Exception as e:
                    violations.append(f"measure: {e}")
    elif mkind is not None:
        violations.append(f"measure.kind: unknown kind {mkind!r}")

    # ---- targets ----
    seq = None
    needs_targets = experiment in ("sbc", "en", "pair", "validate")
    if needs_targets and _require(pairs, "targets.kind", violations):
        tkind = val("targets.kind")
        if tkind == "power":
            ok = _require(pairs, "targets.gamma", violations)
            ok = _require(pairs, "targets.horizon", violations) and ok
            gamma = val("targets.gamma")
            if isinstance(gamma, float) and not (0.0 < gamma <= 1.0):
                violations.append("targets.gamma: gamma must be in (0,1]")
                ok = False
            if ok:
                seq = power_targets(values.get("targets.c", 1.0), gamma, val("targets.horizon"))
        elif tkind == "log_power":
            ok = _require(pairs, "targets.beta", violations)
            ok = _require(pairs, "targets.horizon", violations) and ok
            if ok:
                seq = log_power_targets(
                    values.get("targets.c", 1.0), val("targets.beta"), val("targets.horizon")
                )
        elif tkind == "explicit":
            if _require(pairs, "targets.values", violations):
                seq = explicit_targets(val("targets.values"))
        else:
            violations.append(f"targets.kind: unknown kind {tkind!r}")
    eps = val("targets.epsilon")
    if isinstance(eps, float) and eps <= 0:
        violations.append("targets.epsilon: must be > 0")

    # ---- per-experiment requirements ----
    params: dict = {}
    if experiment == "sbc":
        if _require(pairs, "sbc.n_max", violations):
            params["n_max"] = val("sbc.n_max")
            if "sbc.checkpoints" not in pairs:
                n_max = params["n_max"]
                cps = []
                c = 10
                while isinstance(n_max, int) and c < n_max:
                    cps.append(c)
                    c *= 10
                cps.append(n_max)
                params["checkpoints"] = cps
                pairs["sbc.checkpoints"] = ",".join(str(c) for c in cps)
            else:
                params["checkpoints"] = val("sbc.checkpoints")
        params["n_seeds"] = val("sbc.n_seeds")
        if "sbc.fixed_center" in pairs and space is not None:
            center = val("sbc.fixed_center")
            if isinstance(center, list) and len(center) != space.dimension:
                violations.append("sbc.fixed_center: wrong number of coordinates")
            else:
                params["fixed_center"] = Point.from_floats(center)
    elif experiment == "en":
        if _require(pairs, "en.n", violations):
            params["ns"] = val("en.n")
        params["n_samples"] = val("en.n_samples")
    elif experiment == "pair":
        if _require(pairs, "pair.pairs", violations):
            params["pairs"] = val("pair.pairs")
        params["n_samples"] = val("pair.n_samples")
    elif experiment == "decay":
        ok = _require(pairs, "decay.observables", violations)
        ok = _require(pairs, "decay.gaps", violations) and ok
        if ok and space is not None:
            try:
                obs = [
                    _parse_observable(p, space)
                    for p in str(pairs["decay.observables"]).split("|")
                ]
                if len(obs) not in (2, 3):
                    violations.append("decay.observables: need 2 or 3 observables")
                params["observables"] = obs
            except Exception as e:
                violations.append(f"decay.observables: {e}")
            params["gaps"] = val("decay.gaps")
        params["n_samples"] = val("decay.n_samples")
    elif experiment == "local":
        if _require(pairs, "local.r_grid", violations):
            grid = val("local.r_grid")
            if isinstance(grid, list) and (
                any(r <= 0 for r in grid) or any(b >= a for a, b in zip(grid, grid[1:]))
            ):
                violations.append("local.r_grid: must be positive and strictly descending")
            params["r_grid"] = grid
        params["cap"] = val("local.cap")
        params["n_seeds"] = val("local.n_seeds")
    elif experiment == "bosh":
        ok = _require(pairs, "bosh.alpha", violations)
        ok = _require(pairs, "bosh.n_max", violations) and ok
        alpha = val("bosh.alpha")
        if isinstance(alpha, float) and alpha <= 0:
            violations.append("bosh.alpha: must be > 0")
        if ok:
            params["alpha"] = alpha
            params["n_max"] = val("bosh.n_max")
        params["n_seeds"] = val("bosh.n_seeds")

    for key in ("master_seed", "workers"):
        v = val(key)
        if isinstance(v, int) and v < (0 if key == "master_seed" else 1):
            violations.append(f"{key}: out of range")

    if violations:
        raise ConfigError(sorted(set(violations)))

    echo = {k: str(pairs[k]) for k in pairs}
    return ExperimentConfig(
        echo=echo,
        experiment=experiment,
        master_seed=val("master_seed"),
        out=str(val("out")),
        workers=val("workers"),
        space=space,
        system=system,
        measure=measure,
        seq=seq,
        params=params,
        source_path=src,
    )


# ---------------------------------------------------------------------------
# artifact helpers


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    return repr(f)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _validation_report(validation) -> dict:
    return {
        "verdict": validation.verdict,
        "epsilon_found": validation.epsilon_found,
        "violations": [int(v) for v in validation.bound_violations],
        "n_violations": int(validation.n_violations),
        "activation_n": validation.activation_n,
        "ratio_table": {repr(float(a)): float(v) for a, v in validation.ratio_table.items()},
        "n_min": validation.n_min,
        "horizon": validation.horizon,
        "notes": list(validation.notes),
    }


# ---------------------------------------------------------------------------
# experiment runners (each returns (artifact rows writer calls, summary dict))


def _run_sbc_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    validation = validate_target_sequence(cfg.seq)
    if validation.verdict == "fail" and not override:
        report = json.dumps(_validation_report(validation), indent=2, sort_keys=True)
        raise RejectedInputError(
            "target sequence failed admissibility validation "
            "(pass --override-assumption1 to run anyway); report:\n" + report
        )
    res = run_sbc(
        cfg.system,
        cfg.measure,
        cfg.space,
        cfg.seq,
        p["n_max"],
        p["n_seeds"],
        p["checkpoints"],
        cfg.master_seed,
        fixed_center=p.get("fixed_center"),
        override_validation=override,
        workers=workers,
    )
    rows = []
    for i in range(res.n_seeds):
        for j, n in enumerate(res.checkpoints):
            rows.append((i, int(n), int(res.hit_counts[i, j]), res.cum_mass[j], res.ratios[i, j]))
    _write_csv(os.path.join(out, "sbc_ratio.csv"), ["seed", "n", "S_n", "cum_mass", "ratio"], rows)
    summary = {
        "mean_final": res.mean_final,
        "std_final": res.std_final,
        "median_final": res.median_final,
        "quantiles": {repr(q): v for q, v in res.quantiles.items()},
        "checkpoints": [int(n) for n in res.checkpoints],
        "cum_mass": [float(v) for v in res.cum_mass],
        "n_seeds": res.n_seeds,
        "n_max": res.n_max,
        "non_mixing": res.non_mixing,
        "fixed_center": res.fixed_center,
        "validation": _validation_report(res.validation),
        "notes": list(res.notes),
    }
    return ["sbc_ratio.csv"], summary


def _run_en_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    rows = []
    ests = []
    for idx, n in enumerate(p["ns"]):
        rng = seed_stream(cfg.master_seed, idx)
        est = estimate_E_measure(cfg.system, cfg.measure, cfg.space, cfg.seq, n, p["n_samples"], rng)
        ests.append(est)
        rows.append((est.n, est.mu_hat, est.std_error, est.target, est.deviation))
    _write_csv(os.path.join(out, "en_measure.csv"), ["n", "mu_hat", "se", "M_n", "deviation"], rows)
    summary = {
        "n_samples": int(p["n_samples"]),
        "rows": [
            {
                "n": e.n,
                "mu_hat": e.mu_hat,
                "se": e.std_error,
                "target": e.target,
                "deviation": e.deviation,
            }
            for e in ests
        ],
    }
    return ["en_measure.csv"], summary


def _run_pair_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    rows = []
    details = []
    for idx, (n, m) in enumerate(p["pairs"]):
        rng = seed_stream(cfg.master_seed, idx)
        est = estimate_E_pair(cfg.system, cfg.measure, cfg.space, cfg.seq, n, m, p["n_samples"], rng)
        rows.append((est.n, est.m, est.joint_hat, est.product_hat, est.slack))
        details.append(
            {
                "n": est.n,
                "m": est.m,
                "joint": est.joint_hat,
                "product": est.product_hat,
                "slack": est.slack,
                "joint_se": est.joint_se,
                "product_se": est.product_se,
                "target_product_nm": est.target_product_nm,
                "target_product_sum": est.target_product_sum,
            }
        )
    _write_csv(os.path.join(out, "pairs.csv"), ["n", "m", "joint", "product", "slack"], rows)
    return ["pairs.csv"], {"n_samples": int(p["n_samples"]), "rows": details}


def _run_decay_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    rng = seed_stream(cfg.master_seed, 0)
    est = estimate_correlation_decay(
        cfg.system, cfg.measure, cfg.space, p["observables"], p["gaps"], p["n_samples"], rng
    )
    rows = [
        (int(g), est.correlations[j], est.abs_correlations[j], bool(est.used_in_fit[j]))
        for j, g in enumerate(est.gaps)
    ]
    _write_csv(os.path.join(out, "decay.csv"), ["gap", "corr", "abs_corr", "used_in_fit"], rows)
    summary = {
        "observables": list(est.observable_names),
        "holder_thetas": list(est.holder_thetas),
        "holder_norms": list(est.holder_norms),
        "noise_floor": est.noise_floor,
        "tau_hat": est.tau_hat,
        "c_hat": est.c_hat,
        "fit_rejected": est.fit_rejected,
        "n_samples": est.n_samples,
        "note": est.note,
    }
    return ["decay.csv"], summary


def _run_local_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    rows = []
    ratios_per_r: list[list[float]] = [[] for _ in p["r_grid"]]
    censored_per_r = [0 for _ in p["r_grid"]]
    for i in range(p["n_seeds"]):
        rng = seed_stream(cfg.master_seed, i)
        x = sample_measure(cfg.measure, cfg.space, rng)
        ls = local_stats(cfg.system, cfg.measure, cfg.space, x, p["r_grid"], p["cap"], rng)
        for j, r in enumerate(p["r_grid"]):
            rows.append((i, r, ls.mu_balls[j], int(ls.taus[j]), bool(ls.censored[j])))
            if ls.censored[j]:
                censored_per_r[j] += 1
            elif not math.isnan(ls.exponent_ratios[j]):
                ratios_per_r[j].append(float(ls.exponent_ratios[j]))
    _write_csv(os.path.join(out, "local.csv"), ["seed", "r", "mu_ball", "tau", "censored"], rows)
    summary = {
        "cap": int(p["cap"]),
        "n_seeds": int(p["n_seeds"]),
        "per_radius": [
            {
                "r": float(r),
                "median_ratio": (float(np.median(ratios_per_r[j])) if ratios_per_r[j] else None),
                "censored_fraction": censored_per_r[j] / p["n_seeds"],
            }
            for j, r in enumerate(p["r_grid"])
        ],
    }
    return ["local.csv"], summary


def _run_bosh_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    p = cfg.params
    rows = []
    finals = []
    for i in range(p["n_seeds"]):
        rng = seed_stream(cfg.master_seed, i)
        x = sample_measure(cfg.measure, cfg.space, rng)
        st = boshernitzan_stat(cfg.system, cfg.space, x, p["alpha"], p["n_max"], rng)
        finals.append(st.final)
        for j, n in enumerate(st.checkpoints):
            rows.append((i, int(n), st.running_minima[j]))
    _write_csv(os.path.join(out, "bosh.csv"), ["seed", "n", "running_min"], rows)
    summary = {
        "alpha": float(p["alpha"]),
        "n_max": int(p["n_max"]),
        "n_seeds": int(p["n_seeds"]),
        "median_final": float(np.median(finals)),
        "max_final": float(np.max(finals)),
    }
    return ["bosh.csv"], summary


def _run_validate_experiment(cfg: ExperimentConfig, out: str, override: bool, workers: int):
    # targets.epsilon steers the decay-bound exponent probed by the validator
    eps = float(cfg.echo.get("targets.epsilon", "0.5"))
    validation = validate_target_sequence(cfg.seq, epsilon=eps)
    _write_json(os.path.join(out, "validation.json"), _validation_report(validation))
    return ["validation.json"], _validation_report(validation)


_RUNNERS = {
    "sbc": _run_sbc_experiment,
    "en": _run_en_experiment,
    "pair": _run_pair_experiment,
    "decay": _run_decay_experiment,
    "local": _run_local_experiment,
    "bosh": _run_bosh_experiment,
    "validate": _run_validate_experiment,
}


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | None = None,
    override_assumption1: bool = False,
) -> dict:
    """Execute the configured experiment and write its artifacts.

    Returns the manifest dict.  On failure every artifact written during this
    call is removed before the error propagates.
    """
    out = out_dir if out_dir is not None else cfg.out
    os.makedirs(out, exist_ok=True)
    env = os.environ.get("RECLAB_WORKERS")
    workers = int(env) if env else cfg.workers

    t0 = time.time()
    preexisting = set(os.listdir(out))
    try:
        artifact_names, summary_body = _RUNNERS[cfg.experiment](
            cfg, out, override_assumption1, workers
        )
        written = [os.path.join(out, name) for name in artifact_names]
        summary = {
            "experiment": cfg.experiment,
            "master_seed": cfg.master_seed,
            "config": dict(sorted(cfg.echo.items())),
            "results": summary_body,
        }
        summary_path = os.path.join(out, "summary.json")
        _write_json(summary_path, summary)
        written.append(summary_path)
    except Exception:
        # drop everything this call created, partial files from a failing
        # runner included, so a failed run leaves no half-written artifacts
        for name in set(os.listdir(out)) - preexisting:
            try:
                os.remove(os.path.join(out, name))
            except OSError:
                pass
        raise

    manifest = {
        "version": __version__,
        "experiment": cfg.experiment,
        "master_seed": cfg.master_seed,
        "workers": workers,
        "backend": backend_name(),
        "wall_clock_seconds": time.time() - t0,
        "config": dict(sorted(cfg.echo.items())),
        "artifacts": {os.path.basename(pth): _digest(pth) for pth in written},
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reclab", description="recurrence laboratory runner")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a config file and report every violation")
    v.add_argument("config")
    r = sub.add_parser("run", help="run the configured experiment")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, default=None, help="master seed override")
    r.add_argument(
        "--override-assumption1",
        action="store_true",
        help="run even when the target sequence fails admissibility validation",
    )
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = validate_config(args.config)
        if args.command == "validate":
            print(f"config ok: experiment={cfg.experiment}")
            for key in sorted(cfg.echo):
                print(f"  {key} = {cfg.echo[key]}")
            return 0
        if args.seed is not None:
            echo = dict(cfg.echo)
            echo["master_seed"] = str(int(args.seed))
            cfg = ExperimentConfig(
                echo=echo,
                experiment=cfg.experiment,
                master_seed=int(args.seed),
                out=cfg.out,
                workers=cfg.workers,
                space=cfg.space,
                system=cfg.system,
                measure=cfg.measure,
                seq=cfg.seq,
                params=cfg.params,
                source_path=cfg.source_path,
            )
        manifest = run_experiment(cfg, args.out, args.override_assumption1)
        out = args.out if args.out is not None else cfg.out
        print(f"wrote {len(manifest['artifacts'])} artifacts to {out}")
        return 0
    except ConfigError as e:
        for violation in e.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except NumericalFailureError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except _DEGENERATE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
