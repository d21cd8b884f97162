"""Batch front door: configure, execute and serialise experiments.

Subcommands run | sweep | threshold-map | lemma-check | oracle-compare
share one flat key=value configuration (file and/or flags, flags win).
Artifacts are a CSV series/table and a JSON summary at the configured
output prefix; given the same configuration the bytes are identical
across executions except for the wall-time provenance field.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .analysis import (
    DegenerateWindowError,
    check_lemma_esP,
    fit_decay_exponent,
    fit_lifespan_scaling,
    measure_lifespan,
    predicted_regime,
    weighted_damping_integral,
    check_lemma_decA,
)
from .characteristics import simple_wave_oracle_lifespan
from .core import Parameters
from .solver import (
    BLOWUP,
    CFL_FAILURE,
    VACUUM,
    Grid,
    InitialData,
    RunOutcome,
    SnapshotPolicy,
    init,
    run,
)

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "render_config",
           "config_echo", "execute", "main", "console_main"]

KINDS = ("run", "decay_fit", "lifespan_sweep", "threshold_map",
         "lemma_check", "oracle_compare")


class ConfigError(ValueError):
    """Unparseable or semantically invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    params: Parameters
    grid: Grid
    data: InitialData
    horizon: float = 1000.0
    cfl: float = 0.5
    series_interval: float = 1.0
    kind: str = "run"
    fit_lo: float = 10.0
    fit_hi: float = 1000.0
    eps_list: tuple[float, ...] = (0.1, 0.05, 0.02, 0.01)
    law: str = "power"
    mu_values: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 2.0)
    lambda_values: tuple[float, ...] = (0.5, 1.0, 2.0, 2.5, 3.0)
    t_max: float = 1.0e7
    n_quad: int = 64
    seed_stride: int = 8
    blowup_factor: float = 10.0
    settle_factor: float = 0.0
    workers: int = 1
    output: str = "experiment"


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [s for s in text.replace(" ", "").split(",") if s]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


# key -> (target section, attribute, converter)
_KEYS = {
    "gamma": ("params", "gamma", float),
    "lambda": ("params", "lam", float),
    "mu": ("params", "mu", float),
    "epsilon": ("params", "epsilon", float),
    "u_floor": ("params", "u_floor", float),
    "x_min": ("grid", "x_min", float),
    "x_max": ("grid", "x_max", float),
    "n_cells": ("grid", "n_cells", int),
    "boundary": ("grid", "boundary", str),
    "family": ("data", "family", str),
    "wavenumber": ("data", "wavenumber", float),
    "width": ("data", "width", float),
    "center": ("data", "center", float),
    "phase": ("data", "phase", float),
    "v_phase": ("data", "v_phase", float),
    "u_scale": ("data", "u_scale", float),
    "v_scale": ("data", "v_scale", float),
    "horizon": ("top", "horizon", float),
    "cfl": ("top", "cfl", float),
    "series_interval": ("top", "series_interval", float),
    "kind": ("top", "kind", str),
    "fit_lo": ("top", "fit_lo", float),
    "fit_hi": ("top", "fit_hi", float),
    "eps_list": ("top", "eps_list", _parse_float_list),
    "law": ("top", "law", str),
    "mu_values": ("top", "mu_values", _parse_float_list),
    "lambda_values": ("top", "lambda_values", _parse_float_list),
    "t_max": ("top", "t_max", float),
    "n_quad": ("top", "n_quad", int),
    "seed_stride": ("top", "seed_stride", int),
    "blowup_factor": ("top", "blowup_factor", float),
    "settle_factor": ("top", "settle_factor", float),
    "workers": ("top", "workers", int),
    "output": ("top", "output", str),
}

_DEF_PARAMS = {"gamma": 1.4, "lam": 1.0, "mu": 0.5, "epsilon": 0.01,
               "u_floor": 0.1}
_DEF_GRID = {"x_min": 0.0, "x_max": 2.0 * math.pi, "n_cells": 1024,
             "boundary": "periodic"}
_DEF_DATA = {"family": "sine", "wavenumber": 1.0, "width": 1.0, "center": 0.0,
             "phase": 0.0, "v_phase": 0.0, "u_scale": 1.0, "v_scale": 0.0}


def parse_config(text: str | None = None,
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Build a validated ExperimentConfig from key=value text plus overrides.

    Lines are 'key=value'; blank lines and '#' comments are ignored.
    Overrides (from command-line flags) take precedence over the file,
    which takes precedence over the defaults.  Unknown keys, unparseable
    values and violated invariants all raise ConfigError with the
    offending key or invariant named.
    """
    raw: dict[str, str] = {}
    if text:
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in _KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            raw[key] = value
    for key, value in (overrides or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = value

    sections = {"params": dict(_DEF_PARAMS), "grid": dict(_DEF_GRID),
                "data": dict(_DEF_DATA), "top": {}}
    for key, value in raw.items():
        section, attr, conv = _KEYS[key]
        try:
            converted = conv(value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"invalid value for {key!r}: {exc}") from exc
        sections[section][attr] = converted

    try:
        params = Parameters(**sections["params"])
        grid = Grid(**sections["grid"])
        data = InitialData(**sections["data"])
        cfg = ExperimentConfig(params=params, grid=grid, data=data,
                               **sections["top"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if cfg.kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}")
    if cfg.law not in ("power", "exponential"):
        raise ConfigError("law must be 'power' or 'exponential'")
    if not 0.0 < cfg.cfl <= 0.9:
        raise ConfigError("cfl must lie in (0, 0.9]")
    if not cfg.horizon > 0:
        raise ConfigError("horizon must be positive")
    if cfg.kind == "lifespan_sweep" and not cfg.eps_list:
        raise ConfigError("eps_list must be nonempty for sweeps")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.kind == "oracle_compare" and cfg.params.lam != 0.0:
        raise ConfigError("oracle_compare requires lambda = 0")
    return cfg


def config_echo(cfg: ExperimentConfig) -> dict:
    """Flat external-name view of a config; re-parses to an equal config."""
    echo: dict[str, object] = {}
    for key, (section, attr, _) in _KEYS.items():
        if section == "params":
            value = getattr(cfg.params, attr)
        elif section == "grid":
            value = getattr(cfg.grid, attr)
        elif section == "data":
            value = getattr(cfg.data, attr)
        else:
            value = getattr(cfg, attr)
        echo[key] = list(value) if isinstance(value, tuple) else value
    return echo


def render_config(cfg: ExperimentConfig) -> str:
    """key=value text that parses back to an equal config."""
    lines = []
    for key, value in config_echo(cfg).items():
        if isinstance(value, list):
            lines.append(f"{key}={','.join(repr(v) for v in value)}")
        else:
            lines.append(f"{key}={value!r}" if isinstance(value, float)
                         else f"{key}={value}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# execution
# ----------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_summary(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _status_dict(outcome: RunOutcome) -> dict:
    return {"kind": outcome.status.kind, "t": outcome.status.t}


def _series_rows(outcome: RunOutcome):
    cols = (outcome.times, outcome.sup_r, outcome.sup_s, outcome.sup_rx,
            outcome.sup_sx, outcome.sup_rt, outcome.sup_st)
    return [[_fmt(col[i]) for col in cols] for i in range(outcome.times.size)]


def _exit_code(kinds) -> int:
    kinds = set(kinds)
    if VACUUM in kinds:
        return 3
    if CFL_FAILURE in kinds:
        return 4
    return 0


def _fit_or_note(times, values, window):
    try:
        return fit_decay_exponent(times, values, window).to_dict()
    except DegenerateWindowError as exc:
        return {"error": str(exc)}


def _run_once(cfg: ExperimentConfig, params: Parameters,
              store_history: bool = False) -> RunOutcome:
    stride = max(1, int(math.floor(1.0 / cfg.cfl))) if store_history else 2
    recorder = SnapshotPolicy(series_interval=cfg.series_interval,
                              store_history=store_history,
                              history_stride=stride)
    return run(cfg.data, cfg.grid, params, cfg.horizon, recorder=recorder,
               cfl=cfg.cfl, blowup_factor=cfg.blowup_factor,
               settle_factor=cfg.settle_factor if cfg.settle_factor > 0 else None)


def sweep_point(args) -> dict:
    """One amplitude of a lifespan sweep (module level so pools can pickle it)."""
    cfg, eps = args
    params = replace(cfg.params, epsilon=eps)
    outcome = _run_once(cfg, params)
    return {
        "epsilon": eps,
        "status": outcome.status.kind,
        "t": outcome.status.t,
        "t_star": measure_lifespan(outcome),
        "t_star_low": outcome.t_star_low,
    }


def threshold_point(args) -> dict:
    """One (mu, lambda) classification of a threshold map."""
    cfg, mu, lam = args
    params = replace(cfg.params, mu=mu, lam=lam)
    outcome = _run_once(cfg, params)
    return {
        "mu": mu,
        "lambda": lam,
        "status": outcome.status.kind,
        "t": outcome.status.t,
        "predicted": predicted_regime(mu, lam),
    }


def _map_points(worker, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, items, chunksize=1))


def execute(cfg: ExperimentConfig) -> int:
    """Run the configured experiment and write its artifacts.

    Returns the process exit code: 0 on success (blow-up is a
    measurement, not a failure), 3 on vacuum, 4 on CFL underflow.
    """
    started = time.perf_counter()
    csv_path = f"{cfg.output}.csv"
    json_path = f"{cfg.output}.json"
    summary: dict = {"schema": 1, "kind": cfg.kind, "config": config_echo(cfg)}
    code = 0

    if cfg.kind in ("run", "decay_fit"):
        outcome = _run_once(cfg, cfg.params)
        _write_csv(csv_path,
                   ["t", "sup_r", "sup_s", "sup_rx", "sup_sx", "sup_rt", "sup_st"],
                   _series_rows(outcome))
        summary["status"] = _status_dict(outcome)
        summary["t_star"] = measure_lifespan(outcome)
        summary["t_star_low"] = outcome.t_star_low
        summary["sup_bound_ok"] = check_lemma_esP(outcome)
        summary["series_csv"] = csv_path
        if cfg.kind == "decay_fit":
            window = (cfg.fit_lo, cfg.fit_hi)
            grad = np.maximum(outcome.sup_rx, outcome.sup_sx)
            dgrad = np.maximum(outcome.sup_rt, outcome.sup_st)
            summary["fit"] = _fit_or_note(outcome.times, grad, window)
            summary["fit_rt"] = _fit_or_note(outcome.times, dgrad, window)
        code = _exit_code([outcome.status.kind])

    elif cfg.kind == "lifespan_sweep":
        points = _map_points(sweep_point,
                             [(cfg, eps) for eps in cfg.eps_list], cfg.workers)
        _write_csv(csv_path, ["epsilon", "status", "t_star", "t_star_low"],
                   [[_fmt(pt["epsilon"]), pt["status"], _fmt(pt["t_star"]),
                     _fmt(pt["t_star_low"])] for pt in points])
        summary["points"] = points
        pairs = [(pt["epsilon"], pt["t_star"]) for pt in points]
        pairs_low = [(pt["epsilon"], pt["t_star_low"]) for pt in points]
        try:
            summary["fit"] = fit_lifespan_scaling(pairs, cfg.law).to_dict()
        except DegenerateWindowError as exc:
            summary["fit"] = {"error": str(exc)}
        try:
            summary["fit_low"] = fit_lifespan_scaling(pairs_low, cfg.law).to_dict()
        except DegenerateWindowError as exc:
            summary["fit_low"] = {"error": str(exc)}
        code = _exit_code(pt["status"] for pt in points)

    elif cfg.kind == "threshold_map":
        items = [(cfg, float(mu), float(lam))
                 for mu in cfg.mu_values for lam in cfg.lambda_values]
        points = _map_points(threshold_point, items, cfg.workers)
        _write_csv(csv_path, ["mu", "lambda", "status", "t", "predicted"],
                   [[_fmt(pt["mu"]), _fmt(pt["lambda"]), pt["status"],
                     _fmt(pt["t"]), pt["predicted"]] for pt in points])
        summary["points"] = points
        matched = [pt for pt in points if pt["predicted"] != "boundary"]
        summary["n_checked"] = len(matched)
        summary["n_matching"] = sum(pt["status"] == pt["predicted"]
                                    for pt in matched)
        code = _exit_code(pt["status"] for pt in points)

    elif cfg.kind == "lemma_check":
        try:
            sup1, arg1 = check_lemma_decA(cfg.params, cfg.t_max, cfg.n_quad)
            sup2, _ = check_lemma_decA(cfg.params, 2.0 * cfg.t_max, cfg.n_quad)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        drift = abs(sup2 - sup1) / max(abs(sup1), 1e-300)
        summary.update({
            "sup_value": sup1, "argmax_t": arg1, "sup_value_2x": sup2,
            "drift": drift, "stable": bool(drift <= 0.01),
            "t_max": cfg.t_max,
        })
        summary["sample"] = [
            {"t": t, "value": weighted_damping_integral(t, cfg.params)}
            for t in (1.0, 10.0, 100.0, 1000.0) if t <= cfg.t_max]

    elif cfg.kind == "oracle_compare":
        outcome = _run_once(cfg, cfg.params, store_history=False)
        field0 = init(cfg.data, cfg.grid, cfg.params)
        oracle = simple_wave_oracle_lifespan(field0, cfg.params,
                                             stride=cfg.seed_stride)
        t_star = measure_lifespan(outcome)
        gap = (abs(t_star - oracle) / oracle
               if (t_star is not None and oracle) else None)
        summary.update({
            "status": _status_dict(outcome),
            "t_star_grid": t_star,
            "t_star_oracle": oracle,
            "rel_gap": gap,
            "n_seeds": (cfg.grid.n_cells + cfg.seed_stride - 1) // cfg.seed_stride,
        })
        code = _exit_code([outcome.status.kind])

    summary["provenance"] = {
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    _write_summary(json_path, summary)
    print(f"kind={cfg.kind} exit={code} wrote {json_path}")
    return code


# ----------------------------------------------------------------------
# command line
# ----------------------------------------------------------------------

_COMMAND_KIND = {
    "run": "run",
    "sweep": "lifespan_sweep",
    "threshold-map": "threshold_map",
    "lemma-check": "lemma_check",
    "oracle-compare": "oracle_compare",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulerdamp",
        description="Experiments for the 1D p-system with decaying damping")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _COMMAND_KIND:
        cp = sub.add_parser(command)
        cp.add_argument("--config", help="key=value configuration file")
        if command == "run":
            cp.add_argument("--kind", choices=("run", "decay_fit"))
        for key in _KEYS:
            if key == "kind":
                continue
            cp.add_argument(f"--{key}", dest=key)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {key: value for key, value in vars(args).items()
                 if key in _KEYS and value is not None}
    overrides["kind"] = getattr(args, "kind", None) or _COMMAND_KIND[args.command]
    text = None
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = parse_config(text, overrides)
        return execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())
