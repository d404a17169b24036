"""Command-line interface: ``stablenoise <command> [flags]``.

Configuration comes from built-in defaults, then an optional JSON file
(``--config``; a report JSON works too since it embeds its config), then
flags. The seed is mandatory. Exit codes: 1 configuration error, 2 integrand
rejected, 3 numerical failure, 4 failed check in a study or verify command.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any

import numpy as np

from .errors import IntegrandError, QuadratureError
from .fractional import (HomogeneousProfile, fractional_eval_params, regular_variation_check,
                         sample_fractional, self_similarity_index)
from .gridnoise import (FilterSpec, GridNoise, coupled_error_samples, dirac_noise_eval,
                        error_bound, filtered_noise_eval, geometric_filter, grid_noise_eval,
                        identity_filter, power_filter)
from .kernels import Kernel
from .levy import chentsov_levy, geodesic_distance, north_pole, sphere_levy
from .parser import parse_kernel
from .rng import CounterStream
from .shotnoise import binomial_noise_eval, check_shot_integrand, shot_noise_replicas
from .spaces import Box, Euclidean, Space, Sphere, space_from_dict
from .stable import (StableParams, TailSpec, integral_params, make_innovation_sampler,
                     sample_stable, stable_abs_moment, tail_to_params)
from .verify import DEFAULT_THETAS, StudyThresholds, convergence_study, operator_identity_suite

EXIT_CONFIG, EXIT_INTEGRAND, EXIT_NUMERIC, EXIT_CHECK = 1, 2, 3, 4
THREADS_ENV = "STABLENOISE_THREADS"

COMMANDS = (
    "sample-stable", "grid-noise", "dirac-noise", "shot-noise", "binomial-noise", "filter-noise",
    "fractional-params", "regvar-check", "levy-sphere", "levy-chentsov", "grid-study",
    "shot-study", "filter-study", "error-bound", "verify-operators",
)
STUDIES = ("grid-study", "shot-study", "filter-study", "verify-operators")

DEFAULTS: dict[str, Any] = {
    "alpha": None, "sigma": 1.0, "nu": 0.0, "tail_p": None, "tail_q": None,
    "mode": "exact-stable", "kernel": None, "approx_kernel": None, "dim": 1, "h": None,
    "lambda": None, "n_points": None, "filter": None, "beta": None, "space": None,
    "points": None, "q": 2, "n": 1000, "seed": None, "refine": 16, "p": 1.0, "coupled": 0,
    "cases": 100, "level": 0.01, "final_char_distance": None, "thetas": list(DEFAULT_THETAS),
    "lump": True, "ts": [10.0, 100.0, 1000.0, 10000.0],
}


class ConfigError(ValueError):
    pass


# -- configuration -----------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    a = common.add_argument
    a("--config", help="JSON config file (flags override it)")
    a("--seed", type=int, help="master seed (mandatory)")
    a("--alpha", type=float)
    a("--sigma", type=float)
    a("--nu", type=float)
    a("--tail-p", dest="tail_p", type=float, help="right tail constant (pareto innovations)")
    a("--tail-q", dest="tail_q", type=float, help="left tail constant (pareto innovations)")
    a("--mode", choices=("exact-stable", "pareto-tail", "gaussian"))
    a("--kernel", help="integrand expression, e.g. 'exp(-x*x)'")
    a("--approx-kernel", dest="approx_kernel", help="approximating integrand f_M")
    a("--dim", type=int)
    a("--h", type=_floats, help="span or comma separated schedule")
    a("--lambda", dest="lambda", type=_floats, help="intensity or schedule")
    a("--n-points", dest="n_points", type=_floats, help="binomial point count or schedule")
    a("--filter", help="identity | geometric[:rate] | power:beta[:radius] | JSON")
    a("--beta", type=float)
    a("--space", help="box:lo,hi | sphere:q | JSON")
    a("--points", help="CSV file of evaluation points")
    a("--q", type=int, help="sphere dimension / Chentsov ambient dimension")
    a("--n", type=int, help="number of replicas")
    a("--refine", type=int)
    a("--p", type=float, help="moment order for error-bound")
    a("--coupled", type=int, help="replicas for the coupled error estimate")
    a("--cases", type=int)
    a("--level", type=float)
    a("--final-char-distance", dest="final_char_distance", type=float)
    a("--no-lump", dest="lump", action="store_false")
    a("--out", help="CSV output path (default stdout)")
    a("--report", help="JSON report path")
    a("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    top = argparse.ArgumentParser(prog="stablenoise",
                                  description="Simulation of stable random noises")
    sub = top.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("run",):
        sub.add_parser(name, parents=[common])
    return top


def resolve_config(argv=None) -> dict:
    ns = vars(_parser().parse_args(argv))
    cfg = dict(DEFAULTS)
    path = ns.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        loaded = loaded.get("config", loaded)
        cfg.update({k: v for k, v in loaded.items() if k not in ("out", "report")})
    cmd = ns.pop("command")
    cfg.update(ns)
    if cmd != "run":
        cfg["command"] = cmd
    if cfg.get("command") not in COMMANDS:
        raise ConfigError("no command given (a 'run' config must name one)")
    if cfg.get("seed") is None:
        raise ConfigError("--seed is mandatory")
    if int(cfg["seed"]) < 0:
        raise ConfigError("seed must be non-negative")
    for key in ("h", "lambda", "n_points"):
        v = cfg.get(key)
        if v is not None and not isinstance(v, list):
            cfg[key] = [float(v)]
    return cfg


def _one(cfg, key):
    v = cfg.get(key)
    if not v:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    if len(v) != 1:
        raise ConfigError(f"--{key.replace('_', '-')} takes a single value here")
    return v[0]


def _schedule(cfg, key):
    v = cfg.get(key)
    if not v or len(v) < 2:
        raise ConfigError(f"--{key.replace('_', '-')} needs a schedule of at least two values")
    diffs = np.diff(v)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigError("schedules must be strictly monotone")
    return list(v)


def _threads(cfg) -> int:
    t = cfg.get("threads") or int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(t))


def _params(cfg) -> StableParams:
    if cfg.get("tail_p") is not None or cfg.get("tail_q") is not None:
        return tail_to_params(_tails(cfg))
    if cfg.get("alpha") is None:
        raise ConfigError("--alpha is required")
    return StableParams(cfg["alpha"], cfg["sigma"], cfg["nu"])


def _tails(cfg) -> TailSpec:
    if cfg.get("alpha") is None:
        raise ConfigError("--alpha is required")
    return TailSpec(cfg["alpha"], cfg.get("tail_p") or 0.0, cfg.get("tail_q") or 0.0)


def _innovations(cfg, stream="innovations"):
    mode = cfg["mode"]
    if cfg.get("tail_p") is not None or cfg.get("tail_q") is not None:
        mode = "pareto-tail"
        return make_innovation_sampler(mode, _tails(cfg), cfg["seed"], stream)
    return make_innovation_sampler(mode, _params(cfg), cfg["seed"], stream)


def _kernel(cfg, key="kernel", dim=None) -> Kernel:
    expr = cfg.get(key)
    if not expr:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return parse_kernel(expr, dim or cfg["dim"])


def _filter(cfg) -> FilterSpec:
    spec = cfg.get("filter")
    if spec is None:
        raise ConfigError("--filter is required")
    if isinstance(spec, str) and spec.strip().startswith("{"):
        spec = json.loads(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind", "inline")
        if kind == "inline":
            beta = spec.get("beta")
            profile = HomogeneousProfile(beta, cfg["dim"]) if beta is not None else None
            return FilterSpec(np.asarray(spec["coefficients"], dtype=float), spec["lo"],
                              "regularly-varying" if beta is not None else "summable",
                              beta=beta, profile=profile, name="inline")
        spec = ":".join([kind] + [str(v) for v in spec.get("args", [])])
    name, *args = spec.split(":")
    dim = cfg["dim"]
    if name == "identity":
        return identity_filter(dim)
    if name == "geometric":
        return geometric_filter(float(args[0]) if args else 0.5, dim=dim)
    if name == "power":
        beta = float(args[0]) if args else cfg.get("beta")
        if beta is None:
            raise ConfigError("power filter needs beta")
        radius = int(args[1]) if len(args) > 1 else 64
        return power_filter(beta, radius, dim)
    raise ConfigError(f"unknown filter {spec!r}")


def _space(cfg) -> Space:
    spec = cfg.get("space")
    if spec is None:
        return Box([0.0] * cfg["dim"], [1.0] * cfg["dim"])
    if isinstance(spec, str) and spec.strip().startswith("{"):
        spec = json.loads(spec)
    if isinstance(spec, dict):
        return space_from_dict(spec)
    kind, _, rest = spec.partition(":")
    if kind == "box":
        v = _floats(rest)
        half = len(v) // 2
        return Box(v[:half], v[half:])
    if kind == "sphere":
        return Sphere(int(rest or 2))
    raise ConfigError(f"unknown space {spec!r}")


def _read_points(cfg) -> np.ndarray:
    path = cfg.get("points")
    if not path:
        raise ConfigError("--points is required")
    try:
        with open(path) as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ConfigError(f"cannot read points file: {exc}") from exc
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.array([[float(v) for v in r] for r in rows])


# -- output ------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def _write_csv(cfg, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, (int, np.integer)) else _fmt(x) for x in r])
    text = buf.getvalue()
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _replica_csv(cfg, values):
    _write_csv(cfg, ["replica", "value"], ((i, float(v)) for i, v in enumerate(values)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _emit_report(cfg, report, always=False):
    cfg_out = {k: v for k, v in cfg.items() if k not in ("out", "report", "threads")}
    body = _jsonable({"command": cfg["command"], "config": cfg_out, **report})
    text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    if cfg.get("report"):
        with open(cfg["report"], "w") as fh:
            fh.write(text)
    elif always:
        sys.stdout.write(text)


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"n": int(v.size), "mean": float(v.mean()), "quantiles": q.tolist()}


# -- commands ----------------------------------------------------------------------

def _limit(f, cfg, space=None):
    p = _params(cfg)
    s, nu = integral_params(f, space or Euclidean(f.dim), p.nu, p.alpha)
    return StableParams(p.alpha, s, nu)


def cmd_sample_stable(cfg):
    vals = sample_stable(_params(cfg), cfg["n"], CounterStream(cfg["seed"], "sample-stable"))
    _replica_csv(cfg, vals)
    _emit_report(cfg, {"summary": _summary(vals)})


def _grid(cfg, h):
    return GridNoise(h, _innovations(cfg), cfg["dim"], threads=_threads(cfg))


def cmd_grid_noise(cfg, dirac=False):
    f = _kernel(cfg)
    noise = _grid(cfg, _one(cfg, "h"))
    vals = dirac_noise_eval(noise, f, cfg["n"]) if dirac else grid_noise_eval(noise, f, cfg["n"])
    _replica_csv(cfg, vals)
    _emit_report(cfg, {"summary": _summary(vals), "limit": _limit(f, cfg).to_dict()})


def cmd_shot_noise(cfg, binomial=False):
    space = _space(cfg)
    f = _kernel(cfg, dim=space.dim)
    G = _innovations(cfg, "marks")
    lam = None if binomial else _one(cfg, "lambda")
    if not check_shot_integrand(space, f, lam, G):
        raise IntegrandError("int |f|^alpha dm diverges on the space")
    if binomial:
        vals = binomial_noise_eval(space, int(_one(cfg, "n_points")), G, f, cfg["seed"],
                                   cfg["n"], _threads(cfg))
    else:
        vals = shot_noise_replicas(space, lam, G, [f], cfg["seed"], cfg["n"], _threads(cfg))[:, 0]
    _replica_csv(cfg, vals)
    _emit_report(cfg, {"summary": _summary(vals), "limit": _limit(f, cfg, space).to_dict()})


def _filter_limit(f, filt, cfg) -> StableParams:
    p = _params(cfg)
    if filt.regime == "summable":
        s, nu = integral_params(f, Euclidean(f.dim), p.nu, p.alpha)
        return StableParams(p.alpha, s, nu).scaled(filt.C)
    s, nu = fractional_eval_params(f, filt.profile, StableParams(p.alpha, 1.0, p.nu))
    return StableParams(p.alpha, s, nu)


def cmd_filter_noise(cfg):
    f = _kernel(cfg)
    filt = _filter(cfg)
    vals = filtered_noise_eval(_grid(cfg, _one(cfg, "h")), filt, f, cfg["n"], cfg["lump"])
    _replica_csv(cfg, vals)
    _emit_report(cfg, {"summary": _summary(vals), "filter": filt.describe(),
                       "limit": _filter_limit(f, filt, cfg).to_dict()})


def cmd_fractional_params(cfg):
    f = _kernel(cfg)
    if cfg.get("beta") is None:
        raise ConfigError("--beta is required")
    p = _params(cfg)
    prof = HomogeneousProfile(cfg["beta"], cfg["dim"])
    s, nu = fractional_eval_params(f, prof, StableParams(p.alpha, 1.0, p.nu))
    _emit_report(cfg, {"sigma": s, "nu": nu,
                       "self_similarity_index": self_similarity_index(p.alpha, cfg["beta"],
                                                                      cfg["dim"])}, True)


def cmd_regvar_check(cfg):
    filt = _filter(cfg)
    beta = cfg.get("beta") or filt.beta
    if beta is None:
        raise ConfigError("--beta is required")
    res = regular_variation_check(filt, HomogeneousProfile(beta, cfg["dim"]), cfg["ts"])
    _emit_report(cfg, res, True)


def _scale_estimate(x) -> float:
    q75, q25 = np.quantile(x, [0.75, 0.25])
    return float(q75 - q25)


def cmd_levy_sphere(cfg):
    pts = _read_points(cfg)
    G = _innovations(cfg, "marks")
    B = sphere_levy(pts, _one(cfg, "lambda"), G, cfg["seed"], cfg["n"], threads=_threads(cfg))
    _write_csv(cfg, ["replica", "point", "value"],
               ((r, j, float(B[r, j])) for r in range(B.shape[0]) for j in range(B.shape[1])))
    O = north_pole(pts.shape[1] - 1)
    table = [{"point": j, "distance": geodesic_distance(O, m), "variance": float(np.var(B[:, j])),
              "iqr": _scale_estimate(B[:, j])} for j, m in enumerate(pts)]
    pairs = [{"points": [i, j], "distance": geodesic_distance(pts[i], pts[j]),
              "variance": float(np.var(B[:, i] - B[:, j]))}
             for i in range(len(pts)) for j in range(i + 1, len(pts))]
    _emit_report(cfg, {"table": table, "pairs": pairs})


def cmd_levy_chentsov(cfg):
    pts = _read_points(cfg)
    G = _innovations(cfg, "marks")
    B = chentsov_levy(pts, _one(cfg, "lambda"), G, cfg["seed"], cfg["n"], threads=_threads(cfg))
    _write_csv(cfg, ["replica", "point", "value"],
               ((r, j, float(B[r, j])) for r in range(B.shape[0]) for j in range(B.shape[1])))
    norms = np.linalg.norm(pts, axis=1)
    var = np.var(B, axis=0)
    nz = norms > 0
    const = float(np.sum(var[nz] * norms[nz]) / np.sum(norms[nz] ** 2)) if nz.any() else 0.0
    table = [{"point": j, "norm": float(norms[j]), "variance": float(var[j]),
              "iqr": _scale_estimate(B[:, j])} for j in range(len(pts))]
    _emit_report(cfg, {"table": table, "fitted_constant": const})


def _thresholds(cfg, decrease) -> StudyThresholds:
    return StudyThresholds(cfg["level"], cfg.get("final_char_distance"), decrease)


def cmd_grid_study(cfg):
    f = _kernel(cfg)
    target = _limit(f, cfg)
    gen = lambda h: grid_noise_eval(_grid(cfg, h), f, cfg["n"])
    rep = convergence_study(gen, target, _schedule(cfg, "h"), cfg["n"], cfg["seed"],
                            cfg["thetas"], _thresholds(cfg, "ks"))
    _emit_report(cfg, {**rep, "target": target.to_dict()}, True)
    return rep["pass"]


def cmd_shot_study(cfg):
    space = _space(cfg)
    f = _kernel(cfg, dim=space.dim)
    G = _innovations(cfg, "marks")
    if not check_shot_integrand(space, f, None, G):
        raise IntegrandError("int |f|^alpha dm diverges on the space")
    target = _limit(f, cfg, space)
    if cfg.get("n_points"):
        sched = [int(v) for v in _schedule(cfg, "n_points")]
        gen = lambda k: binomial_noise_eval(space, k, G, f, cfg["seed"], cfg["n"], _threads(cfg))
    else:
        sched = _schedule(cfg, "lambda")
        gen = lambda lam: shot_noise_replicas(space, lam, G, [f], cfg["seed"], cfg["n"],
                                              _threads(cfg))[:, 0]
    rep = convergence_study(gen, target, sched, cfg["n"], cfg["seed"], cfg["thetas"],
                            _thresholds(cfg, "char_distance"))
    _emit_report(cfg, {**rep, "target": target.to_dict()}, True)
    return rep["pass"]


def cmd_filter_study(cfg):
    f = _kernel(cfg)
    filt = _filter(cfg)
    target = _filter_limit(f, filt, cfg)
    oracle = None
    if filt.regime != "summable":
        p = _params(cfg)
        oracle = sample_fractional(f, filt.profile, StableParams(p.alpha, 1.0, p.nu),
                                   cfg["n"], cfg["seed"])
    gen = lambda h: filtered_noise_eval(_grid(cfg, h), filt, f, cfg["n"], cfg["lump"])
    rep = convergence_study(gen, target, _schedule(cfg, "h"), cfg["n"], cfg["seed"],
                            cfg["thetas"], _thresholds(cfg, "ks"), oracle=oracle)
    _emit_report(cfg, {**rep, "target": target.to_dict(), "filter": filt.describe()}, True)
    return rep["pass"]


def cmd_error_bound(cfg):
    f = _kernel(cfg)
    fM = _kernel(cfg, "approx_kernel") if cfg.get("approx_kernel") else f
    p = _params(cfg)
    h = _one(cfg, "h")
    bound = error_bound(f, fM, h, cfg["p"], p)
    out = {"bound": bound, "moment_constant": stable_abs_moment(p.alpha, cfg["p"], p.nu)}
    if cfg.get("coupled"):
        d = coupled_error_samples(f, fM, h, p, cfg["coupled"], cfg["seed"], cfg["refine"],
                                  _threads(cfg))
        emp = float(np.mean(np.abs(d) ** cfg["p"]))
        out.update({"empirical": emp, "relative_difference": (emp - bound) / bound
                    if bound else math.nan})
    _emit_report(cfg, out, True)


def cmd_verify_operators(cfg):
    rep = operator_identity_suite(cfg["cases"], cfg["seed"])
    _emit_report(cfg, rep, True)
    return rep["pass"]


HANDLERS = {
    "sample-stable": cmd_sample_stable,
    "grid-noise": cmd_grid_noise,
    "dirac-noise": lambda c: cmd_grid_noise(c, dirac=True),
    "shot-noise": cmd_shot_noise,
    "binomial-noise": lambda c: cmd_shot_noise(c, binomial=True),
    "filter-noise": cmd_filter_noise,
    "fractional-params": cmd_fractional_params,
    "regvar-check": cmd_regvar_check,
    "levy-sphere": cmd_levy_sphere,
    "levy-chentsov": cmd_levy_chentsov,
    "grid-study": cmd_grid_study,
    "shot-study": cmd_shot_study,
    "filter-study": cmd_filter_study,
    "error-bound": cmd_error_bound,
    "verify-operators": cmd_verify_operators,
}


def run(cfg: dict) -> int:
    """Execute a resolved config; returns the exit status."""
    try:
        result = HANDLERS[cfg["command"]](cfg)
    except IntegrandError as exc:
        print(f"error: integrand rejected: {exc}", file=sys.stderr)
        return EXIT_INTEGRAND
    except (QuadratureError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg["command"] in STUDIES and result is False:
        return EXIT_CHECK
    return 0


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:        # argparse usage errors
        return EXIT_CONFIG if exc.code else 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
