"""Statistical checks that turn weak-convergence statements into finite tests."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .grid import CellArray, GridSpec, cell_integrals, phi_h, psi_h, tilde_psi_h
from .kernels import Kernel, gaussian_bump
from .rng import CounterStream
from .stable import StableParams, sample_stable, stable_char_fn

__all__ = [
    "ReplicaSet", "DEFAULT_THETAS", "empirical_char_fn", "char_distance", "ks_two_sample",
    "hill_estimator", "convergence_study", "StudyThresholds", "operator_identity_suite",
]

DEFAULT_THETAS = (0.25, 0.5, 1.0, 2.0, 4.0)
MIN_KS_SIZE = 100


@dataclass(frozen=True)
class ReplicaSet:
    """Replica values of one random quantity plus provenance metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if v.size < 1:
            raise ValueError("a replica set needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("replica values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


def _vals(r) -> np.ndarray:
    return r.values if isinstance(r, ReplicaSet) else ReplicaSet(r).values


def empirical_char_fn(r, thetas) -> np.ndarray:
    """``(1/n) sum_j exp(i theta X_j)`` for every ``theta``."""
    x = _vals(r)
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    out = np.empty(th.shape, dtype=complex)
    for i, t in enumerate(th.reshape(-1)):
        tx = t * x
        out.reshape(-1)[i] = complex(np.mean(np.cos(tx)), np.mean(np.sin(tx)))
    return out


def char_distance(r, params: StableParams, thetas=DEFAULT_THETAS) -> float:
    """``max_theta |empirical - exact|`` over the grid."""
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if th.size == 0:
        raise ValueError("empty theta grid")
    return float(np.max(np.abs(empirical_char_fn(r, th) - stable_char_fn(th, params))))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    x, y = _vals(a), _vals(b)
    if x.size < MIN_KS_SIZE or y.size < MIN_KS_SIZE:
        raise ValueError(f"KS needs at least {MIN_KS_SIZE} values per sample")
    res = stats.ks_2samp(x, y, method="asymp")
    return float(res.statistic), float(res.pvalue)


def hill_estimator(r, k: int) -> float:
    """Hill estimate of the tail index from the top ``k`` order statistics of ``|X|``."""
    x = np.abs(_vals(r))
    n = x.size
    if not 1 <= k < n / 2:
        raise ValueError("need 1 <= k < n / 2")
    top = np.sort(x)[n - k - 1:]
    if top[0] <= 0:
        raise ValueError("non-positive order statistic in the tail sample")
    gamma = float(np.mean(np.log(top[1:])) - np.log(top[0]))
    return 1.0 / gamma


@dataclass(frozen=True)
class StudyThresholds:
    level: float = 0.01
    final_char_distance: float | None = None
    require_decrease: str = "ks"      # "ks", "char_distance" or "none"


def _decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs[:-1], xs[1:]))


def convergence_study(generator: Callable[[object], np.ndarray], params: StableParams,
                      schedule: Sequence, n: int, seed: int, thetas=DEFAULT_THETAS,
                      thresholds: StudyThresholds = StudyThresholds(),
                      oracle: np.ndarray | None = None) -> dict:
    """Compare ``generator(step)`` (``n`` replicas) with exact draws at each schedule step.

    The oracle sample (``n`` exact ``S_alpha`` draws on its own stream) is the
    same for every step. The report follows the schema
    ``{schedule, ks, pvalues, char_distance, pass}`` plus the trend flags.
    """
    schedule = list(schedule)
    if len(schedule) < 2:
        raise ValueError("a convergence study needs at least two schedule points")
    if params.sigma == 0.0:
        zero = [0.0] * len(schedule)
        return {"schedule": schedule, "ks": zero, "pvalues": [None] * len(schedule),
                "char_distance": zero, "ks_decreasing": None, "char_decreasing": None,
                "final_rejected": None, "pass": True, "degenerate": True}
    if oracle is None:
        oracle = sample_stable(params, n, CounterStream(seed, "study-oracle"))
    ks, pv, cd = [], [], []
    for step in schedule:
        vals = np.asarray(generator(step), dtype=float).reshape(-1)
        s, p = ks_two_sample(vals, oracle)
        ks.append(s)
        pv.append(p)
        cd.append(char_distance(vals, params, thetas))
    ks_dec, cd_dec = _decreasing(ks), _decreasing(cd)
    final_rejected = pv[-1] < thresholds.level
    ok = True
    if thresholds.require_decrease == "ks":
        ok = ks_dec and not final_rejected
    elif thresholds.require_decrease == "char_distance":
        ok = cd_dec
    if thresholds.final_char_distance is not None:
        ok = ok and cd[-1] <= thresholds.final_char_distance
    return {"schedule": schedule, "ks": ks, "pvalues": pv, "char_distance": cd,
            "ks_decreasing": ks_dec, "char_decreasing": cd_dec,
            "final_rejected": bool(final_rejected), "level": thresholds.level,
            "thetas": list(map(float, thetas)), "pass": bool(ok)}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=float)


# -- exact operator identities ------------------------------------------------------

def _plain(k: Kernel) -> Kernel:
    """The same function without the piecewise-constant fast paths."""
    return Kernel(k.func, k.dim, k.support, k.decay, k.breakpoints, k.continuous, k.expr)


def operator_identity_suite(n_cases: int = 100, seed: int = 0, tol: float = 1e-10) -> dict:
    """Randomised checks of the lattice operators.

    * ``psi_h(phi_h u) == u`` bit for bit;
    * ``tilde psi_h`` is idempotent, re-projecting by generic cell quadrature;
    * ``int |phi_h u|^alpha = h^d sum |u_k|^alpha``: the closed form against
      cell quadrature of ``|phi_h u|^alpha`` (equal up to rounding).
    """
    rng = CounterStream(seed, "operator-suite").generator(0)
    inverse_fail, idem_err, norm_err = 0, 0.0, 0.0
    for _ in range(n_cases):
        d = int(rng.integers(1, 4))
        h = float(rng.uniform(0.05, 2.0))
        shape = tuple(int(v) for v in rng.integers(1, 40 if d == 1 else 8, size=d))
        lo = tuple(int(v) for v in rng.integers(-20, 20, size=d))
        u = CellArray(rng.standard_normal(shape) * rng.uniform(0.1, 10.0), h, lo)
        alpha = float(rng.uniform(0.3, 2.0))

        back = psi_h(phi_h(u), u.grid)
        if not (back.lo == u.lo and np.array_equal(back.values, u.values)):
            inverse_fail += 1

        grid = GridSpec(h, [l - 2 for l in lo], [n + 4 for n in shape])
        f = gaussian_bump(float(rng.uniform(0.5, 3.0)) * h, d,
                          center=h * (np.asarray(lo) + 0.5 * np.asarray(shape)))
        once = tilde_psi_h(f, grid)
        twice = psi_h(_plain(once), grid)
        ref = np.max(np.abs(once.cells.values))
        idem_err = max(idem_err, float(np.max(np.abs(twice.values - once.cells.values)) / ref))

        exact = phi_h(u).lalpha_power(alpha)
        closed = h ** d * float(np.sum(np.abs(u.values) ** alpha))
        quad = float(cell_integrals(_plain(phi_h(u)), u.grid,
                                    transform=lambda v: np.abs(v) ** alpha).sum())
        norm_err = max(norm_err, abs(exact - closed) / closed, abs(quad - closed) / closed)
    ok = inverse_fail == 0 and idem_err <= tol and norm_err <= 1e-12
    return {"cases": n_cases, "seed": seed, "inverse_failures": inverse_fail,
            "idempotence_max_rel_error": idem_err, "norm_max_rel_error": norm_err,
            "tolerance": tol, "pass": bool(ok)}
