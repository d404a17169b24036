"""Lattice approximations of stable white noise on R^d.

``mu_h[f] = sigma^-1 h^(d/alpha) sum_k xi_k (psi_h f)_k`` with i.i.d. innovations
``xi_k`` in the normal domain of attraction of ``S_alpha(sigma, nu)``. The
innovation of cell ``k`` depends only on ``(seed, replica, k)``, so several
integrands, spans or filters evaluated with the same sampler share one path.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import IntegrandError
from .grid import (CellArray, CellKernel, GridSpec, check_integrand, filtered_cells,
                   lalpha_power, psi_h, tilde_psi_h)
from .kernels import Kernel
from .stable import (InnovationSampler, StableParams, make_innovation_sampler,
                     stable_abs_moment, stable_from_uniforms)

__all__ = [
    "GridNoise", "FilterSpec", "identity_filter", "geometric_filter", "power_filter",
    "grid_noise_eval", "dirac_noise_eval", "filtered_noise_eval", "error_bound",
    "scaling_transport", "simulate_process", "coupled_error_samples", "default_threads",
]

CHUNK_ELEMENTS = 2_000_000


def default_threads() -> int:
    return max(1, int(os.environ.get("STABLENOISE_THREADS", "1")))


def _as_replicas(replicas):
    if replicas is None:
        return np.zeros(1, dtype=np.int64), True
    if np.isscalar(replicas):
        return np.arange(int(replicas), dtype=np.int64), False
    return np.asarray(replicas, dtype=np.int64), False


# -- filters -------------------------------------------------------------------

@dataclass(frozen=True)
class FilterSpec:
    """Lattice filter ``c`` on ``Z^d``.

    ``coefficients[j - lo]`` holds ``c_j`` on the explicit window. ``tail``
    (optional) gives ``c_j`` for any offsets outside that window (rows of an
    integer array), and ``tail_abs_sum`` bounds ``sum |c_j|`` over them.
    ``regime`` is ``"summable"`` (white limit ``C W``) or
    ``"regularly-varying"`` (fractional limit; needs ``beta`` and ``profile``).
    """

    coefficients: np.ndarray
    lo: tuple
    regime: str = "summable"
    beta: float | None = None
    profile: object = None
    tail: Callable | None = None
    tail_sum: float = 0.0
    tail_abs_sum: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float, copy=True)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "lo", tuple(int(v) for v in np.atleast_1d(self.lo)))
        if c.ndim != len(self.lo):
            raise ValueError("coefficient array rank must match the window")
        if self.regime not in ("summable", "regularly-varying"):
            raise ValueError(f"unknown filter regime {self.regime!r}")
        if self.regime == "regularly-varying":
            if self.beta is None or self.profile is None:
                raise ValueError("a regularly varying filter needs beta and a profile")
        elif not math.isfinite(self.tail_abs_sum):
            raise ValueError("summable filter with a non-summable tail")

    @property
    def dim(self) -> int:
        return self.coefficients.ndim

    @property
    def C(self) -> float:
        """``sum_k c_k`` (summable filters)."""
        if self.regime != "summable":
            raise ValueError("the coefficient sum is defined for summable filters only")
        return float(self.coefficients.sum()) + self.tail_sum

    def gain_ratio(self, h: float) -> float:
        """``ghat_h / g_h``: 1 for summable filters, ``h^(d - beta)`` otherwise."""
        if self.regime == "summable":
            return 1.0
        return h ** (self.dim - self.beta)

    def coefficient(self, offsets) -> np.ndarray:
        """``c_j`` for integer offsets of shape ``(n, d)`` (window or tail)."""
        j = np.asarray(offsets, dtype=np.int64).reshape(-1, self.dim)
        rel = j - np.asarray(self.lo)
        inside = np.all((rel >= 0) & (rel < np.asarray(self.coefficients.shape)), axis=1)
        out = np.zeros(len(j))
        if inside.any():
            out[inside] = self.coefficients[tuple(rel[inside].T)]
        if self.tail is not None and (~inside).any():
            out[~inside] = self.tail(j[~inside])
        return out

    def check_regime(self, alpha: float):
        if not 1.0 < alpha <= 2.0:
            raise IntegrandError("filtered noise is defined for 1 < alpha <= 2")
        if self.regime == "regularly-varying" and not (self.dim / alpha < self.beta < self.dim):
            raise IntegrandError(f"beta = {self.beta} outside (d/alpha, d) = "
                                 f"({self.dim / alpha:g}, {self.dim})")

    def describe(self) -> dict:
        out = {"name": self.name, "regime": self.regime, "window_lo": list(self.lo),
               "window_shape": list(self.coefficients.shape)}
        if self.regime == "summable":
            out["C"] = self.C
        else:
            out["beta"] = self.beta
        return out


def identity_filter(dim: int = 1) -> FilterSpec:
    return FilterSpec(np.ones((1,) * dim), (0,) * dim, name="identity")


def geometric_filter(rate: float = 0.5, radius: int | None = None, dim: int = 1) -> FilterSpec:
    """``c_k = rate^|k|_1``; the window drops terms below double precision."""
    if not 0 < rate < 1:
        raise ValueError("rate must lie in (0, 1)")
    if radius is None:
        radius = int(math.ceil(math.log(1e-18) / math.log(rate)))
    r = np.arange(-radius, radius + 1)
    mesh = np.meshgrid(*([r] * dim), indexing="ij")
    c = rate ** sum(np.abs(m) for m in mesh)
    one_d = (1 + rate) / (1 - rate)
    total = one_d ** dim
    return FilterSpec(c, (-radius,) * dim, "summable",
                      tail=lambda j: rate ** np.abs(j).sum(axis=1),
                      tail_sum=total - float(c.sum()), tail_abs_sum=total - float(c.sum()),
                      name=f"geometric(rate={rate})")


def power_filter(beta: float, radius: int = 64, dim: int = 1, c0: float = 1.0,
                 profile=None) -> FilterSpec:
    """``c_k = |k|^-beta`` (``c_0 = c0``): regularly varying with profile ``|x|^-beta``."""
    if profile is None:
        from .fractional import HomogeneousProfile
        profile = HomogeneousProfile(beta, dim=dim)
    r = np.arange(-radius, radius + 1)
    mesh = np.meshgrid(*([r] * dim), indexing="ij")
    norm = np.sqrt(sum(m.astype(float) ** 2 for m in mesh))
    with np.errstate(divide="ignore"):
        c = np.where(norm > 0, norm ** (-beta), c0)

    def tail(j):
        return np.linalg.norm(j.astype(float), axis=1) ** (-beta)

    return FilterSpec(c, (-radius,) * dim, "regularly-varying", beta=beta, profile=profile,
                      tail=tail, name=f"power(beta={beta})")


# -- the grid noise ----------------------------------------------------------------

@dataclass
class Lumped:
    """Aggregate of far lattice terms replaced in law by one stable draw."""

    power: float = 0.0      # sum |w_l|^alpha
    signed: float = 0.0     # sum sign(w_l) |w_l|^alpha

    def __bool__(self):
        return self.power > 0


class GridNoise:
    """``mu_h`` with span ``h`` driven by ``innovations``."""

    def __init__(self, h: float, innovations: InnovationSampler, dim: int = 1,
                 budget: float = 1e-4, order: int = 5, threads: int | None = None):
        if not h > 0:
            raise ValueError("span h must be positive")
        self.h = float(h)
        self.innovations = innovations
        self.dim = int(dim)
        self.budget = budget
        self.order = order
        self.threads = threads or default_threads()

    @property
    def alpha(self) -> float:
        return self.innovations.alpha

    @property
    def sigma(self) -> float:
        return self.innovations.sigma

    @property
    def nu(self) -> float:
        return self.innovations.params.nu

    @property
    def gamma(self) -> float:
        return self.h ** ((1.0 / self.alpha - 1.0) * self.dim) / self.sigma

    @property
    def point_scale(self) -> float:
        """``sigma^-1 h^(d/alpha)``."""
        return self.h ** (self.dim / self.alpha) / self.sigma

    def with_span(self, h: float) -> "GridNoise":
        return GridNoise(h, self.innovations, self.dim, self.budget, self.order, self.threads)

    def describe(self) -> dict:
        return {"h": self.h, "dim": self.dim, "innovations": self.innovations.describe()}

    # weights -------------------------------------------------------------------
    def grid_for(self, f: Kernel) -> tuple[GridSpec, float]:
        return GridSpec.covering(f, self.h, self.alpha, self.budget)

    def weights(self, f: Kernel, grid: GridSpec | None = None) -> CellArray:
        """``w_k = sigma^-1 h^(d/alpha) (psi_h f)_k``."""
        if f.dim != self.dim:
            raise ValueError("kernel and noise dimensions differ")
        if grid is None:
            grid, _ = self.grid_for(f)
        u = psi_h(f, grid, self.order)
        return CellArray(self.point_scale * u.values, self.h, u.lo)

    def dirac_weights(self, f: Kernel) -> CellArray:
        if not f.continuous:
            raise IntegrandError("the point-evaluation variant needs a continuous kernel")
        grid, _ = self.grid_for(f)
        keys = grid.keys()
        vals = f(self.h * keys.astype(float)).reshape(grid.shape)
        return CellArray(self.point_scale * vals, self.h, grid.lo)

    def filtered_weights(self, filt: FilterSpec, f: Kernel, far: int | None = None):
        """Weights of ``mu_h[tilde psi_h^c f]`` and the lumped far field.

        With a tail form in d = 1, the weights ``sum_k a_k c_{k-l}`` are exact
        for every ``l``: explicit on the filter window around the support of
        ``f``, summed directly out to ``far`` and closed with a Hurwitz zeta
        remainder beyond (using ``c_j ~ |j|^-beta``). Only the explicit part
        gets individual innovations; the rest is one stable draw.
        """
        filt.check_regime(self.alpha)
        if filt.dim != self.dim:
            raise ValueError("filter and noise dimensions differ")
        grid, _ = self.grid_for(f)
        a = psi_h(f, grid, self.order).values
        scale = self.point_scale * filt.gain_ratio(self.h)
        if filt.tail is None or self.dim != 1 or filt.regime != "regularly-varying":
            out, lo = filtered_cells(a, grid.lo, filt)
            return CellArray(scale * out, self.h, lo), Lumped()
        k = np.arange(grid.lo[0], grid.lo[0] + grid.shape[0])
        nz = a != 0
        k, a = k[nz], a[nz]
        if a.size == 0:
            return CellArray(np.zeros(1), self.h, (0,)), Lumped()
        R = filt.coefficients.shape[0]
        lo_l, hi_l = int(k.min()) - R, int(k.max()) + R        # explicit labels [lo_l, hi_l)
        l = np.arange(lo_l, hi_l)
        w = self._conv(filt, k, a, l) * scale
        if far is None:
            far = int(min(2 ** 20, max(2 ** 12, 4e7 // (2 * len(k)))))
        lump = Lumped()
        a_sum = float(a.sum())
        alpha = self.alpha
        for side in (-1, 1):
            start = hi_l if side > 0 else lo_l - 1
            for s in range(0, far, 2 ** 14):
                block = start + side * np.arange(s, min(far, s + 2 ** 14))
                wb = self._conv(filt, k, a, block) * scale
                p = np.abs(wb) ** alpha
                lump.power += float(p.sum())
                lump.signed += float((np.sign(wb) * p).sum())
            # remainder: w_l ~ scale * a_sum * |l - kbar|^-beta
            kbar = float((k * np.abs(a)).sum() / np.abs(a).sum())
            edge = (start + side * far) - kbar
            amp = abs(scale * a_sum) ** alpha
            rem = amp * float(special.zeta(alpha * filt.beta, abs(edge)))
            lump.power += rem
            lump.signed += math.copysign(rem, a_sum) if a_sum != 0 else 0.0
        return CellArray(w, self.h, (lo_l,)), lump

    @staticmethod
    def _conv(filt, k, a, l):
        out = np.zeros(len(l))
        for i in range(0, len(k), 256):
            kk, aa = k[i:i + 256], a[i:i + 256]
            off = (kk[None, :] - l[:, None]).reshape(-1, 1)
            out += (filt.coefficient(off).reshape(len(l), len(kk)) * aa[None, :]).sum(axis=1)
        return out

    # evaluation ----------------------------------------------------------------
    def apply(self, weights: Sequence[CellArray], replicas, lumps: Sequence[Lumped] | None = None):
        """``sum_k w_k xi_k`` for each weight array (columns) and replica (rows)."""
        reps, _ = _as_replicas(replicas)
        weights = list(weights)
        keys_all, cols = _stack_weights(weights, self.dim)
        n_out = len(weights)
        if keys_all.shape[0] == 0:
            out = np.zeros((len(reps), n_out))
        else:
            step = max(1, CHUNK_ELEMENTS // keys_all.shape[0])
            chunks = [reps[i:i + step] for i in range(0, len(reps), step)]

            def run(rc):
                xi = self.innovations.draw(rc, keys_all)
                return xi @ cols

            if self.threads > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(self.threads) as ex:
                    parts = list(ex.map(run, chunks))
            else:
                parts = [run(c) for c in chunks]
            out = np.concatenate(parts, axis=0)
        if lumps:
            out = out + self._lumped(reps, lumps)
        return out

    def _lumped(self, reps, lumps):
        """One exact stable draw per (replica, lump) on a reserved stream."""
        stream = self.innovations.stream.child("lumped-tail")
        out = np.zeros((len(reps), len(lumps)))
        for j, lump in enumerate(lumps):
            if not lump:
                continue
            nu_eff = 0.0 if self.alpha == 2.0 else self.nu * lump.signed / lump.power
            params = StableParams(self.alpha, self.sigma * lump.power ** (1.0 / self.alpha),
                                  float(np.clip(nu_eff, -1, 1)))
            key = np.array([j])
            u1 = stream.uniforms(reps, key, draw=0)[:, 0]
            u2 = stream.uniforms(reps, key, draw=1)[:, 0]
            out[:, j] = stable_from_uniforms(u1, u2, params)
        return out

    def eval(self, f: Kernel, replicas=None):
        reps, scalar = _as_replicas(replicas)
        out = self.apply([self.weights(f)], reps)[:, 0]
        return float(out[0]) if scalar else out


def _stack_weights(weights: Sequence[CellArray], dim: int):
    """Union of non-zero lattice labels and the weight matrix ``(n_keys, n_arrays)``."""
    key_sets, vals = [], []
    for w in weights:
        keys = w.grid.keys()
        v = w.values.ravel()
        nz = v != 0
        key_sets.append(keys[nz])
        vals.append(v[nz])
    if not key_sets or sum(len(k) for k in key_sets) == 0:
        return np.zeros((0, dim), dtype=np.int64), np.zeros((0, len(weights)))
    allk = np.concatenate(key_sets)
    uniq, inv = np.unique(allk, axis=0, return_inverse=True)
    inv = inv.ravel()
    cols = np.zeros((len(uniq), len(weights)))
    start = 0
    for j, v in enumerate(vals):
        cols[inv[start:start + len(v)], j] += v
        start += len(v)
    return uniq, cols


# -- module-level operations ------------------------------------------------------

def grid_noise_eval(noise: GridNoise, f: Kernel, replicas=None, check: bool = True):
    """``mu_h[f]`` for one replica (scalar) or many (array)."""
    if check:
        check_integrand(f, noise.alpha).require()
    return noise.eval(f, replicas)


def dirac_noise_eval(noise: GridNoise, f: Kernel, replicas=None):
    """``sigma^-1 h^(d/alpha) sum_k xi_k f(hk)``."""
    reps, scalar = _as_replicas(replicas)
    out = noise.apply([noise.dirac_weights(f)], reps)[:, 0]
    return float(out[0]) if scalar else out


def filtered_noise_eval(noise: GridNoise, filt: FilterSpec, f: Kernel, replicas=None,
                        lump: bool = True):
    """``mu_h[tilde psi_h^c f]`` (filtered innovations ``xi * c``)."""
    reps, scalar = _as_replicas(replicas)
    w, lumped = noise.filtered_weights(filt, f)
    out = noise.apply([w], reps, [lumped] if lump and lumped else None)[:, 0]
    return float(out[0]) if scalar else out


def error_bound(f: Kernel, f_M: Kernel, grid, p: float, params: StableParams) -> float:
    """``E|X|^p * ||tilde psi_h f_M - f||_alpha^p`` with ``X ~ S_alpha(1, nu)``."""
    alpha = params.alpha
    if alpha < 2 and p >= alpha:
        raise ValueError(f"need p < alpha (got p = {p}, alpha = {alpha})")
    if not isinstance(grid, GridSpec):
        grid, _ = GridSpec.covering(f_M, float(grid), alpha)
    approx = tilde_psi_h(f_M, grid)
    diff = approx - f
    norm = lalpha_power(diff, alpha) ** (1.0 / alpha)
    return stable_abs_moment(alpha, p, params.nu) * norm ** p


def coupled_error_samples(f: Kernel, f_M: Kernel, h: float, params: StableParams, n: int,
                          seed: int, refine: int = 16, threads: int | None = None) -> np.ndarray:
    """Draws of ``mu_h[f_M] - W_alpha[f]`` with both terms on one exact stable path.

    The path is realised on the grid of span ``h / refine``; there
    ``mu_h[f_M]`` is ``W[tilde psi_h f_M]`` exactly and ``W[f]`` is replaced
    by ``W[tilde psi_{h/refine} f]``.
    """
    fine = GridNoise(h / refine, make_innovation_sampler(
        "exact-stable", StableParams(params.alpha, 1.0, params.nu), seed, "coupled"),
        f.dim, threads=threads)
    coarse_grid, _ = GridSpec.covering(f_M, h, params.alpha)
    approx = tilde_psi_h(f_M, coarse_grid)
    gf, _ = fine.grid_for(f)
    ga = GridSpec.from_box(fine.h, approx.support[0], approx.support[1])
    grid = gf.union(ga)
    w = CellArray(fine.weights(approx, grid).values - fine.weights(f, grid).values, fine.h, grid.lo)
    return fine.apply([w], n)[:, 0]


def scaling_transport(noise: GridNoise, f: Kernel, c: float, replicas=None):
    """``(mu_h[f(c .)], c^(-d/alpha) mu_{ch}[f])`` on one innovation path.

    Both sides use the same lattice labels, so truncation of an unbounded
    ``f`` drops the same innovations on each side.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    reps, scalar = _as_replicas(replicas)
    g = f.dilate(c)
    coarse = noise.with_span(c * noise.h)
    grid_f, _ = coarse.grid_for(f)
    grid_g, _ = noise.grid_for(g)
    grid = grid_g.union(grid_f.with_span(noise.h))
    lhs = noise.apply([noise.weights(g, grid)], reps)[:, 0]
    rhs = c ** (-noise.dim / noise.alpha) * coarse.apply([coarse.weights(f, grid.with_span(c * noise.h))],
                                                        reps)[:, 0]
    if scalar:
        return float(lhs[0]), float(rhs[0])
    return lhs, rhs


def simulate_process(noise: GridNoise, kernels: Sequence[Kernel], replicas=None,
                     check: bool = True) -> np.ndarray:
    """``(mu_h[f_t])_t`` on a common path; shape ``(n_replicas, n_t)`` (or ``(n_t,)``)."""
    reps, scalar = _as_replicas(replicas)
    if check:
        for f in kernels:
            check_integrand(f, noise.alpha).require()
    out = noise.apply([noise.weights(f) for f in kernels], reps)
    return out[0] if scalar else out
