"""Poisson and binomial random-measure approximations of stable white noise.

``mu_lambda[f] = gamma_lambda sum_i xi_i f(e_i)`` over a Poisson cloud with
intensity ``lambda m(de) G(dxi)`` and ``gamma_lambda = sigma^-1 lambda^(-1/alpha)``.
Counts, locations and marks come from separate counter streams, so a replica
is a pure function of ``(seed, replica)``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import IntegrandError
from .rng import CounterStream
from .spaces import Space
from .stable import InnovationSampler, stable_char_fn

__all__ = [
    "PointCloud", "CloudBatch", "sample_poisson_cloud", "shot_noise_eval", "shot_noise_replicas",
    "binomial_noise_eval", "check_shot_integrand", "mark_char_fn", "shot_char_fn",
    "binomial_char_fn", "merge_clouds", "poisson_counts",
]

CHUNK_POINTS = 2_000_000
MC_MARKS = 100_000


# -- clouds ------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """One realisation: ``points[i]`` in ``E`` carries mark ``marks[i]``."""

    points: np.ndarray
    marks: np.ndarray
    lam: float
    gamma: float
    replica: int = 0

    def __len__(self):
        return len(self.marks)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, fh=None) -> str | None:
        buf = fh or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"e_{i + 1}" for i in range(self.dim)] + ["xi"])
        for p, x in zip(self.points, self.marks):
            w.writerow([f"{v:.17g}" for v in p] + [f"{x:.17g}"])
        return None if fh else buf.getvalue()

    @classmethod
    def from_csv(cls, text_or_fh, lam: float, gamma: float) -> "PointCloud":
        fh = io.StringIO(text_or_fh) if isinstance(text_or_fh, str) else text_or_fh
        rows = list(csv.reader(fh))
        dim = len(rows[0]) - 1
        data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, dim + 1)
        return cls(data[:, :dim], data[:, dim], lam, gamma)


@dataclass(frozen=True)
class CloudBatch:
    """Clouds of several replicas stored back to back (``offsets`` delimit them)."""

    points: np.ndarray
    marks: np.ndarray
    offsets: np.ndarray
    replicas: np.ndarray
    lam: float
    gamma: float

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def owner(self) -> np.ndarray:
        """Row index (into ``replicas``) of every point."""
        return np.repeat(np.arange(len(self.replicas)), self.counts)

    def cloud(self, i: int) -> PointCloud:
        s = slice(self.offsets[i], self.offsets[i + 1])
        return PointCloud(self.points[s], self.marks[s], self.lam, self.gamma,
                          int(self.replicas[i]))


def merge_clouds(a: PointCloud, b: PointCloud, sigma: float, alpha: float) -> PointCloud:
    """Superpose two independent clouds; the result has intensity ``a.lam + b.lam``."""
    lam = a.lam + b.lam
    gamma = 0.0 if lam == 0 else lam ** (-1.0 / alpha) / sigma
    return PointCloud(np.concatenate([a.points, b.points]), np.concatenate([a.marks, b.marks]),
                      lam, gamma, a.replica)


def _streams(seed: int, name: str):
    root = CounterStream(seed, name)
    return root.child("count"), root.child("locations"), root.child("marks")


def poisson_counts(stream: CounterStream, replicas, mean: float) -> np.ndarray:
    """``Poisson(mean)`` counts by inversion of one uniform per replica."""
    replicas = np.asarray(replicas, dtype=np.int64)
    if mean == 0:
        return np.zeros(len(replicas), dtype=np.int64)
    u = stream.uniforms(replicas, np.zeros((1, 1), dtype=np.int64))[:, 0]
    return stats.poisson.ppf(u, mean).astype(np.int64)


def _gamma(G: InnovationSampler, lam: float) -> float:
    return 0.0 if lam == 0 else lam ** (-1.0 / G.alpha) / G.sigma


def _require_finite(space: Space):
    if not space.finite:
        raise ValueError("the space has infinite mass; restrict it to a window first")


def _fill(space, G, loc, marks, reps, counts):
    """Points and marks for replicas ``reps`` with the given counts."""
    owner = np.repeat(reps, counts)
    ids = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    if owner.size == 0:
        return np.zeros((0, space.dim)), np.zeros(0)
    pts = space.sample(loc, owner, ids)
    xi = replace(G, stream=marks).draw_paired(owner, ids)
    return pts, xi


def sample_poisson_cloud(space: Space, lam: float, G: InnovationSampler, seed: int,
                         replicas=None):
    """Poisson cloud with intensity ``lam m(de) G(dxi)``.

    ``replicas=None`` gives one :class:`PointCloud` (replica 0); an int or an
    index array gives a :class:`CloudBatch`.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    _require_finite(space)
    single = replicas is None
    reps = np.zeros(1, np.int64) if single else (
        np.arange(int(replicas), dtype=np.int64) if np.isscalar(replicas)
        else np.asarray(replicas, dtype=np.int64))
    cnt, loc, mk = _streams(seed, "shot-noise")
    counts = poisson_counts(cnt, reps, lam * space.total_mass)
    pts, xi = _fill(space, G, loc, mk, reps, counts)
    gamma = _gamma(G, lam)
    if single:
        return PointCloud(pts, xi, float(lam), gamma, 0)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return CloudBatch(pts, xi, offsets, reps, float(lam), gamma)


# -- evaluation --------------------------------------------------------------------

def _values(f, pts: np.ndarray) -> np.ndarray:
    v = np.asarray(f(pts), dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise IntegrandError("integrand is not finite at a cloud point")
    return v


def shot_noise_eval(cloud, f: Callable):
    """``gamma_lambda sum_i xi_i f(e_i)``: a float for a cloud, an array for a batch."""
    if isinstance(cloud, CloudBatch):
        if cloud.marks.size == 0:
            return np.zeros(len(cloud.replicas))
        s = np.bincount(cloud.owner(), cloud.marks * _values(f, cloud.points),
                        minlength=len(cloud.replicas))
        return cloud.gamma * s
    if len(cloud) == 0:
        return 0.0
    return float(cloud.gamma * np.sum(cloud.marks * _values(f, cloud.points)))


def _chunks(counts: np.ndarray, budget: int):
    """Split replica rows into runs holding about ``budget`` points each."""
    out, start, acc = [], 0, 0
    for i, c in enumerate(counts):
        acc += int(c)
        if acc >= budget:
            out.append((start, i + 1))
            start, acc = i + 1, 0
    if start < len(counts):
        out.append((start, len(counts)))
    return out


def _replica_sums(space, G, funcs, seed, name, reps, counts, scale, threads):
    cnt, loc, mk = _streams(seed, name)
    out = np.zeros((len(reps), len(funcs)))

    def run(span):
        a, b = span
        pts, xi = _fill(space, G, loc, mk, reps[a:b], counts[a:b])
        owner = np.repeat(np.arange(b - a), counts[a:b])
        block = np.zeros((b - a, len(funcs)))
        for j, f in enumerate(funcs):
            if xi.size:
                block[:, j] = np.bincount(owner, xi * _values(f, pts), minlength=b - a)
        out[a:b] = scale * block

    spans = _chunks(counts, CHUNK_POINTS)
    if threads and threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(run, spans))
    else:
        for s in spans:
            run(s)
    return out


def _rep_array(replicas):
    if np.isscalar(replicas):
        return np.arange(int(replicas), dtype=np.int64)
    return np.asarray(replicas, dtype=np.int64)


def shot_noise_replicas(space: Space, lam: float, G: InnovationSampler, funcs: Sequence[Callable],
                        seed: int, replicas, threads: int = 1, scale: float = 1.0,
                        stream: str = "shot-noise") -> np.ndarray:
    """``mu_lambda[f_j]`` for many replicas without keeping the clouds; shape ``(n, len(funcs))``.

    Replica ``r`` sees the same cloud as ``sample_poisson_cloud(..., replicas=[r])``.
    """
    _require_finite(space)
    reps = _rep_array(replicas)
    cnt, _, _ = _streams(seed, stream)
    counts = poisson_counts(cnt, reps, lam * space.total_mass)
    return _replica_sums(space, G, list(funcs), seed, stream, reps, counts,
                         scale * _gamma(G, lam), threads)


def binomial_noise_eval(space: Space, n_points: int, G: InnovationSampler, f: Callable, seed: int,
                        replicas=None, threads: int = 1):
    """``sigma^-1 n^(-1/alpha) sum_{i<=n} xi_i f(e_i)`` with ``(e_i, xi_i)`` i.i.d. ``m x G``."""
    if abs(space.total_mass - 1.0) > 1e-12:
        raise ValueError("the binomial measure needs a normalised space (m(E) = 1)")
    if n_points < 0:
        raise ValueError("point count must be non-negative")
    single = replicas is None
    reps = np.zeros(1, np.int64) if single else _rep_array(replicas)
    counts = np.full(len(reps), int(n_points), dtype=np.int64)
    scale = 0.0 if n_points == 0 else n_points ** (-1.0 / G.alpha) / G.sigma
    out = _replica_sums(space, G, [f], seed, "binomial", reps, counts, scale, threads)[:, 0]
    return float(out[0]) if single else out


def check_shot_integrand(space: Space, f: Callable, lam: float, G: InnovationSampler) -> bool:
    """Accept iff ``int |f|^alpha dm < infinity`` (the certified sufficient condition)."""
    return space.check(f, G.alpha).accepted


# -- characteristic functions ----------------------------------------------------

def _pareto_char_fn(G: InnovationSampler, v: np.ndarray) -> np.ndarray:
    a, p, q = G.tail.alpha, G.tail.p, G.tail.q
    x0 = G.threshold
    core = 1.0 - (p + q) * x0 ** -a
    out = np.ones(v.shape, dtype=complex)
    uniq, inv = np.unique(np.abs(v), return_inverse=True)
    vals = np.ones(len(uniq), dtype=complex)
    for i, t in enumerate(uniq):
        if t == 0:
            continue
        c = integrate.quad(lambda x: x ** (-a - 1.0), x0, np.inf, weight="cos", wvar=t)[0]
        s = integrate.quad(lambda x: x ** (-a - 1.0), x0, np.inf, weight="sin", wvar=t)[0]
        vals[i] = core * math.sin(t * x0) / (t * x0) + a * (p + q) * c + 1j * a * (p - q) * s
    out = vals[inv.reshape(v.shape)]
    out = np.where(v < 0, np.conj(out), out)
    return out * np.exp(-1j * v * G.shift)


_MC_CACHE: dict = {}


def mark_char_fn(G: InnovationSampler, v, method: str = "auto") -> np.ndarray:
    """``E exp(i v xi)`` for ``xi ~ G``.

    ``auto`` uses the closed form (stable or gaussian marks) or Fourier
    quadrature of the tails (Pareto marks); ``mc`` averages over a cached
    sample of ``MC_MARKS`` draws.
    """
    v = np.asarray(v, dtype=float)
    if method == "mc":
        key = (G.describe().__repr__(), G.stream.seed, G.stream.stream)
        if key not in _MC_CACHE:
            _MC_CACHE[key] = G.with_stream("char-fn-cache").sample(MC_MARKS)
        xs = _MC_CACHE[key]
        flat = v.reshape(-1)
        out = np.array([np.mean(np.exp(1j * t * xs)) for t in flat])
        return out.reshape(v.shape)
    if G.mode in ("exact-stable", "gaussian"):
        return stable_char_fn(v, G.params)
    if G.mode == "pareto-tail":
        return _pareto_char_fn(G, v)
    return mark_char_fn(G, v, "mc")


def shot_char_fn(space: Space, f: Callable, lam: float, G: InnovationSampler, thetas,
                 method: str = "auto") -> np.ndarray:
    """Exact ``E exp(i theta mu_lambda[f]) = exp(lam int (phi_G(theta gamma f) - 1) dm)``."""
    x, w = space.rule()
    fv = _values(f, x)
    nz = fv != 0
    fv, w = fv[nz], w[nz]
    g = _gamma(G, lam)
    out = []
    for t in np.atleast_1d(thetas):
        psi = mark_char_fn(G, t * g * fv, method) - 1.0
        out.append(np.exp(lam * np.sum(w * psi)))
    return np.array(out)


def binomial_char_fn(space: Space, f: Callable, n_points: int, G: InnovationSampler, thetas,
                     method: str = "auto") -> np.ndarray:
    """Exact ``E exp(i theta B_n[f]) = (int phi_G(theta s f) dm)^n``, ``s = sigma^-1 n^(-1/alpha)``."""
    x, w = space.rule()
    fv = _values(f, x)
    s = n_points ** (-1.0 / G.alpha) / G.sigma
    return np.array([np.sum(w * mark_char_fn(G, t * s * fv, method)) ** n_points
                     for t in np.atleast_1d(thetas)])
