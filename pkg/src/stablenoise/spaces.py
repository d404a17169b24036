"""Measured spaces ``(E, m)``: samplers from ``m / m(E)`` and quadrature for ``int g dm``.

Points are rows of an ``(n, D)`` array. Samplers are counter based: the point
labelled ``(replica, j)`` is a pure function of the stream and that label.
"""
from __future__ import annotations

import math
from typing import Callable, Union

import numpy as np
from scipy import special, stats

from .errors import IntegrandError, QuadratureError
from .grid import IntegrandCheck, _integrate_1d, check_integrand, integrate_kernel
from .kernels import Kernel
from .rng import CounterStream

__all__ = ["Space", "Euclidean", "Box", "Sphere", "SphereCylinder", "space_from_dict"]

Skew = Union[float, Callable]


def _skew_values(nu: Skew, pts: np.ndarray) -> np.ndarray | float:
    return nu(pts) if callable(nu) else float(nu)


class Space:
    """Base class. ``dim`` is the number of coordinates of a point."""

    dim: int
    total_mass: float = math.inf

    @property
    def finite(self) -> bool:
        return math.isfinite(self.total_mass)

    # sampling ---------------------------------------------------------------
    def sample(self, stream: CounterStream, replicas, ids) -> np.ndarray:
        raise NotImplementedError

    # quadrature -------------------------------------------------------------
    def rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights with ``sum w g(x) ~ int g dm``."""
        raise NotImplementedError

    def integrate(self, g: Callable) -> float:
        x, w = self.rule()
        return float(np.sum(w * g(x)))

    def power_integrals(self, f: Kernel, alpha: float, nu: Skew = 0.0) -> tuple[float, float]:
        """``(int |f|^alpha dm, int nu sign(f) |f|^alpha dm)``."""
        x, w = self.rule()
        v = f(x)
        if not np.all(np.isfinite(v)):
            raise QuadratureError("kernel is not finite on the quadrature nodes")
        a = np.abs(v) ** alpha
        return float(np.sum(w * a)), float(np.sum(w * _skew_values(nu, x) * np.sign(v) * a))

    def check(self, f: Kernel, alpha: float) -> IntegrandCheck:
        """Sufficient condition ``int |f|^alpha dm < infinity``."""
        try:
            mass, _ = self.power_integrals(f, alpha)
        except QuadratureError as exc:
            return IntegrandCheck("rejected", str(exc))
        if not math.isfinite(mass):
            return IntegrandCheck("rejected", "int |f|^alpha dm diverges")
        return IntegrandCheck("in-L^alpha", "ok", {"lalpha_power": mass})

    def to_dict(self) -> dict:
        raise NotImplementedError


class Euclidean(Space):
    """Lebesgue measure on ``R^d`` (infinite mass)."""

    def __init__(self, dim: int = 1):
        self.dim = int(dim)
        self.total_mass = math.inf

    def power_integrals(self, f, alpha, nu=0.0):
        if callable(nu):
            raise ValueError("skewness on R^d must be constant")
        mass, _ = integrate_kernel(f, lambda v: np.abs(v) ** alpha, alpha)
        signed, _ = integrate_kernel(f, lambda v: np.sign(v) * np.abs(v) ** alpha, alpha)
        return mass, float(nu) * signed

    def check(self, f, alpha):
        return check_integrand(f, alpha)

    def restrict(self, lo, hi) -> "Box":
        return Box(lo, hi)

    def sample(self, stream, replicas, ids):
        raise ValueError("Lebesgue measure on R^d has infinite mass; restrict it to a box first")

    def to_dict(self):
        return {"kind": "euclidean", "dim": self.dim}


class Box(Space):
    """``m(dx) = w(x) dx`` on the box ``[lo, hi)`` (``w = 1`` by default).

    A non-constant density needs ``density_max`` (an upper bound of ``w``)
    for rejection sampling.
    """

    attempts = 64

    def __init__(self, lo, hi, density: Callable | None = None, density_max: float | None = None):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi in every coordinate")
        self.dim = self.lo.size
        self.density = density
        self.density_max = density_max
        self.volume = float(np.prod(self.hi - self.lo))
        if density is None:
            self.total_mass = self.volume
        else:
            if density_max is None:
                raise ValueError("a density needs density_max for sampling")
            one = Kernel(lambda *x: np.ones(np.shape(x[0])), self.dim)
            self.total_mass, _ = self._integrate_kernel(one, lambda v: v)

    def _weighted(self, f: Kernel, transform) -> Kernel:
        w = self.density
        if w is None:
            return Kernel(lambda *x: transform(f.eval_coords(*x)), f.dim, None, None,
                          f.breakpoints, f.continuous, None, f.singular)
        return Kernel(lambda *x: transform(f.eval_coords(*x)) * w(np.stack(x, axis=-1)), f.dim,
                      None, None, f.breakpoints, f.continuous, None, f.singular)

    def _integrate_kernel(self, f: Kernel, transform):
        g = self._weighted(f, transform)
        if self.dim == 1:
            pts = list(f.breakpoints[0]) + list(f.singular)
            return _integrate_1d(g.eval_coords, float(self.lo[0]), float(self.hi[0]), pts,
                                 f.singular), 0.0
        return integrate_kernel(g, lambda v: v, box=(self.lo, self.hi))

    def power_integrals(self, f, alpha, nu=0.0):
        mass, _ = self._integrate_kernel(f, lambda v: np.abs(v) ** alpha)
        if callable(nu):
            g = Kernel(lambda *x: nu(np.stack(x, axis=-1)) * np.sign(f.eval_coords(*x))
                       * np.abs(f.eval_coords(*x)) ** alpha, f.dim, None, None,
                       f.breakpoints, f.continuous, None, f.singular)
            signed, _ = self._integrate_kernel(g, lambda v: v)
            return mass, signed
        signed, _ = self._integrate_kernel(f, lambda v: np.sign(v) * np.abs(v) ** alpha)
        return mass, float(nu) * signed

    def check(self, f, alpha):
        if self.density is None:
            return check_integrand(f, alpha, box=(self.lo, self.hi))
        return super().check(f, alpha)

    def rule(self):
        n = 4096 if self.dim == 1 else max(4, int(round(2e6 ** (1.0 / self.dim))))
        axes = [a + (b - a) * (np.arange(n) + 0.5) / n for a, b in zip(self.lo, self.hi)]
        x = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        w = np.full(len(x), self.volume / len(x))
        if self.density is not None:
            w = w * self.density(x)
        return x, w

    def sample(self, stream, replicas, ids):
        replicas = np.asarray(replicas, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        span = self.hi - self.lo
        if self.density is None:
            u = np.stack([stream.uniforms_paired(replicas, ids, draw=i) for i in range(self.dim)],
                         axis=1)
            return self.lo + span * u
        out = np.full((len(ids), self.dim), np.nan)
        todo = np.arange(len(ids))
        for attempt in range(self.attempts):
            if todo.size == 0:
                break
            base = (attempt + 1) * (self.dim + 1)
            u = np.stack([stream.uniforms_paired(replicas[todo], ids[todo], draw=base + i)
                          for i in range(self.dim)], axis=1)
            x = self.lo + span * u
            acc = stream.uniforms_paired(replicas[todo], ids[todo], draw=base + self.dim)
            ok = acc * self.density_max <= self.density(x)
            out[todo[ok]] = x[ok]
            todo = todo[~ok]
        if todo.size:
            raise QuadratureError("rejection sampler exhausted its attempts; check density_max")
        return out

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "weighted": self.density is not None}


def _gaussian_directions(stream, replicas, ids, dim, draw0=0):
    z = np.stack([special.ndtri(stream.uniforms_paired(replicas, ids, draw=draw0 + i))
                  for i in range(dim)], axis=1)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _sphere_rule(q: int, n: int | None = None):
    """Nodes/weights of the normalised uniform measure on ``S^q`` in ``R^(q+1)``."""
    if q == 0:
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    if q == 1:
        n = n or 2 ** 14
        th = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n, 1.0 / n)
    if q == 2:
        n = n or 1000
        z, wz = np.polynomial.legendre.leggauss(n)
        m = 2 * n
        ph = 2 * np.pi * (np.arange(m) + 0.5) / m
        Z, PH = np.meshgrid(z, ph, indexing="ij")
        rho = np.sqrt(1 - Z ** 2)
        x = np.stack([rho * np.cos(PH), rho * np.sin(PH), Z], axis=-1).reshape(-1, 3)
        w = np.repeat(wz / 2.0, m) / m
        return x, w
    sob = stats.qmc.Sobol(q + 1, scramble=True, seed=0).random_base2(18)
    z = special.ndtri(np.clip(sob, 1e-16, 1 - 1e-16))
    return z / np.linalg.norm(z, axis=1, keepdims=True), np.full(len(z), 1.0 / len(z))


class Sphere(Space):
    """Unit sphere ``S^q`` in ``R^(q+1)`` with the normalised uniform measure."""

    def __init__(self, q: int = 2):
        if q < 1:
            raise ValueError("q must be >= 1")
        self.q = int(q)
        self.dim = q + 1
        self.total_mass = 1.0
        self._rule = None

    def rule(self):
        if self._rule is None:
            self._rule = _sphere_rule(self.q)
        return self._rule

    def sample(self, stream, replicas, ids):
        return _gaussian_directions(stream, np.asarray(replicas), np.asarray(ids), self.dim)

    def to_dict(self):
        return {"kind": "sphere", "q": self.q}


class SphereCylinder(Space):
    """``S^(q-1) x (r0, r0 + R]`` with ``ds x dr``; ``ds`` is ``ds_mass`` times the uniform probability.

    A point is ``(s_1, ..., s_q, r)``.
    """

    def __init__(self, q: int, R: float, ds_mass: float = 1.0, n_r: int = 1000, r0: float = 0.0):
        if q < 1 or not R > 0 or r0 < 0:
            raise ValueError("need q >= 1, R > 0 and r0 >= 0")
        self.q = int(q)
        self.R = float(R)
        self.r0 = float(r0)
        self.ds_mass = float(ds_mass)
        self.dim = q + 1
        self.total_mass = self.ds_mass * self.R
        self.n_r = n_r
        self._rule = None

    def rule(self):
        if self._rule is None:
            s, ws = _sphere_rule(self.q - 1, 2048 if self.q == 2 else (120 if self.q == 3 else None))
            r = self.r0 + self.R * (np.arange(self.n_r) + 0.5) / self.n_r
            S = np.repeat(s, self.n_r, axis=0)
            Rr = np.tile(r, len(s))
            w = np.repeat(ws, self.n_r) * self.ds_mass * self.R / self.n_r
            self._rule = (np.column_stack([S, Rr]), w)
        return self._rule

    def sample(self, stream, replicas, ids):
        replicas = np.asarray(replicas)
        ids = np.asarray(ids)
        if self.q == 1:
            s = np.where(stream.uniforms_paired(replicas, ids, draw=0) < 0.5, 1.0, -1.0)[:, None]
        else:
            s = _gaussian_directions(stream, replicas, ids, self.q)
        r = self.r0 + self.R * (1.0 - stream.uniforms_paired(replicas, ids, draw=self.q + 1))
        return np.column_stack([s, r])

    def to_dict(self):
        return {"kind": "sphere-cylinder", "q": self.q, "R": self.R, "ds_mass": self.ds_mass,
                "r0": self.r0}


def space_from_dict(spec: dict) -> Space:
    kind = spec.get("kind", "box")
    if kind == "euclidean":
        return Euclidean(spec.get("dim", 1))
    if kind == "box":
        return Box(spec["lo"], spec["hi"])
    if kind == "sphere":
        return Sphere(spec.get("q", 2))
    if kind == "sphere-cylinder":
        return SphereCylinder(spec["q"], spec["R"], spec.get("ds_mass", 1.0),
                              r0=spec.get("r0", 0.0))
    raise ValueError(f"unknown space kind {kind!r}")
