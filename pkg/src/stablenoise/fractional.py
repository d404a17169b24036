"""Fractional stable noise ``W_{alpha,p}[f] = W_alpha[f * p_check]`` and related diagnostics.

Here ``(f * p_check)(x) = int f(y) p(y - x) dy`` and ``p`` is homogeneous of order
``-beta`` with ``d/alpha < beta < d``. The quadrature routines are
one-dimensional; the profile is ``p(x) = |x|^-beta * (p_plus if x > 0 else p_minus)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import IntegrandError, QuadratureError
from .kernels import Kernel
from .parser import parse_kernel
from .rng import CounterStream
from .stable import StableParams, sample_stable

__all__ = [
    "HomogeneousProfile", "convolve_profile", "fractional_eval_params", "sample_fractional",
    "covariance_kernel", "regular_variation_check", "renormalize", "self_similarity_index",
    "lfsm_kernel",
]

EPSABS = 1e-12
EPSREL = 1e-10


@dataclass(frozen=True)
class HomogeneousProfile:
    """``p(x) = |x|^-beta p(x/|x|)``, bounded on the unit sphere.

    ``sphere`` evaluates ``p`` on unit vectors (rows); in one dimension
    ``p_plus``/``p_minus`` give the values at ``+1`` and ``-1``.
    """

    beta: float
    dim: int = 1
    p_plus: float = 1.0
    p_minus: float = 1.0
    sphere: Callable | None = None
    bound: float | None = None

    def __post_init__(self):
        if not 0 < self.beta < self.dim:
            raise ValueError(f"beta must lie in (0, d) = (0, {self.dim}) for local integrability")
        if self.dim > 1 and self.sphere is not None and self.bound is None:
            raise ValueError("a sphere profile needs a declared bound")

    @property
    def sup(self) -> float:
        if self.dim == 1:
            return max(abs(self.p_plus), abs(self.p_minus))
        return 1.0 if self.sphere is None else float(self.bound)

    def on_sphere(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(-1, self.dim)
        if self.dim == 1:
            return np.where(u[:, 0] > 0, self.p_plus, self.p_minus)
        if self.sphere is None:
            return np.ones(len(u))
        return np.asarray(self.sphere(u), dtype=float)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            x = x.reshape(-1)
            r = np.abs(x)
            with np.errstate(divide="ignore"):
                return np.where(x > 0, self.p_plus, self.p_minus) * r ** (-self.beta)
        x = x.reshape(-1, self.dim)
        r = np.linalg.norm(x, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return r ** (-self.beta) * self.on_sphere(x / r[:, None])

    def local_mass(self) -> float:
        """``int_{|x| <= 1} |p|`` (finite since beta < d)."""
        if self.dim == 1:
            return (abs(self.p_plus) + abs(self.p_minus)) / (1.0 - self.beta)
        area = 2 * math.pi ** (self.dim / 2) / math.gamma(self.dim / 2)
        return self.sup * area / (self.dim - self.beta)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "dim": self.dim, "p_plus": self.p_plus, "p_minus": self.p_minus}


def self_similarity_index(alpha: float, beta: float, dim: int = 1) -> float:
    """``u = d/alpha - beta + d``."""
    return dim / alpha - beta + dim


def _quad(g, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, a, b, limit=500, epsabs=kw.pop("epsabs", EPSABS),
                                  epsrel=kw.pop("epsrel", EPSREL), **kw)
    return val


def _require_1d(*objs):
    for o in objs:
        if getattr(o, "dim", 1) != 1:
            raise NotImplementedError("fractional quadrature is implemented for d = 1")


def _support(f: Kernel):
    if f.support is not None:
        return float(f.support[0][0]), float(f.support[1][0])
    if f.decay is None:
        raise IntegrandError("unbounded kernel without a decay certificate")
    return -np.inf, np.inf


def _fx(f: Kernel):
    return lambda y: float(f.eval_coords(np.array([y]))[0])


def _singular_side(fy, x, end, sign, pts, beta, weight):
    """``int f(y) |y - x|^-beta dy`` from ``x`` towards ``end`` (``sign`` = +1 or -1)."""
    inner = sorted(p for p in pts if (p - x) * sign > 0 and (end - p) * sign > 0)
    stop = x + sign * max(1.0, 1e-6 * abs(x))
    if (end - stop) * sign < 0:
        stop = end
    if inner and (inner[0] - stop) * sign < 0:
        stop = inner[0]
    lo, hi = (x, stop) if sign > 0 else (stop, x)
    wvar = (-beta, 0.0) if sign > 0 else (0.0, -beta)
    total = 0.0
    if hi > lo:
        total += weight * _quad(fy, lo, hi, weight="alg", wvar=wvar)
    if stop != end:
        a, b = (stop, end) if sign > 0 else (end, stop)
        pieces = [p for p in inner if a < p < b]
        total += weight * _regular(lambda y: fy(y) * abs(y - x) ** (-beta), a, b, pieces)
    return total


def _regular(g, a, b, pts):
    edges = [a] + sorted(pts) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += _quad(g, lo, hi)
    return total


def convolve_profile(f: Kernel, profile: HomogeneousProfile, x) -> np.ndarray:
    """``(f * p_check)(x) = int f(y) p(y - x) dy`` by singularity-splitting quadrature."""
    _require_1d(f, profile)
    a, b = _support(f)
    fy = _fx(f)
    pts = [float(p) for p in f.breakpoints[0] if a < p < b]
    if not np.isfinite(a):
        # quad cannot see the bump of f from a remote, very long piece
        r = f.decay.radius if f.decay is not None else 1.0
        rings = r * 2.0 ** np.arange(-2, 7)
        pts = sorted(set(pts + [0.0] + list(rings) + list(-rings)))
    beta = profile.beta
    out = []
    for xv in np.atleast_1d(np.asarray(x, dtype=float)):
        total = 0.0
        if xv < b:   # y > x: p(y - x) = p_plus (y - x)^-beta
            if xv >= a:
                total += _singular_side(fy, xv, b, +1, pts, beta, profile.p_plus)
            else:
                total += profile.p_plus * _regular(lambda y: fy(y) * (y - xv) ** (-beta), a, b,
                                                   pts if np.isfinite(a) else pts + [xv + 1.0])
        if xv > a:   # y < x
            if xv <= b:
                total += _singular_side(fy, xv, a, -1, pts, beta, profile.p_minus)
            else:
                total += profile.p_minus * _regular(lambda y: fy(y) * (xv - y) ** (-beta), a, b,
                                                    pts if np.isfinite(b) else pts + [xv - 1.0])
        out.append(total)
    return np.array(out)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
GRADE_RATIO = 0.15
GRADE_LEVELS = 12


def _graded_nodes(u, v):
    """Gauss nodes on ``[u, v]`` geometrically refined towards both ends.

    The convolution behaves like ``|x - a|^(1 - beta)`` next to a jump of ``f``,
    so a graded mesh keeps a fixed rule accurate there.
    """
    m = 0.5 * (u + v)
    half = m - u
    ks = GRADE_RATIO ** np.arange(GRADE_LEVELS + 1)
    inner = np.concatenate([[0.0], ks[::-1]])          # 0, r^K, ..., r, 1
    cuts = np.concatenate([u + half * inner, (v - half * inner)[::-1][1:]])
    lo, hi = cuts[:-1], cuts[1:]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x = (mid[:, None] + rad[:, None] * _GL_X[None, :]).ravel()
    w = (rad[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _tail_nodes(c, A, side, rate):
    """Nodes for ``int`` over ``side * (x - c) > A`` of a function ``~|x - c|^-rate``.

    Substituting ``|x - c| = A t^-m`` with ``m = 1/(rate - 1)`` makes the leading
    term constant in ``t``.
    """
    m = 1.0 / (rate - 1.0)
    t, wt = _graded_nodes(0.0, 1.0)
    return c + side * A * t ** (-m), wt * A * m * t ** (-m - 1.0)


def _power_params(f: Kernel, profile: HomogeneousProfile, alpha: float):
    """``int |g|^alpha`` and ``int sign(g)|g|^alpha`` for ``g = f * p_check``."""
    _require_1d(f, profile)
    a, b = _support(f)
    if not np.isfinite(a):
        a, b = -1.0, 1.0
    rate = alpha * profile.beta
    if rate <= 1.0:
        raise IntegrandError("alpha * beta <= d: the convolution is not in L^alpha")
    span = max(b - a, 1.0)
    L, R, c = a - span, b + span, 0.5 * (a + b)
    pts = sorted(set([L, a, b, R] + [float(p) for p in f.breakpoints[0] if a < p < b]))
    xs, ws = zip(*[_graded_nodes(u, v) for u, v in zip(pts[:-1], pts[1:])],
                 _tail_nodes(c, c - L, -1, rate), _tail_nodes(c, R - c, +1, rate))
    x, w = np.concatenate(xs), np.concatenate(ws)
    g = convolve_profile(f, profile, x)
    pw = np.abs(g) ** alpha
    return float(np.sum(w * pw)), float(np.sum(w * np.sign(g) * pw))


def fractional_eval_params(f: Kernel, profile: HomogeneousProfile, params: StableParams):
    """``(sigma, nu)`` of ``W_{alpha,p}[f] = W_alpha[f * p_check]``."""
    alpha = params.alpha
    if not profile.dim / alpha < profile.beta < profile.dim:
        raise IntegrandError(f"beta = {profile.beta} outside (d/alpha, d)")
    mass, signed = _power_params(f, profile, alpha)
    if not math.isfinite(mass):
        raise QuadratureError("divergent convolution tail")
    if mass == 0.0:
        return 0.0, params.nu
    nu = 0.0 if alpha == 2.0 else float(np.clip(params.nu * signed / mass, -1.0, 1.0))
    return mass ** (1.0 / alpha), nu


def sample_fractional(f: Kernel, profile: HomogeneousProfile, params: StableParams, n: int,
                      seed: int) -> np.ndarray:
    """``n`` exact draws of the limit law of ``W_{alpha,p}[f]``."""
    sigma, nu = fractional_eval_params(f, profile, params)
    return sample_stable(StableParams(params.alpha, sigma, nu), n,
                         CounterStream(seed, "fractional-oracle"))


def covariance_kernel(x: float, y: float, profile: HomogeneousProfile) -> float:
    """``K(x, y) = int p(x - z) p(y - z) dz`` (needs ``d/2 < beta < d``)."""
    _require_1d(profile)
    beta = profile.beta
    if not 0.5 < beta < 1.0:
        raise IntegrandError("the covariance integral diverges unless d/2 < beta < d")
    if x == y:
        raise QuadratureError("K(x, x) is infinite")
    lo, hi = min(x, y), max(x, y)
    gap = hi - lo
    mid = 0.5 * (lo + hi)
    pp, pm = profile.p_plus, profile.p_minus

    def p(t):
        return (pp if t > 0 else pm) * abs(t) ** (-beta)

    def f(z):
        return p(x - z) * p(y - z)

    def smooth(t0, side):
        # f(z) |z - t0|^beta for z on one side of the singular point t0
        other = y if t0 == x else x
        c = pm if side > 0 else pp
        return lambda z: c * p(other - z)

    # algebraic weights carry |z - lo|^-beta and |z - hi|^-beta next to each singular point
    near = (_quad(smooth(lo, +1), lo, mid, weight="alg", wvar=(-beta, 0.0))
            + _quad(smooth(hi, -1), mid, hi, weight="alg", wvar=(0.0, -beta))
            + _quad(smooth(lo, -1), lo - gap, lo, weight="alg", wvar=(0.0, -beta))
            + _quad(smooth(hi, +1), hi, hi + gap, weight="alg", wvar=(-beta, 0.0)))
    far = _tail_shift(f, lo - gap, -1, 2.0 * beta) + _tail_shift(f, hi + gap, +1, 2.0 * beta)
    return near + far


def _tail_shift(f, start, side, rate):
    """``int`` of ``f`` from ``start`` to ``side * infinity`` (``|f| ~ |z|^-rate``, rate > 1)."""
    m = 1.0 / (rate - 1.0)

    def h(t):
        z = start + side * (t ** (-m) - 1.0)
        return f(z) * m * t ** (-m - 1.0)

    return _quad(h, 0.0, 1.0)


def regular_variation_check(filt, profile: HomogeneousProfile,
                            ts: Sequence[float] = (10.0, 1e2, 1e3, 1e4), n_dir: int = 64) -> dict:
    """``sup_{|x|=1} |t^beta c_[tx] - p(x)|`` along ``ts``; passes when it decreases."""
    d = profile.dim
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        th = 2 * np.pi * np.arange(n_dir) / n_dir
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        rng = np.random.default_rng(0)
        z = rng.standard_normal((n_dir * d, d))
        dirs = z / np.linalg.norm(z, axis=1, keepdims=True)
    target = profile(dirs)
    errs = []
    for t in ts:
        k = np.floor(t * dirs + 1e-9).astype(np.int64)
        c = filt.coefficient(k)
        errs.append(float(np.max(np.abs(t ** profile.beta * c - target))))
    tol = 1e-12 * max(1.0, profile.sup)
    nonincreasing = all(b <= a + tol for a, b in zip(errs[:-1], errs[1:]))
    passed = nonincreasing and (errs[-1] < errs[0] or errs[0] <= tol)
    return {"t": list(map(float, ts)), "sup_errors": errs, "beta": profile.beta, "pass": bool(passed)}


def renormalize(u: float, h: float, evaluator: Callable[[Kernel], object], f: Kernel):
    """``(T_h^(u) W)[f] = h^u W[f(h .)]``."""
    if not h > 0:
        raise ValueError("h must be positive")
    return h ** u * evaluator(f.dilate(h))


def lfsm_kernel(t: float, H: float, alpha: float) -> Kernel:
    """``(t - x)_+^(H - 1/alpha) - (-x)_+^(H - 1/alpha)`` (linear fractional stable motion)."""
    e = H - 1.0 / alpha
    if not 0 < H < 1 or e == 0:
        raise ValueError("need 0 < H < 1 and H != 1/alpha")
    return parse_kernel(f"pow(max({t!r}-x,0),{e!r}) - pow(max(-x,0),{e!r})", 1)
