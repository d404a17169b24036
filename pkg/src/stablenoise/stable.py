"""Stable laws: parameters, characteristic function, exact sampling, tails.

The law ``S_alpha(sigma, nu)`` is defined through its Fourier transform

    E[exp(i theta X)] = exp(-sigma^alpha |theta|^alpha (1 - i nu sign(theta) tan(pi alpha / 2)))

with ``nu = 0`` forced at ``alpha = 1`` and irrelevant at ``alpha = 2`` (where
the law is N(0, 2 sigma^2)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError
from .rng import CounterStream

__all__ = [
    "StableParams",
    "TailSpec",
    "InnovationSampler",
    "stable_char_fn",
    "stable_from_uniforms",
    "sample_stable",
    "sine_moment_integral",
    "one_minus_cos_integral",
    "cosine_moment_integral",
    "tail_to_params",
    "params_to_tail",
    "make_innovation_sampler",
    "integral_params",
    "stable_abs_moment",
]


@dataclass(frozen=True)
class StableParams:
    """Index ``alpha`` in (0, 2], scale ``sigma >= 0`` and skewness ``nu``."""

    alpha: float
    sigma: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        alpha, sigma, nu = float(self.alpha), float(self.sigma), float(self.nu)
        if not (0.0 < alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
        if not sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        if not abs(nu) <= 1.0:
            raise ValueError(f"nu must lie in [-1, 1], got {nu}")
        if alpha == 1.0 and nu != 0.0:
            raise ValueError("nu must be 0 when alpha = 1")
        if alpha == 2.0:
            nu = 0.0
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nu", nu)

    def scaled(self, c: float) -> "StableParams":
        """Law of ``c X``; a negative factor flips the skewness."""
        nu = self.nu if c >= 0 else -self.nu
        return StableParams(self.alpha, abs(c) * self.sigma, nu)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "sigma": self.sigma, "nu": self.nu}


def _tan_half(alpha: float) -> float:
    # tan(pi alpha / 2) vanishes at alpha = 2; avoid the 1e-16 residue
    return 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)


def stable_char_fn(theta, params: StableParams):
    """Characteristic function of ``S_alpha(sigma, nu)`` at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    a, s, nu = params.alpha, params.sigma, params.nu
    mod = (s * np.abs(theta)) ** a
    expo = -mod * (1.0 - 1j * nu * np.sign(theta) * _tan_half(a))
    out = np.exp(expo)
    return out[()] if out.ndim == 0 else out


def stable_from_uniforms(u1, u2, params: StableParams):
    """Chambers-Mallows-Stuck transform of two independent U(0,1) arrays."""
    a, nu = params.alpha, params.nu
    v = np.pi * (np.asarray(u1) - 0.5)
    w = -np.log(u2)
    if a == 2.0:
        x = 2.0 * np.sin(v) * np.sqrt(w)
    elif a == 1.0:
        x = np.tan(v)
    else:
        zeta = nu * _tan_half(a)
        b = math.atan(zeta) / a
        scale = (1.0 + zeta * zeta) ** (1.0 / (2.0 * a))
        av = a * (v + b)
        x = (scale * np.sin(av) / np.cos(v) ** (1.0 / a)
             * (np.cos(v - av) / w) ** ((1.0 - a) / a))
    return params.sigma * x


def _resolve_stream(rng, name="stable") -> CounterStream | np.random.Generator:
    if isinstance(rng, (CounterStream, np.random.Generator)):
        return rng
    return CounterStream(int(rng), name)


def sample_stable(params: StableParams, n: int, rng, replica: int = 0) -> np.ndarray:
    """``n`` i.i.d. draws from ``S_alpha(sigma, nu)``.

    ``rng`` is a :class:`CounterStream`, a numpy ``Generator`` or an integer
    seed. With a counter stream, draw ``j`` is keyed by ``(replica, j)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if params.sigma == 0.0:
        return np.zeros(n)
    rng = _resolve_stream(rng)
    if isinstance(rng, np.random.Generator):
        u1, u2 = rng.random(n), rng.random(n)
        u1 = np.where(u1 == 0.0, 0.5, u1)
        u2 = np.where(u2 == 0.0, 0.5, u2)
    else:
        keys = np.arange(n)
        u1 = rng.uniforms([replica], keys, draw=0)[0]
        u2 = rng.uniforms([replica], keys, draw=1)[0]
    return stable_from_uniforms(u1, u2, params)


# ---------------------------------------------------------------------------
# tail constants

def _check_alpha_open(alpha: float):
    if not (0.0 < alpha < 2.0):
        raise QuadratureError(f"moment integrals diverge for alpha = {alpha} outside (0, 2)")


def sine_moment_integral(alpha: float) -> float:
    """``int_0^inf t^-alpha sin t dt`` for ``0 < alpha < 2``."""
    _check_alpha_open(alpha)
    # near 0: sin(t)/t is smooth, the weight t^(1-alpha) is integrable
    head, _ = integrate.quad(lambda t: np.sinc(t / np.pi), 0.0, 1.0,
                             weight="alg", wvar=(1.0 - alpha, 0.0),
                             epsabs=1e-12, epsrel=1e-12)
    tail, _ = integrate.quad(lambda t: t ** -alpha, 1.0, np.inf,
                             weight="sin", wvar=1.0, epsabs=1e-11)
    return head + tail


def one_minus_cos_integral(alpha: float) -> float:
    """``int_0^inf t^-alpha (1 - cos t) dt``; finite only for ``1 < alpha < 3``."""
    if not (1.0 < alpha < 3.0):
        raise QuadratureError(f"int t^-alpha (1 - cos t) diverges for alpha = {alpha}")

    def smooth(t):
        # (1 - cos t) / t^2, computed stably for small t
        return 0.5 * np.sinc(t / (2.0 * np.pi)) ** 2

    head, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(2.0 - alpha, 0.0),
                             epsabs=1e-12, epsrel=1e-12)
    # analytic part of the tail plus an oscillatory correction
    cos_tail, _ = integrate.quad(lambda t: t ** -alpha, 1.0, np.inf,
                                 weight="cos", wvar=1.0, epsabs=1e-11)
    return head + 1.0 / (alpha - 1.0) - cos_tail


def cosine_moment_integral(alpha: float) -> float:
    """Regularized ``int_0^inf t^-alpha cos t dt`` on (0, 2), alpha != 1.

    Equal to the plain integral for ``alpha < 1`` and to
    ``-int t^-alpha (1 - cos t) dt`` for ``1 < alpha < 2`` (analytic
    continuation); this is the constant multiplying ``p - q`` in the
    skewness identity.
    """
    _check_alpha_open(alpha)
    if alpha == 1.0:
        raise QuadratureError("the skewness constant is undefined at alpha = 1")
    if alpha > 1.0:
        return -one_minus_cos_integral(alpha)
    head, _ = integrate.quad(lambda t: np.cos(t), 0.0, 1.0, weight="alg",
                             wvar=(-alpha, 0.0), epsabs=1e-12, epsrel=1e-12)
    tail, _ = integrate.quad(lambda t: t ** -alpha, 1.0, np.inf,
                             weight="cos", wvar=1.0, epsabs=1e-11)
    return head + tail


@dataclass(frozen=True)
class TailSpec:
    """Power tails ``P(xi > x) ~ p x^-alpha`` and ``P(xi < -x) ~ q x^-alpha``."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("tail index must lie in (0, 2)")
        if self.p < 0 or self.q < 0 or self.p + self.q <= 0:
            raise ValueError("need p, q >= 0 with p + q > 0")
        if self.alpha == 1.0 and self.p != self.q:
            raise ValueError("alpha = 1 requires p = q (zero skewness)")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p": self.p, "q": self.q}


def tail_to_params(spec: TailSpec) -> StableParams:
    """Stable law whose normal domain of attraction has the given tails.

    ``sigma^alpha = (p + q) int t^-alpha sin t dt`` and
    ``sigma^alpha nu tan(pi alpha/2) = (p - q) int t^-alpha cos t dt``
    (regularized), which gives ``nu = (p - q) / (p + q)``.
    """
    a, p, q = spec.alpha, spec.p, spec.q
    i_s = sine_moment_integral(a)
    sig_a = (p + q) * i_s
    if p == q:
        nu = 0.0
    else:
        nu = (p - q) * cosine_moment_integral(a) / (sig_a * _tan_half(a))
        nu = float(np.clip(nu, -1.0, 1.0))
    return StableParams(a, sig_a ** (1.0 / a), nu)


def params_to_tail(params: StableParams) -> TailSpec:
    """Inverse of :func:`tail_to_params`."""
    a = params.alpha
    total = params.sigma ** a / sine_moment_integral(a)
    if params.nu == 0.0:
        diff = 0.0
    else:
        diff = params.sigma ** a * params.nu * _tan_half(a) / cosine_moment_integral(a)
    return TailSpec(a, 0.5 * (total + diff), 0.5 * (total - diff))


# ---------------------------------------------------------------------------
# innovations

MODES = ("exact-stable", "pareto-tail", "gaussian")


@dataclass(frozen=True)
class InnovationSampler:
    """Lattice-indexed i.i.d. innovations in the normal domain of attraction
    of ``params``. Values depend only on ``(seed, stream, replica, key)``.
    """

    mode: str
    params: StableParams
    stream: CounterStream
    tail: TailSpec | None = None
    threshold: float = field(default=1.0)
    shift: float = field(default=0.0)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def transform(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Map two uniform arrays to innovations (``u2`` unused by some modes)."""
        if self.mode == "exact-stable":
            return stable_from_uniforms(u1, u2, self.params)
        if self.mode == "gaussian":
            r = np.sqrt(-2.0 * np.log(u1))
            return math.sqrt(2.0) * self.params.sigma * r * np.cos(2.0 * np.pi * u2)
        # two-sided Pareto with a uniform core on [-x0, x0]
        a, p, q = self.tail.alpha, self.tail.p, self.tail.q
        x0 = self.threshold
        lo = q * x0 ** -a
        hi = p * x0 ** -a
        core = 1.0 - lo - hi
        out = np.empty_like(u1)
        left = u1 <= lo
        right = u1 >= 1.0 - hi
        mid = ~(left | right)
        out[left] = -((q / u1[left]) ** (1.0 / a))
        out[right] = (p / (1.0 - u1[right])) ** (1.0 / a)
        if core > 0:
            out[mid] = x0 * (2.0 * (u1[mid] - lo) / core - 1.0)
        else:
            out[mid] = x0
        return out - self.shift

    def draw(self, replicas, keys) -> np.ndarray:
        """Innovations of shape ``(len(replicas), len(keys))``."""
        if self.params.sigma == 0.0 and self.mode != "pareto-tail":
            return np.zeros((len(np.atleast_1d(replicas)), len(np.asarray(keys))))
        u1 = self.stream.uniforms(replicas, keys, draw=0)
        u2 = self.stream.uniforms(replicas, keys, draw=1) if self.mode != "pareto-tail" else u1
        return self.transform(u1, u2)

    def draw_paired(self, replicas, keys) -> np.ndarray:
        """Innovations for matched ``(replica_i, key_i)`` pairs."""
        u1 = self.stream.uniforms_paired(replicas, keys, draw=0)
        u2 = self.stream.uniforms_paired(replicas, keys, draw=1) if self.mode != "pareto-tail" else u1
        return self.transform(u1, u2)

    def sample(self, n: int, replica: int = 0) -> np.ndarray:
        """``n`` draws keyed ``0..n-1`` for one replica."""
        return self.draw([replica], np.arange(n))[0]

    def with_stream(self, name: str) -> "InnovationSampler":
        return InnovationSampler(self.mode, self.params, self.stream.child(name),
                                 self.tail, self.threshold, self.shift)

    def describe(self) -> dict:
        out = {"mode": self.mode, **self.params.to_dict()}
        if self.tail is not None:
            out.update({"p": self.tail.p, "q": self.tail.q})
        return out


def make_innovation_sampler(mode: str, spec: Union[StableParams, TailSpec], seed: int,
                            stream: str = "innovations") -> InnovationSampler:
    """Build a counter-based innovation sampler.

    ``exact-stable`` and ``gaussian`` take :class:`StableParams`;
    ``pareto-tail`` takes a :class:`TailSpec` (or stable params, whose tail
    constants are recovered). Pareto innovations are centered when
    ``alpha > 1``.
    """
    cs = CounterStream(seed, stream)
    if mode == "gaussian":
        if not isinstance(spec, StableParams) or spec.alpha != 2.0:
            raise ValueError("gaussian innovations require alpha = 2")
        return InnovationSampler(mode, spec, cs)
    if mode == "exact-stable":
        if not isinstance(spec, StableParams):
            spec = tail_to_params(spec)
        return InnovationSampler(mode, spec, cs)
    if mode == "pareto-tail":
        tail = spec if isinstance(spec, TailSpec) else params_to_tail(spec)
        params = tail_to_params(tail)
        a = tail.alpha
        x0 = max(1.0, (tail.p + tail.q) ** (1.0 / a))
        shift = (tail.p - tail.q) * a / (a - 1.0) * x0 ** (1.0 - a) if a > 1.0 else 0.0
        return InnovationSampler(mode, params, cs, tail, x0, shift)
    raise ValueError(f"unknown innovation mode {mode!r}; expected one of {MODES}")


# ---------------------------------------------------------------------------
# stable integrals

def integral_params(f, space, nu: Union[float, Callable] = 0.0, alpha: float = 1.0):
    """``(sigma_f, nu_f)`` of ``W_alpha[f]`` for control measure ``space``.

    ``sigma_f^alpha = int |f|^alpha dm`` and
    ``sigma_f^alpha nu_f = int nu sign(f) |f|^alpha dm``.
    """
    if alpha == 1.0 and np.isscalar(nu) and nu != 0.0:
        raise ValueError("alpha = 1 requires nu = 0")
    mass, signed = space.power_integrals(f, alpha, nu)
    if not np.isfinite(mass):
        raise QuadratureError("int |f|^alpha dm diverges")
    if alpha == 2.0:
        return math.sqrt(mass), 0.0
    if mass <= 0.0:
        return 0.0, float(nu) if np.isscalar(nu) else 0.0
    return mass ** (1.0 / alpha), float(np.clip(signed / mass, -1.0, 1.0))


def stable_abs_moment(alpha: float, p: float, nu: float = 0.0) -> float:
    """``E|X|^p`` for ``X ~ S_alpha(1, nu)``, ``0 < p < alpha`` (any p at alpha = 2)."""
    if p <= 0:
        raise ValueError("p must be positive")
    if alpha == 2.0:
        # X ~ N(0, 2)
        return 2.0 ** p * special.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)
    if p >= alpha:
        raise ValueError(f"E|X|^p is infinite for p = {p} >= alpha = {alpha}")
    kappa = nu * _tan_half(alpha)
    r = p / alpha
    return (2.0 / math.pi * special.gamma(p) * math.sin(math.pi * p / 2.0)
            * special.gamma(1.0 - r) * (1.0 + kappa ** 2) ** (r / 2.0)
            * math.cos(r * math.atan(kappa)))


def abs_moment_quadrature(alpha: float, p: float, nu: float = 0.0) -> float:
    """``E|X|^p`` from ``(2/pi) Gamma(p+1) sin(pi p/2) int (1 - Re phi(t)) t^(-1-p) dt``."""
    if not (0 < p < min(alpha, 2.0)):
        raise ValueError("need 0 < p < min(alpha, 2)")
    params = StableParams(alpha, 1.0, nu)

    def g(t):
        return (1.0 - stable_char_fn(t, params).real) * t ** (-1.0 - p)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(g, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        tail, _ = integrate.quad(g, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2.0 / math.pi * special.gamma(p + 1.0) * math.sin(math.pi * p / 2.0) * (head + tail)
