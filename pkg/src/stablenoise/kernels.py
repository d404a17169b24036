"""Integrands on R^d (or on a space embedded in R^D) with support and decay metadata."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

__all__ = ["Decay", "Kernel", "indicator_box", "gaussian_bump", "constant", "as_points"]


@dataclass(frozen=True)
class Decay:
    """Tail certificate: ``|f(x)| <= C |x|^-eta`` (power) or
    ``|f(x)| <= C exp(-rate |x|^power)`` (exp) whenever ``|x| >= radius``.
    """

    C: float
    eta: float = math.inf
    radius: float = 1.0
    kind: str = "power"
    rate: float = 0.0
    power: float = 1.0
    source: str = "declared"

    def bound(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "exp":
            return self.C * np.exp(-self.rate * r ** self.power)
        return self.C * r ** (-self.eta)

    @property
    def exponent(self) -> float:
        """Power-decay exponent implied by the certificate (inf for exp)."""
        return math.inf if self.kind == "exp" else self.eta

    def tail_mass(self, alpha: float, R: float, dim: int) -> float:
        """Upper bound on ``int_{|x| > R} |f|^alpha dx`` (needs ``R >= radius``)."""
        R = max(R, self.radius)
        sphere = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
        if self.kind == "exp":
            # int_R^inf C^a exp(-a rate r^k) r^(d-1) dr via a crude but valid bound
            from scipy import integrate

            a = alpha
            val, _ = integrate.quad(
                lambda r: self.C ** a * math.exp(-a * self.rate * r ** self.power) * r ** (dim - 1),
                R, np.inf)
            return sphere * val
        s = alpha * self.eta - dim
        if s <= 0:
            return math.inf
        return sphere * self.C ** alpha * R ** (-s) / s

    def radius_for(self, alpha: float, dim: int, budget: float) -> float:
        """Smallest (doubling search) radius whose certified tail mass is <= budget."""
        R = max(self.radius, 1.0)
        if self.tail_mass(alpha, R, dim) <= budget:
            # shrink towards the certificate radius
            while R / 2.0 >= self.radius and self.tail_mass(alpha, R / 2.0, dim) <= budget:
                R /= 2.0
            return R
        for _ in range(200):
            R *= 2.0
            if self.tail_mass(alpha, R, dim) <= budget:
                return R
        return math.inf


def as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[-1] != dim:
        raise ValueError(f"expected points with {dim} coordinates, got shape {x.shape}")
    return x


class Kernel:
    """An evaluable integrand ``f: R^d -> R``.

    ``func`` takes ``d`` coordinate arrays of a common shape and returns an
    array of that shape. ``support`` is an optional half-open box
    ``(lo, hi)`` outside of which ``f`` vanishes; ``breakpoints`` lists, per
    axis, coordinates where ``f`` may jump or kink (used to split quadrature
    cells).
    """

    def __init__(self, func: Callable, dim: int = 1, support=None, decay: Decay | None = None,
                 breakpoints: Sequence | None = None, continuous: bool = True,
                 expr: str | None = None, singular: Sequence | None = None):
        self.func = func
        self.dim = int(dim)
        if support is not None:
            lo, hi = support
            lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,)).copy()
            hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,)).copy()
            support = (lo, hi)
        self.support = support
        self.decay = decay
        if breakpoints is None:
            breakpoints = [()] * self.dim
        self.breakpoints = tuple(np.unique(np.asarray(b, dtype=float)) for b in breakpoints)
        self.continuous = continuous
        self.expr = expr
        # points (1-d) near which |f| may blow up
        self.singular = tuple(singular or ())

    # -- evaluation --------------------------------------------------------
    def eval_coords(self, *coords) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        coords = [np.broadcast_to(c, shape) for c in coords]
        out = np.asarray(self.func(*coords), dtype=float)
        out = np.broadcast_to(out, shape)
        if self.support is not None:
            lo, hi = self.support
            inside = np.ones(shape, dtype=bool)
            for i, c in enumerate(coords):
                inside &= (c >= lo[i]) & (c < hi[i])
            out = np.where(inside, out, 0.0)
        return np.array(out, dtype=float)

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x, self.dim)
        return self.eval_coords(*(pts[:, i] for i in range(self.dim)))

    # -- metadata ----------------------------------------------------------
    @property
    def bounded_support(self) -> bool:
        return self.support is not None

    def effective_box(self, alpha: float, budget: float = 1e-4):
        """Box outside which the certified ``|f|^alpha`` mass is <= budget.

        Returns ``(lo, hi, tail)`` or raises ``ValueError`` without a
        certificate for an unbounded support.
        """
        if self.support is not None:
            lo, hi = self.support
            return lo.copy(), hi.copy(), 0.0
        if self.decay is None:
            raise ValueError("unbounded support without a decay certificate")
        R = self.decay.radius_for(alpha, self.dim, budget)
        if not math.isfinite(R):
            raise ValueError("decay certificate too weak for a finite truncation window")
        tail = self.decay.tail_mass(alpha, R, self.dim)
        return -np.full(self.dim, R), np.full(self.dim, R), tail

    def __repr__(self):
        label = self.expr or getattr(self.func, "__name__", "func")
        return f"Kernel({label!r}, dim={self.dim})"

    # -- algebra -----------------------------------------------------------
    def _combine(self, other: "Kernel", op, expr) -> "Kernel":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        if self.support is not None and other.support is not None:
            support = (np.minimum(self.support[0], other.support[0]),
                       np.maximum(self.support[1], other.support[1]))
        else:
            support = None
        decay = _weaker_decay(self, other)
        bps = [np.concatenate([a, b]) for a, b in zip(self.breakpoints, other.breakpoints)]
        if self.support is not None:
            bps = [np.concatenate([b, [lo, hi]]) for b, lo, hi in zip(bps, *self.support)]
        if other.support is not None:
            bps = [np.concatenate([b, [lo, hi]]) for b, lo, hi in zip(bps, *other.support)]
        f, g = self, other
        return Kernel(lambda *c: op(f.eval_coords(*c), g.eval_coords(*c)), self.dim, support,
                      decay, bps, self.continuous and other.continuous, expr,
                      tuple(self.singular) + tuple(other.singular))

    def __add__(self, other):
        if np.isscalar(other):
            return self._combine(constant(other, self.dim), np.add, f"({self.expr})+{other}")
        return self._combine(other, np.add, f"({self.expr})+({other.expr})")

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self._combine(other, np.subtract, f"({self.expr})-({other.expr})")

    def __mul__(self, c):
        if not np.isscalar(c):
            return self._combine(c, np.multiply, f"({self.expr})*({c.expr})")
        c = float(c)
        f = self
        decay = None if self.decay is None else replace(self.decay, C=abs(c) * self.decay.C)
        return Kernel(lambda *x: c * f.eval_coords(*x), self.dim, self.support, decay,
                      self.breakpoints, self.continuous, f"{c}*({self.expr})", self.singular)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def dilate(self, c: float) -> "Kernel":
        """``x -> f(c x)``."""
        c = float(c)
        if c <= 0:
            raise ValueError("dilation factor must be positive")
        f = self
        support = None if self.support is None else (self.support[0] / c, self.support[1] / c)
        decay = None
        if self.decay is not None:
            d = self.decay
            if d.kind == "exp":
                decay = replace(d, radius=d.radius / c, rate=d.rate * c ** d.power)
            else:
                decay = replace(d, radius=d.radius / c, C=d.C * c ** (-d.eta))
        return Kernel(lambda *x: f.eval_coords(*(xi * c for xi in x)), self.dim, support, decay,
                      [b / c for b in self.breakpoints], self.continuous,
                      f"({self.expr})[x*{c}]", tuple(s / c for s in self.singular))

    def shift(self, tau) -> "Kernel":
        """``x -> f(x - tau)``."""
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (self.dim,)).copy()
        f = self
        support = None if self.support is None else (self.support[0] + tau, self.support[1] + tau)
        decay = None
        if self.decay is not None:
            # |x - tau| >= |x| - |tau| >= |x| / 2 once |x| >= 2 max(radius, |tau|)
            d = self.decay
            nt = float(np.linalg.norm(tau))
            rad = 2.0 * max(d.radius, nt)
            if d.kind == "exp":
                decay = replace(d, radius=rad, rate=d.rate * 0.5 ** d.power)
            else:
                decay = replace(d, radius=rad, C=d.C * 2.0 ** d.eta)
        return Kernel(lambda *x: f.eval_coords(*(xi - t for xi, t in zip(x, tau))), self.dim,
                      support, decay, [b + t for b, t in zip(self.breakpoints, tau)],
                      self.continuous, f"({self.expr})[x-{tau.tolist()}]",
                      tuple(s + tau[0] for s in self.singular))

    def restrict(self, lo, hi) -> "Kernel":
        """``f * 1_[lo, hi)``."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,))
        if self.support is not None:
            lo = np.maximum(lo, self.support[0])
            hi = np.minimum(hi, self.support[1])
        bps = [np.concatenate([b, [a, c]]) for b, a, c in zip(self.breakpoints, lo, hi)]
        return Kernel(self.func, self.dim, (lo, hi), None, bps, False,
                      f"({self.expr})*1[{lo.tolist()},{hi.tolist()})", self.singular)


def _weaker_decay(f: Kernel, g: Kernel) -> Decay | None:
    if f.support is not None and g.support is not None:
        return None
    df = f.decay if f.support is None else None
    dg = g.decay if g.support is None else None
    if f.support is None and df is None or g.support is None and dg is None:
        return None
    certs = [d for d in (df, dg) if d is not None]
    radii = [d.radius for d in certs]
    if f.support is not None:
        radii.append(float(np.max(np.abs(np.concatenate(f.support)))) * math.sqrt(f.dim))
    if g.support is not None:
        radii.append(float(np.max(np.abs(np.concatenate(g.support)))) * math.sqrt(g.dim))
    radius = max(radii)
    if len(certs) == 1:
        return replace(certs[0], radius=max(radius, certs[0].radius))
    if all(d.kind == "exp" for d in certs):
        rate = min(d.rate for d in certs)
        power = min(d.power for d in certs)
        # exp(-r x^k) <= exp(-r x^k') for k >= k' once x >= 1
        return Decay(C=sum(d.C for d in certs), kind="exp", rate=rate, power=power,
                     radius=max(radius, 1.0), source="inferred")
    eta = min(d.exponent for d in certs)
    C = 0.0
    for d in certs:
        if d.kind == "exp":
            # C e^{-r x^k} <= C' x^-eta with C' = C sup_x x^eta e^{-r x^k}
            xm = (eta / (d.rate * d.power)) ** (1.0 / d.power)
            C += d.C * xm ** eta * math.exp(-d.rate * xm ** d.power)
        else:
            C += d.C * radius ** (d.eta - eta) if d.eta > eta else d.C
    return Decay(C=C, eta=eta, radius=radius, source="inferred")


# -- convenience constructors ---------------------------------------------

def constant(c: float, dim: int = 1) -> Kernel:
    c = float(c)
    if c == 0.0:
        # zero has empty support; a degenerate box keeps every window finite
        return Kernel(lambda *x: np.zeros(np.shape(x[0])), dim,
                      (np.zeros(dim), np.full(dim, 1e-300)), None, None, True, "0.0")
    return Kernel(lambda *x: np.full(np.shape(x[0]), c), dim, None,
                  Decay(C=abs(c), eta=0.0, source="inferred"), None, True, repr(c))


def indicator_box(lo, hi, dim: int | None = None) -> Kernel:
    """Indicator of the half-open box ``[lo, hi)``."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    dim = dim or max(lo.size, hi.size)
    lo = np.broadcast_to(lo, (dim,))
    hi = np.broadcast_to(hi, (dim,))
    return Kernel(lambda *x: np.ones(np.shape(x[0])), dim, (lo, hi), None,
                  [[a, b] for a, b in zip(lo, hi)], False,
                  f"indicator[{lo.tolist()},{hi.tolist()})")


def gaussian_bump(scale: float = 1.0, dim: int = 1, center=0.0, amplitude: float = 1.0) -> Kernel:
    """``amplitude * exp(-|x - center|^2 / scale^2)``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (dim,)).copy()

    def f(*x):
        r2 = sum((xi - c) ** 2 for xi, c in zip(x, center))
        return amplitude * np.exp(-r2 / scale ** 2)

    k = Kernel(f, dim, None, Decay(C=abs(amplitude), kind="exp", rate=1.0 / scale ** 2,
                                    power=2.0, radius=0.0, source="declared"),
               None, True, f"gauss(scale={scale})")
    return k if not np.any(center) else Kernel(f, dim, None, k.shift(center).decay, None, True,
                                               f"gauss(scale={scale},center={center.tolist()})")
