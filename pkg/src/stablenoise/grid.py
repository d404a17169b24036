"""Lattice discretization operators.

Cells are ``h (k + [0,1)^d)`` for ``k`` in a finite box of ``Z^d``.

* ``psi_h``: cell means, ``(psi_h f)_k = h^-d int_{h(k+I^d)} f``;
* ``phi_h``: piecewise-constant function ``x -> u_[x/h]``;
* ``tilde_psi_h = phi_h o psi_h``;
* ``tilde_psi_h_c``: the filtered projection ``(ghat/g) phi_h((psi_h f) * c_check)``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, signal

from .errors import IntegrandError, QuadratureError, TruncationError
from .kernels import Kernel

__all__ = [
    "GridSpec", "CellArray", "CellKernel", "IntegrandCheck",
    "cell_integrals", "psi_h", "phi_h", "tilde_psi_h", "tilde_psi_h_c",
    "integrate_kernel", "lalpha_power", "lalpha_norm", "check_integrand",
]

DEFAULT_BUDGET = 1e-4


@lru_cache(maxsize=None)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


# -- lattice windows ---------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """A span ``h`` and the box ``lo <= k < lo + shape`` of active cells."""

    h: float
    lo: tuple
    shape: tuple

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("span h must be positive")
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.lo) != len(self.shape) or any(n < 0 for n in self.shape):
            raise ValueError("malformed grid window")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def gamma(self, sigma: float, alpha: float) -> float:
        """Density normalisation ``sigma^-1 h^((1/alpha - 1) d)``."""
        return self.h ** ((1.0 / alpha - 1.0) * self.dim) / sigma

    def gamma_dirac(self, sigma: float, alpha: float) -> float:
        """Point-mass normalisation ``sigma^-1 h^(d/alpha)``."""
        return self.h ** (self.dim / alpha) / sigma

    def keys(self) -> np.ndarray:
        """Lattice labels of all cells, C order, shape ``(size, dim)``."""
        axes = [np.arange(l, l + n, dtype=np.int64) for l, n in zip(self.lo, self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def edges(self, axis: int) -> np.ndarray:
        return self.h * np.arange(self.lo[axis], self.lo[axis] + self.shape[axis] + 1, dtype=float)

    def centers(self, axis: int) -> np.ndarray:
        return self.h * (np.arange(self.lo[axis], self.lo[axis] + self.shape[axis]) + 0.5)

    def with_span(self, h: float) -> "GridSpec":
        """Same lattice labels, different span."""
        return GridSpec(h, self.lo, self.shape)

    def union(self, other: "GridSpec") -> "GridSpec":
        if other.h != self.h or other.dim != self.dim:
            raise ValueError("grids differ in span or dimension")
        lo = [min(a, b) for a, b in zip(self.lo, other.lo)]
        hi = [max(a + n, b + m) for a, n, b, m in zip(self.lo, self.shape, other.lo, other.shape)]
        return GridSpec(self.h, lo, [b - a for a, b in zip(lo, hi)])

    @classmethod
    def from_box(cls, h: float, lo, hi) -> "GridSpec":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        klo = np.floor(lo / h + 1e-12).astype(np.int64)
        khi = np.ceil(hi / h - 1e-12).astype(np.int64)
        khi = np.maximum(khi, klo + 1)
        return cls(h, tuple(klo), tuple(khi - klo))

    @classmethod
    def covering(cls, f: Kernel, h: float, alpha: float, budget: float = DEFAULT_BUDGET):
        """Window covering ``f`` up to a certified ``|f|^alpha`` tail of at most ``budget``.

        Returns ``(grid, tail)``.
        """
        try:
            lo, hi, tail = f.effective_box(alpha, budget)
        except ValueError as exc:
            raise TruncationError(str(exc)) from None
        return cls.from_box(h, lo, hi), tail

    def to_dict(self) -> dict:
        return {"h": self.h, "lo": list(self.lo), "shape": list(self.shape)}


# -- cell arrays --------------------------------------------------------------

@dataclass(frozen=True)
class CellArray:
    """Values ``u_k`` on a lattice window (read-only)."""

    values: np.ndarray
    h: float
    lo: tuple

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lo", tuple(int(x) for x in self.lo))
        if v.ndim != len(self.lo):
            raise ValueError("values rank must match the lattice dimension")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.h, self.lo, self.values.shape)

    def lp_norm(self, p: float) -> float:
        """``(sum |u_k|^p)^(1/p)``."""
        return float(np.sum(np.abs(self.values) ** p) ** (1.0 / p))

    def embed(self, grid: GridSpec) -> np.ndarray:
        """Values on another window with the same span (zero outside, cropped)."""
        out = np.zeros(grid.shape)
        src, dst = [], []
        for a, n, b, m in zip(self.lo, self.values.shape, grid.lo, grid.shape):
            lo_, hi_ = max(a, b), min(a + n, b + m)
            if hi_ <= lo_:
                return out
            src.append(slice(lo_ - a, hi_ - a))
            dst.append(slice(lo_ - b, hi_ - b))
        out[tuple(dst)] = self.values[tuple(src)]
        return out

    def to_csv(self, fh=None) -> str | None:
        """Write ``k_1..k_d, value`` rows; returns the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"k_{i + 1}" for i in range(self.dim)] + ["value"])
        keys = self.grid.keys()
        for key, val in zip(keys, self.values.ravel()):
            w.writerow([int(v) for v in key] + ["%.17g" % val])
        return buf.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text_or_fh, h: float) -> "CellArray":
        fh = io.StringIO(text_or_fh) if isinstance(text_or_fh, str) else text_or_fh
        rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        d = len(header) - 1
        if not body:
            return cls(np.zeros((0,) * d), h, (0,) * d)
        keys = np.array([[int(v) for v in r[:d]] for r in body], dtype=np.int64)
        vals = np.array([float(r[d]) for r in body])
        lo = keys.min(axis=0)
        shape = keys.max(axis=0) - lo + 1
        out = np.zeros(shape)
        out[tuple((keys - lo).T)] = vals
        return cls(out, h, tuple(lo))


class CellKernel(Kernel):
    """The piecewise-constant function ``x -> u_[x/h]`` (``phi_h u``)."""

    def __init__(self, cells: CellArray):
        self.cells = cells
        h, lo, vals = cells.h, np.asarray(cells.lo), cells.values
        shape = np.asarray(vals.shape)

        def lookup(*x):
            idx = [np.floor(xi / h).astype(np.int64) - l for xi, l in zip(x, lo)]
            inside = np.ones(np.shape(x[0]), dtype=bool)
            for i, n in zip(idx, shape):
                inside &= (i >= 0) & (i < n)
            safe = [np.where(inside, i, 0) for i in idx]
            out = vals[tuple(safe)] if vals.size else np.zeros(np.shape(x[0]))
            return np.where(inside, out, 0.0)

        bps = [cells.grid.edges(i) for i in range(cells.dim)]
        super().__init__(lookup, cells.dim, (h * lo, h * (lo + shape)), None, bps, False,
                         f"phi_h[h={h}, shape={tuple(shape)}]")

    def lalpha_power(self, alpha: float) -> float:
        """Exact ``int |phi_h u|^alpha = h^d sum |u_k|^alpha``."""
        return self.cells.h ** self.dim * float(np.sum(np.abs(self.cells.values) ** alpha))


# -- quadrature -----------------------------------------------------------------

def _axis_pieces(edges: np.ndarray, bps: np.ndarray, split: int):
    """Sub-intervals of the cells delimited by ``edges``, split at ``bps``."""
    inner = bps[(bps > edges[0]) & (bps < edges[-1])]
    pts = np.unique(np.concatenate([edges, inner]))
    a, b = pts[:-1], pts[1:]
    keep = b - a > 1e-14 * max(1.0, float(np.max(np.abs(edges))))
    a, b = a[keep], b[keep]
    if split > 1:
        t = np.linspace(0.0, 1.0, split + 1)
        a2 = a[:, None] + (b - a)[:, None] * t[None, :-1]
        b2 = a[:, None] + (b - a)[:, None] * t[None, 1:]
        a, b = a2.ravel(), b2.ravel()
    cell = np.searchsorted(edges, 0.5 * (a + b), side="right") - 1
    starts = np.searchsorted(cell, np.arange(len(edges) - 1))
    return a, b, starts


def cell_integrals(f: Kernel, grid: GridSpec, order: int = 5, transform=None,
                   split: int = 1, max_points: int = 4_000_000) -> np.ndarray:
    """``int_{h(k+I^d)} transform(f)`` for every cell of ``grid`` (tensor Gauss-Legendre)."""
    if f.dim != grid.dim:
        raise ValueError("kernel and grid dimensions differ")
    t, w = _gauss(order)
    nodes, weights, starts = [], [], []
    for i in range(grid.dim):
        bps = np.asarray(f.breakpoints[i]) if i < len(f.breakpoints) else np.empty(0)
        if f.support is not None:
            bps = np.concatenate([bps, [f.support[0][i], f.support[1][i]]])
        a, b, st = _axis_pieces(grid.edges(i), bps, split)
        half = 0.5 * (b - a)
        nodes.append((0.5 * (a + b))[:, None] + half[:, None] * t[None, :])
        weights.append(half[:, None] * w[None, :])
        starts.append(st)

    def evaluate(sl):
        coords = [nodes[0][sl].ravel()] + [n.ravel() for n in nodes[1:]]
        mesh = np.meshgrid(*coords, indexing="ij")
        vals = f.eval_coords(*mesh)
        if transform is not None:
            vals = transform(vals)
        shape = []
        for i, n in enumerate(nodes):
            s = (nodes[0][sl].shape[0] if i == 0 else n.shape[0])
            shape += [s, order]
        vals = vals.reshape(shape)
        for i in range(grid.dim):
            wsh = [1] * (2 * grid.dim)
            ws = weights[0][sl] if i == 0 else weights[i]
            wsh[2 * i], wsh[2 * i + 1] = ws.shape
            vals = vals * ws.reshape(wsh)
        return vals.sum(axis=tuple(range(1, 2 * grid.dim, 2)))

    rest = int(np.prod([n.size for n in nodes[1:]])) if grid.dim > 1 else 1
    chunk = max(1, max_points // (order * rest))
    S0 = nodes[0].shape[0]
    parts = [evaluate(slice(s, min(S0, s + chunk))) for s in range(0, S0, chunk)]
    sub = np.concatenate(parts, axis=0) if parts else np.zeros([0] + [n.shape[0] for n in nodes[1:]])
    for i in range(grid.dim):
        if grid.shape[i] == 0:
            return np.zeros(grid.shape)
        sub = np.add.reduceat(sub, starts[i], axis=i)
    return sub


def psi_h(f: Kernel, grid: GridSpec, order: int = 5) -> CellArray:
    """Cell means of ``f`` over the window of ``grid``."""
    if isinstance(f, CellKernel):
        exact = _coarsen(f.cells, grid)
        if exact is not None:
            return exact
    vals = cell_integrals(f, grid, order) / grid.h ** grid.dim
    if not np.all(np.isfinite(vals)):
        bad = grid.keys()[np.flatnonzero(~np.isfinite(vals.ravel()))[0]]
        raise QuadratureError(f"cell quadrature failed on cell {bad.tolist()}")
    return CellArray(vals, grid.h, grid.lo)


def _coarsen(cells: CellArray, grid: GridSpec) -> CellArray | None:
    """Exact cell means of a piecewise-constant function on a grid ``K`` times coarser."""
    ratio = grid.h / cells.h
    K = int(round(ratio))
    if K < 1 or abs(ratio - K) > 1e-9 * ratio:
        return None
    if K == 1:
        return CellArray(cells.embed(grid), grid.h, grid.lo)
    fine = GridSpec(cells.h, [K * l for l in grid.lo], [K * n for n in grid.shape])
    vals = cells.embed(fine)
    shape = []
    for n in grid.shape:
        shape += [n, K]
    vals = vals.reshape(shape).mean(axis=tuple(range(1, 2 * grid.dim, 2)))
    return CellArray(vals, grid.h, grid.lo)


def phi_h(u: CellArray) -> CellKernel:
    return CellKernel(u)


def tilde_psi_h(f: Kernel, grid: GridSpec, order: int = 5) -> CellKernel:
    """Projection onto functions constant on the cells of ``grid``."""
    return phi_h(psi_h(f, grid, order))


def tilde_psi_h_c(f: Kernel, filt, grid: GridSpec, regime: str | None = None,
                  order: int = 5) -> CellKernel:
    """``(ghat_h / g_h) phi_h((psi_h f) * c_check)`` over the finite filter window."""
    regime = regime or filt.regime
    if regime != filt.regime:
        raise ValueError(f"filter declared {filt.regime!r}, requested regime {regime!r}")
    if filt.dim != grid.dim:
        raise ValueError("filter and grid dimensions differ")
    a = psi_h(f, grid, order).values
    out, lo = filtered_cells(a, grid.lo, filt)
    factor = filt.gain_ratio(grid.h)
    return phi_h(CellArray(factor * out, grid.h, lo))


def filtered_cells(a: np.ndarray, lo, filt):
    """``(a * c_check)_l = sum_k a_k c_{k-l}`` and the label of its first entry."""
    c = filt.coefficients
    c_check = c[(slice(None, None, -1),) * c.ndim]
    method = "direct" if a.size * c.size <= 4_000_000 else "fft"
    out = signal.convolve(a, c_check, mode="full", method=method)
    lo_out = tuple(int(k) - (int(j) + n - 1) for k, j, n in zip(lo, filt.lo, c.shape))
    return out, lo_out


# -- integrals of kernels ---------------------------------------------------------

def _quad(g, a, b, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, a, b, points=points, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val, err


def _integrate_1d(g, lo: float, hi: float, pts, singular=()):
    """``int_lo^hi g`` (``g`` vectorised); ``lo``/``hi`` may be infinite."""
    pts = np.unique(np.asarray([p for p in pts if lo < p < hi], dtype=float))
    edges = np.concatenate([[lo], pts, [hi]])
    total = 0.0
    sing = np.asarray(singular, dtype=float)
    finite_pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        near = sing.size and np.any((sing >= a - 1e-12) & (sing <= b + 1e-12))
        if not (np.isfinite(a) and np.isfinite(b)) or near or len(edges) <= 202:
            v, _ = _quad(lambda x: float(g(np.array([x]))[0]), a, b)
            total += v
        else:
            finite_pieces.append((a, b))
    if finite_pieces:
        ab = np.array(finite_pieces)
        t, w = _gauss(20)
        # split each piece in four for a little extra robustness
        q = np.linspace(0.0, 1.0, 5)
        a = (ab[:, :1] + (ab[:, 1:] - ab[:, :1]) * q[None, :-1]).ravel()
        b = (ab[:, :1] + (ab[:, 1:] - ab[:, :1]) * q[None, 1:]).ravel()
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[:, None] + half[:, None] * t[None, :]
        total += float(np.sum(g(x.ravel()).reshape(x.shape) * (half[:, None] * w[None, :])))
    return total


def integrate_kernel(f: Kernel, transform, alpha: float = 1.0, budget: float = DEFAULT_BUDGET,
                     box=None, resolution: int | None = None) -> tuple[float, float]:
    """``int transform(f(x)) dx`` over ``R^d`` (or ``box``); returns ``(value, tail_bound)``.

    In one dimension adaptive quadrature runs on the whole line (no
    truncation). In higher dimensions a tensor Gauss rule is applied on the
    certified effective box and the certified tail is reported.
    """
    if f.dim == 1:
        if box is not None:
            lo, hi = float(box[0][0]), float(box[1][0])
        elif f.support is not None:
            lo, hi = float(f.support[0][0]), float(f.support[1][0])
        else:
            lo, hi = -np.inf, np.inf
        pts = list(f.breakpoints[0]) + list(f.singular)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            # anchor the infinite pieces on a finite core
            core = [p for p in pts if np.isfinite(p)] or [0.0]
            pts = pts + [min(core) - 1.0, max(core) + 1.0]
        return _integrate_1d(lambda x: transform(f.eval_coords(x)), lo, hi, pts, f.singular), 0.0
    if box is not None:
        lo, hi, tail = np.asarray(box[0], float), np.asarray(box[1], float), 0.0
    else:
        try:
            lo, hi, tail = f.effective_box(alpha, budget)
        except ValueError as exc:
            raise TruncationError(str(exc)) from None
    n = resolution or (400 if f.dim == 2 else 60)
    h = float(np.max(hi - lo)) / n
    grid = GridSpec.from_box(h, lo, hi)
    restricted = f.restrict(lo, hi) if box is not None else f
    return float(np.sum(cell_integrals(restricted, grid, order=6, transform=transform))), tail


def lalpha_power(f: Kernel, alpha: float, **kw) -> float:
    """``int |f|^alpha`` (exact for piecewise-constant kernels)."""
    if isinstance(f, CellKernel):
        return f.lalpha_power(alpha)
    val, _ = integrate_kernel(f, lambda v: np.abs(v) ** alpha, alpha, **kw)
    return val


def lalpha_norm(f: Kernel, alpha: float, **kw) -> float:
    return lalpha_power(f, alpha, **kw) ** (1.0 / alpha)


# -- admissibility -----------------------------------------------------------------

@dataclass
class IntegrandCheck:
    status: str
    reason: str
    details: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.status != "rejected"

    def require(self) -> "IntegrandCheck":
        if not self.accepted:
            raise IntegrandError(self.reason)
        return self


def _directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    eye = np.eye(dim)
    diag = np.ones((1, dim)) / math.sqrt(dim)
    return np.concatenate([eye, -eye, diag, -diag])


def _local_exponent(f: Kernel, x0: float, side: float) -> float | None:
    """Blow-up exponent ``s`` with ``|f(x0 + side t)| ~ t^-s`` as ``t -> 0``, or None."""
    t = np.array([1e-9, 1e-12])
    v = np.abs(f.eval_coords(x0 + side * t))
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        return None
    s = -math.log(v[1] / v[0]) / math.log(1e-3)
    return s if s > 0.02 and v[1] > 1e3 else None


def check_integrand(f: Kernel, alpha: float, box=None, samples: int = 32) -> IntegrandCheck:
    """Classify ``f`` as ``in-L^alpha`` (alpha >= 1), ``in-D^alpha`` (alpha < 1) or ``rejected``.

    ``box`` restricts the domain (e.g. ``E = [0, 1]`` for shot noise).
    """
    d = f.dim
    accept = "in-D^alpha" if alpha < 1 else "in-L^alpha"
    details: dict = {"alpha": alpha, "dim": d}
    g = f if box is None else f.restrict(*box)
    if g.support is not None:
        lo, hi = g.support
    else:
        lo = -np.full(d, 10.0)
        hi = np.full(d, 10.0)
    # finiteness on a probe lattice
    m = 2001 if d == 1 else max(3, int(round(2e5 ** (1.0 / d))))
    axes = [np.linspace(a, b, m, endpoint=False) + (b - a) / (2 * m) for a, b in zip(lo, hi)]
    probe = g.eval_coords(*np.meshgrid(*axes, indexing="ij"))
    if not np.all(np.isfinite(probe)):
        return IntegrandCheck("rejected", "kernel takes non-finite values", details)
    # local singularities (one dimension)
    if d == 1:
        local_p = alpha if alpha >= 1 else 1.0
        cands = set(float(s) for s in g.singular)
        cands.update(float(b) for b in g.breakpoints[0][:200])
        cands.add(float(axes[0][int(np.argmax(np.abs(probe)))]))
        if g.support is not None:
            cands.update([float(lo[0]), float(hi[0])])
        worst = 0.0
        for x0 in cands:
            for side in (-1.0, 1.0):
                s = _local_exponent(g, x0, side)
                if s is not None:
                    worst = max(worst, s)
                    if s * local_p >= 1.0:
                        details["singularity"] = {"at": x0, "exponent": s}
                        return IntegrandCheck(
                            "rejected",
                            f"|f|^{local_p:g} is not integrable near x = {x0:g} "
                            f"(|f| ~ |x - x0|^-{s:.3g})", details)
        details["local_exponent"] = worst
    # tails
    if g.support is None:
        dirs = _directions(d)
        cert = g.decay
        if cert is not None:
            radii = np.logspace(math.log10(max(cert.radius, 1e-3)), math.log10(max(cert.radius, 1e-3)) + 6,
                                samples)
            pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
            vals = np.abs(g(pts)).reshape(samples, -1).max(axis=1)
            bound = cert.bound(radii)
            bad = np.flatnonzero(vals > bound * (1 + 1e-9) + 1e-300)
            if bad.size:
                r = radii[bad[0]]
                details["falsified_at"] = float(r)
                return IntegrandCheck("rejected", f"decay certificate falsified at |x| = {r:.4g}",
                                      details)
            eta = cert.exponent
            details["decay"] = {"kind": cert.kind, "eta": eta, "C": cert.C, "source": cert.source}
        else:
            if alpha < 1:
                return IntegrandCheck("rejected", "unbounded support without a decay certificate "
                                      f"(D^alpha needs eta > d/alpha = {d / alpha:g})", details)
            radii = np.logspace(1, 6, samples)
            pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
            vals = np.abs(g(pts)).reshape(samples, -1).max(axis=1)
            if np.all(vals[samples // 2:] == 0):
                eta = math.inf
            else:
                pos = vals > 0
                if pos.sum() < 4:
                    eta = math.inf
                else:
                    slope = np.polyfit(np.log(radii[pos][-16:]), np.log(vals[pos][-16:]), 1)[0]
                    eta = -slope
            details["decay"] = {"kind": "power", "eta": eta, "source": "empirical"}
        if alpha < 1 and not eta > d / alpha:
            return IntegrandCheck("rejected", f"decay exponent {eta:g} <= d/alpha = {d / alpha:g} "
                                  "(not in D^alpha)", details)
        if not alpha * eta > d:
            return IntegrandCheck("rejected", f"|f|^alpha decays like |x|^-{alpha * eta:g}, "
                                  f"not integrable at infinity in dimension {d}", details)
    try:
        mass = lalpha_power(g, alpha)
    except QuadratureError as exc:
        return IntegrandCheck("rejected", f"quadrature of |f|^alpha failed: {exc}", details)
    if not math.isfinite(mass):
        return IntegrandCheck("rejected", "int |f|^alpha diverges", details)
    details["lalpha_power"] = mass
    return IntegrandCheck(accept, "ok", details)
