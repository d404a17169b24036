"""Shot-noise simulators of symmetric stable Levy motion.

On the sphere ``S^q``: ``B(m) = sqrt(pi) W_alpha(H_O delta H_m)`` with
``H_m = {x : <x, m> >= 0}`` and the normalised uniform measure. On ``R^q``
(Levy-Chentsov): ``B(m) = W_alpha(V_m)`` with ``V_m = {(s, r) : 0 < r < <s, m>}``
over directions ``s`` in ``S^(q-1)`` and ``r > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .shotnoise import shot_noise_replicas
from .spaces import Sphere, SphereCylinder
from .stable import InnovationSampler

__all__ = [
    "HalfSpaceParam", "north_pole", "as_sphere_points", "geodesic_distance", "hemisphere_contains",
    "symdiff_indicator", "sphere_levy", "chentsov_indicator", "chentsov_levy", "SHELL_WIDTH",
]

SHELL_WIDTH = 1.0
UNIT_TOL = 1e-12


@dataclass(frozen=True)
class HalfSpaceParam:
    """The hyperplane ``<x, s> = r`` (unit ``s``, ``r > 0``)."""

    s: np.ndarray
    r: float

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if abs(np.linalg.norm(s) - 1.0) > UNIT_TOL:
            raise ValueError("s must be a unit vector")
        if not self.r > 0:
            raise ValueError("r must be positive")
        object.__setattr__(self, "s", s)


def north_pole(q: int) -> np.ndarray:
    e = np.zeros(q + 1)
    e[-1] = 1.0
    return e


def as_sphere_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > UNIT_TOL):
        raise ValueError("sphere points must have unit norm (within 1e-12)")
    return pts


def geodesic_distance(m, m2) -> float:
    return float(np.arccos(np.clip(np.dot(m, m2), -1.0, 1.0)))


def hemisphere_contains(m, x) -> np.ndarray | bool:
    """``x in H_m``, i.e. ``<x, m> >= 0`` (the boundary counts as inside)."""
    x = np.asarray(x, dtype=float)
    res = x @ np.asarray(m, dtype=float) >= 0.0
    return bool(res) if x.ndim == 1 else res


def symdiff_indicator(O, m, s) -> np.ndarray | float:
    """``1_{H_O delta H_m}(s)``."""
    a = hemisphere_contains(O, s)
    b = hemisphere_contains(m, s)
    return np.logical_xor(a, b).astype(float) if isinstance(a, np.ndarray) else float(a != b)


def _require_symmetric(G: InnovationSampler):
    if G.tail is not None:
        if G.tail.p != G.tail.q:
            raise ValueError("Levy motion needs symmetric marks (p = q)")
    elif G.params.nu != 0.0 and G.alpha != 2.0:
        raise ValueError("Levy motion needs symmetric marks (nu = 0)")


def sphere_levy(points, lam: float, G: InnovationSampler, seed: int, replicas=1, origin=None,
                threads: int = 1) -> np.ndarray:
    """``B_lambda(m)`` for every row ``m`` of ``points``, jointly from one cloud per replica.

    Returns shape ``(n_replicas, n_points)``.
    """
    _require_symmetric(G)
    pts = as_sphere_points(points)
    q = pts.shape[1] - 1
    O = north_pole(q) if origin is None else as_sphere_points(origin)[0]
    funcs = [lambda s, m=m: symdiff_indicator(O, m, s) for m in pts]
    return shot_noise_replicas(Sphere(q), lam, G, funcs, seed, replicas, threads,
                               scale=math.sqrt(math.pi), stream="levy-sphere")


def chentsov_indicator(m, h) -> np.ndarray | float:
    """``1_{V_m}``: ``0 < r < <s, m>``.

    ``h`` is a :class:`HalfSpaceParam` or an ``(n, q + 1)`` array of ``(s, r)`` rows.
    """
    m = np.asarray(m, dtype=float)
    if isinstance(h, HalfSpaceParam):
        return float(0.0 < h.r < float(h.s @ m))
    h = np.asarray(h, dtype=float)
    r = h[:, -1]
    return ((0.0 < r) & (r < h[:, :-1] @ m)).astype(float)


def chentsov_levy(points, lam: float, G: InnovationSampler, seed: int, replicas=1,
                  ds_mass: float = 1.0, threads: int = 1) -> np.ndarray:
    """``B_lambda(m)`` on ``R^q`` for every row ``m`` of ``points``; shape ``(n, n_points)``.

    The radial axis is generated in shells of width ``SHELL_WIDTH``, each with
    its own stream. Only shells below ``max |m|`` can meet some ``V_m``, and
    adding points never changes the cloud seen by the others.
    """
    _require_symmetric(G)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must lie in a bounded domain")
    q = pts.shape[1]
    R = float(np.max(np.linalg.norm(pts, axis=1)))
    reps = np.arange(int(replicas)) if np.isscalar(replicas) else np.asarray(replicas)
    out = np.zeros((len(reps), len(pts)))
    funcs = [lambda h, m=m: chentsov_indicator(m, h) for m in pts]
    for k in range(int(math.ceil(R / SHELL_WIDTH))):
        shell = SphereCylinder(q, SHELL_WIDTH, ds_mass, r0=k * SHELL_WIDTH)
        out += shot_noise_replicas(shell, lam, G, funcs, seed, reps, threads,
                                   stream=f"levy-chentsov/shell-{k}")
    return out
