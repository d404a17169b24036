"""Counter-based random streams.

Every random number is a pure function of ``(seed, stream, replica, key, draw)``,
so a lattice index queried twice (or from two threads, or in a different
order) always yields the same value. The mixing function is the SplitMix64
finalizer applied to xor-combined, individually mixed keys.
"""
from __future__ import annotations

import hashlib

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x ^ (x >> _S30)
        z = z * _M1
        z ^= z >> _S27
        z *= _M2
        z ^= z >> _S31
    return z


def _as_u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).astype(np.uint64)


def stream_id(name: str) -> int:
    """Stable 63-bit id for a named sub-stream."""
    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # top 53 bits, shifted by half a ulp: strictly inside (0, 1)
    return ((bits >> _S11).astype(np.float64) + 0.5) * _INV53


class CounterStream:
    """A keyed family of uniforms indexed by ``(replica, key, draw)``.

    Parameters
    ----------
    seed : int
        Master seed (mandatory; there is no wall-clock default).
    stream : str or int
        Sub-stream label, so that e.g. innovations and Poisson marks never
        share values.
    """

    def __init__(self, seed: int, stream: str | int = "default"):
        if seed is None:
            raise ValueError("seed is mandatory")
        self.seed = int(seed)
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        self.stream = stream
        sid = stream_id(stream) if isinstance(stream, str) else int(stream)
        base = mix64(np.array([self.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
        with np.errstate(over="ignore"):
            self._base = mix64(base ^ mix64(np.array([sid], dtype=np.uint64) + _GOLDEN))[0]

    def child(self, name: str) -> "CounterStream":
        label = f"{self.stream}/{name}"
        return CounterStream(self.seed, label)

    def _replica_hash(self, replicas) -> np.ndarray:
        r = _as_u64(np.atleast_1d(replicas))
        with np.errstate(over="ignore"):
            return mix64(self._base + (r + np.uint64(1)) * _GOLDEN)

    @staticmethod
    def key_hash(keys) -> np.ndarray:
        """Hash integer keys of shape ``(n,)`` or ``(n, d)`` to uint64."""
        keys = np.asarray(keys, dtype=np.int64)
        if keys.ndim == 1:
            keys = keys[:, None]
        h = np.full(keys.shape[0], 0x243F6A8885A308D3, dtype=np.uint64)
        with np.errstate(over="ignore"):
            for i in range(keys.shape[1]):
                h = mix64(h + keys[:, i].astype(np.uint64) * _GOLDEN + np.uint64(i + 1))
        return h

    def uniforms(self, replicas, keys, draw: int = 0) -> np.ndarray:
        """Uniforms on (0, 1) of shape ``(len(replicas), len(keys))``."""
        rh = self._replica_hash(replicas)
        kh = self.key_hash(keys)
        with np.errstate(over="ignore"):
            kh = mix64(kh + np.uint64(draw) * _M2)
            bits = mix64(rh[:, None] ^ kh[None, :])
        return _to_unit(bits)

    def uniforms_paired(self, replicas, keys, draw: int = 0) -> np.ndarray:
        """Uniforms for matched ``(replica_i, key_i)`` pairs, shape ``(n,)``."""
        rh = self._replica_hash(replicas)
        kh = self.key_hash(keys)
        with np.errstate(over="ignore"):
            kh = mix64(kh + np.uint64(draw) * _M2)
            bits = mix64(rh ^ kh)
        return _to_unit(bits)

    def generator(self, replica: int) -> np.random.Generator:
        """A conventional numpy generator for one replica (order-free)."""
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFF, self.seed >> 32,
                                     int(self._base & np.uint64(0xFFFFFFFF)), int(replica)])
        return np.random.default_rng(ss)
