"""Deterministic, portable random streams for instance generation.

The generator is SplitMix64 (Steele, Lea & Flood): output ``i`` of a stream
seeded with ``s`` is ``mix64(s + (i+1)*GAMMA)`` in wrapping 64-bit arithmetic,
a closed-form function of the index.  That makes streams reproducible across
platforms, numpy versions and vectorization strategies, which is what the
test suites rely on.  Uniforms take the top 53 bits; normal variates come
from a Box-Muller transform of uniform pairs; bounded integers floor a scaled
uniform.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(1 << 53)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Counter-based SplitMix64 stream with a draw position."""

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._pos = 0

    def raw(self, k: int) -> np.ndarray:
        """Next ``k`` raw 64-bit outputs."""
        idx = np.arange(self._pos + 1, self._pos + k + 1, dtype=np.uint64)
        self._pos += k
        with np.errstate(over="ignore"):
            return _mix64(self.seed + idx * _GAMMA)

    def uniforms(self, k: int) -> np.ndarray:
        """k uniforms in [0, 1)."""
        return (self.raw(k) >> np.uint64(11)).astype(np.float64) / _U53

    def normals(self, k: int) -> np.ndarray:
        """k standard normals via Box-Muller on uniform pairs."""
        npairs = (k + 1) // 2
        u1 = (self.raw(npairs) >> np.uint64(11)).astype(np.float64)
        u1 = (u1 + 1.0) / _U53  # (0, 1]: keeps log finite
        u2 = self.uniforms(npairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * npairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:k]

    def integers(self, lo: int, hi: int, k: int) -> np.ndarray:
        """k integers uniform on [lo, hi] inclusive, as float64."""
        span = hi - lo + 1
        return np.floor(self.uniforms(k) * span) + lo

    def signs(self, k: int) -> np.ndarray:
        """k values from {-1.0, +1.0}."""
        return np.where(self.uniforms(k) < 0.5, -1.0, 1.0)
