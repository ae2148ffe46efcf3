"""Portable, seedable pseudo-random numbers for reproducible fixtures.

All stochastic artifacts in this package (signals, operators, noise,
power-iteration starts) are drawn from SplitMix64, a tiny counter-based
generator with a published reference implementation, so that every fixture
can be re-derived bit-for-bit from ``(seed, stream label)`` in any language.

Conventions, fixed once and for all:

* state update: ``s <- s + 0x9E3779B97F4A7C15`` (mod 2^64); output is the
  SplitMix64 finalizer of the updated state.
* ``uniform``: top 53 bits of the output, divided by 2^53, giving a float
  in [0, 1).
* ``normal``: Box-Muller on consecutive uniform pairs (u1, u2), with
  u1 shifted into (0, 1] to avoid log(0); outputs are interleaved
  ``(r*cos, r*sin, r*cos, ...)`` and truncated to the requested length.
* named streams: ``stream(seed, label)`` seeds a fresh generator with
  ``mix(seed XOR fnv1a64(label))`` so that per-artifact draws ("signal",
  "operator", "noise", ...) are independent of draw order elsewhere.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_U53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output function on a uint64 array (returns a copy)."""
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """Sequential SplitMix64 generator with vectorized block draws.

    Drawing ``n`` values advances the state exactly ``n`` times; a
    vectorized block draw is bit-identical to ``n`` single draws.
    """

    def __init__(self, seed: int):
        # State kept as a 1-element uint64 array: numpy array arithmetic
        # wraps mod 2^64 silently, scalar arithmetic would warn.
        self._state = np.array([int(seed) & _MASK64], dtype=np.uint64)

    def next_uint64(self, n: int) -> np.ndarray:
        counters = np.arange(1, n + 1, dtype=np.uint64)
        states = self._state + counters * _GAMMA
        self._state = self._state + np.uint64(n) * np.ones(1, np.uint64) * _GAMMA
        return _mix(states)

    def uniform(self, n: int) -> np.ndarray:
        """n floats uniform on [0, 1)."""
        bits = self.next_uint64(n) >> np.uint64(11)
        return bits.astype(np.float64) * _U53

    def normal(self, n: int) -> np.ndarray:
        """n standard normal floats via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = u[0::2] + _U53  # shift into (0, 1]
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """Row-major (rows, cols) standard normal matrix."""
        return self.normal(rows * cols).reshape(rows, cols)


def stream(seed: int, label: str) -> SplitMix64:
    """Independent named stream derived from (seed, label)."""
    h = _fnv1a64(label.encode("utf-8"))
    mixed = _mix(np.array([(int(seed) & _MASK64) ^ h], dtype=np.uint64))
    return SplitMix64(int(mixed[0]))
