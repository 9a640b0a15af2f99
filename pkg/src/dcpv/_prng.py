"""SplitMix64 stream with Box-Muller Gaussians.

The generator is counter based: the i-th output (1-based) of a stream seeded
with ``s`` is ``mix(s + i * GOLDEN)`` modulo 2**64, so blocks of outputs are
computed without a Python loop and stay bit-identical to the scalar
definition.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

_GOLDEN_U = np.uint64(GOLDEN)
_MIX1_U = np.uint64(MIX1)
_MIX2_U = np.uint64(MIX2)
_TWO_M53 = 2.0 ** -53


def mix64(z):
    """Scalar SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1_U
    z = (z ^ (z >> np.uint64(27))) * _MIX2_U
    return z ^ (z >> np.uint64(31))


def derive_seed(seed, *labels):
    """Derive an independent 64-bit seed from ``seed`` and string/int labels.

    Used to split one token into per-subject or per-restart streams.
    """
    out = seed & MASK64
    for label in labels:
        digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
        out = mix64(out ^ int.from_bytes(digest, "little"))
        out = mix64((out + GOLDEN) & MASK64)
    return out


class SplitMix64:
    """Deterministic 64-bit stream. Not thread safe; use one per consumer."""

    def __init__(self, seed):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._state = int(seed)

    @property
    def state(self):
        return self._state

    def next_u64(self):
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def u64(self, n):
        """Next ``n`` outputs as a uint64 array."""
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + steps * _GOLDEN_U
            out = _mix_array(z)
        self._state = (self._state + n * GOLDEN) & MASK64
        return out

    def uniform(self, n):
        """``n`` doubles in the open interval (0, 1)."""
        return words_to_uniform(self.u64(n))

    def normal(self, n):
        """``n`` standard normal variates via Box-Muller, consuming 2*ceil(n/2) words."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]


def words_to_uniform(words):
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def words_to_bounded(words, bound):
    """Map uint64 words to integers in [0, bound) by multiply-shift on the top 32 bits."""
    bound = np.asarray(bound, dtype=np.uint64)
    return (((words >> np.uint64(32)) * bound) >> np.uint64(32)).astype(np.int64)


def scalar_uniform(word):
    return ((word >> 11) + 0.5) * _TWO_M53


def scalar_bounded(word, bound):
    return ((word >> 32) * bound) >> 32
