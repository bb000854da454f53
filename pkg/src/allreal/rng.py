"""Counter-based random streams (Philox4x32-10).

Every random number is a pure function of ``(key, counter)``, so the draws
belonging to trial ``t`` never depend on which worker evaluated it or in
which order. Counters are laid out as ``(slot, factor, trial_lo, trial_hi)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def philox4x32(counter, key: tuple[int, int]) -> tuple[np.ndarray, ...]:
    """Apply Philox4x32-10 to broadcastable counter words.

    ``counter`` is a sequence of four integer arrays (or scalars); ``key`` is a
    pair of 32-bit integers. Returns four uint64 arrays holding 32-bit values.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter))
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(_ROUNDS):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ np.uint64(k0), lo1, hi0 ^ c3 ^ np.uint64(k1), lo0
        if r < _ROUNDS - 1:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def _philox_unit_pairs(c0, c1, c2, c3, k0, k1, out_u, out_v):
    m32 = uint64(0xFFFFFFFF)
    for i in range(c0.shape[0]):
        x0, x1, x2, x3 = c0[i] & m32, c1[i] & m32, c2[i] & m32, c3[i] & m32
        a, b = uint64(k0), uint64(k1)
        for r in range(10):
            p0 = uint64(0xD2511F53) * x0
            p1 = uint64(0xCD9E8D57) * x2
            x0, x1, x2, x3 = (p1 >> uint64(32)) ^ x1 ^ a, p1 & m32, (p0 >> uint64(32)) ^ x3 ^ b, p0 & m32
            a = (a + uint64(0x9E3779B9)) & m32
            b = (b + uint64(0xBB67AE85)) & m32
        out_u[i] = float(((x0 << uint64(32)) | x1) >> uint64(11)) * (1.0 / 9007199254740992.0)
        out_v[i] = float(((x2 << uint64(32)) | x3) >> uint64(11)) * (1.0 / 9007199254740992.0)


def splitmix64(x: int) -> int:
    """One SplitMix64 step; used to derive keys, never to generate draws."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def derive_key(seed: int, *labels: int) -> int:
    """Mix a 64-bit seed with integer labels into an independent 64-bit key."""
    key = splitmix64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    for label in labels:
        key = splitmix64(key ^ (int(label) & 0xFFFFFFFFFFFFFFFF))
    return key


def _to_unit(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    # 53 random bits -> float64 in [0, 1)
    bits = ((hi << _SHIFT32) | lo) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


def uniforms_reference(key: int, trials, factor, slot) -> tuple[np.ndarray, np.ndarray]:
    """Pure-numpy twin of :func:`uniforms`."""
    trials = np.asarray(trials, dtype=np.uint64)
    c0, c1, c2, c3 = philox4x32(
        (slot, factor, trials & _MASK32, trials >> _SHIFT32),
        (key & 0xFFFFFFFF, key >> 32),
    )
    return _to_unit(c0, c1), _to_unit(c2, c3)


def uniforms(key: int, trials, factor, slot) -> tuple[np.ndarray, np.ndarray]:
    """Two independent U[0,1) arrays for each broadcast (trial, factor, slot)."""
    trials = np.asarray(trials, dtype=np.uint64)
    words = np.broadcast_arrays(
        np.asarray(slot, dtype=np.uint64),
        np.asarray(factor, dtype=np.uint64),
        trials & _MASK32,
        trials >> _SHIFT32,
    )
    shape = words[0].shape
    flat = [np.ascontiguousarray(w).reshape(-1) for w in words]
    u = np.empty(flat[0].shape[0])
    v = np.empty_like(u)
    _philox_unit_pairs(*flat, key & 0xFFFFFFFF, key >> 32, u, v)
    return u.reshape(shape), v.reshape(shape)


class TrialStream:
    """Sequential view of the counter space owned by one trial.

    ``next_uniforms(m)`` hands out fresh slots; two streams built from the same
    ``(key, trial)`` produce identical draws.
    """

    def __init__(self, key: int, trial: int, factor: int = 0):
        self.key = int(key)
        self.trial = int(trial)
        self.factor = int(factor)
        self._slot = 0

    def next_uniforms(self, count: int) -> np.ndarray:
        npairs = (count + 1) // 2
        slots = np.arange(self._slot, self._slot + npairs, dtype=np.uint64)
        self._slot += npairs
        u, v = uniforms(self.key, self.trial, self.factor, slots)
        return np.stack([u, v], axis=-1).reshape(-1)[:count]

    def advance_factor(self) -> None:
        self.factor += 1
        self._slot = 0

    def spawn(self, trial: int) -> TrialStream:
        return TrialStream(self.key, trial)
