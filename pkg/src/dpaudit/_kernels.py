"""Hot loop of the audit: privatize, attack and count, for a range of trials.

Both backends implement exactly the per-trial recipe below, so their tallies
agree. Trial ``t`` on side ``s`` (0 for the all-zeros dataset, 1 for all-ones)
uses stream id ``(t << 2) | (s << 1)`` for noise, coordinate ``i`` reading the
counter block starting at ``i << 32``; the tie-breaking coin, when enabled,
reads counter 0 of stream id ``(t << 2) | (s << 1) | 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _backend
from .rng import (
    GAMMA,
    INV_2_53,
    LANE_STRIDE,
    MIX1,
    MIX2,
    seed_key,
    stream_keys_array,
    uniforms_array,
)
from .samplers import RESAMPLE_CAP

KIND_LAPLACE = 0
KIND_DPTEXT_ZERO = 1
KIND_DPTEXT_RESAMPLE = 2
KIND_COPY = 3
KIND_RANDOM = 4

TIE_ZEROS = 0
TIE_COIN = 1

CHUNK = 1 << 16


def noise_stream_id(side: int, trial: int) -> int:
    return (trial << 2) | (side << 1)


def coin_stream_id(side: int, trial: int) -> int:
    return (trial << 2) | (side << 1) | 1


# --------------------------------------------------------------------------
# numpy backend


def _coords_numpy(kind, keys, n, x, b):
    """Privatized outputs, shape (len(keys), n)."""
    shape = (keys.size, n)
    if kind == KIND_COPY:
        return np.full(shape, x)
    base = (np.arange(n, dtype=np.uint64) * np.uint64(LANE_STRIDE))[None, :]
    kcol = keys[:, None]
    attempt = np.zeros(shape, dtype=np.uint64)
    u = uniforms_array(kcol, base + attempt)
    if kind == KIND_RANDOM:
        return u

    def redraw(mask):
        attempt[mask] += np.uint64(1)
        rows, cols = np.nonzero(mask)
        u[mask] = uniforms_array(keys[rows], base[0, cols] + attempt[mask])

    bad = u == 0.0
    while bad.any():
        redraw(bad)
        bad = u == 0.0
    if kind == KIND_LAPLACE:
        d = u - 0.5
        noise = 0.0 - b * np.sign(d) * np.log(1.0 - 2.0 * np.abs(d))
        return x + noise
    if kind == KIND_DPTEXT_RESAMPLE:
        tries = np.ones(shape, dtype=np.int64)
        bad = u >= 0.5
        while bad.any():
            if tries[bad].max() >= RESAMPLE_CAP:
                raise RuntimeError(f"no valid dptext draw after {RESAMPLE_CAP} attempts")
            tries[bad] += 1
            redraw(bad)
            zero = u == 0.0
            while zero.any():
                redraw(zero)
                zero = u == 0.0
            bad = u >= 0.5
    valid = u < 0.5
    noise = np.zeros(shape)
    noise[valid] = 0.0 - b * np.log(1.0 - 2.0 * u[valid])
    return x + noise


def _tally_numpy(kind, n, b, seed, side, t0, t1, tie):
    x = float(side)
    batch = max(1, (1 << 20) // n)
    correct = 0
    for s0 in range(t0, t1, batch):
        s1 = min(t1, s0 + batch)
        trials = np.arange(s0, s1, dtype=np.uint64)
        sid = (trials << np.uint64(2)) | np.uint64(side << 1)
        z = _coords_numpy(kind, stream_keys_array(seed, sid), n, x, b)
        twice = 2 * np.count_nonzero(z >= 0.5, axis=1)
        guess_ones = twice > n
        if tie == TIE_COIN:
            ties = np.flatnonzero(twice == n)
            if ties.size:
                ckeys = stream_keys_array(seed, sid[ties] | np.uint64(1))
                guess_ones[ties] = uniforms_array(ckeys, np.uint64(0)) >= 0.5
        hits = np.count_nonzero(guess_ones)
        correct += hits if side == 1 else (s1 - s0) - hits
    return correct


# --------------------------------------------------------------------------
# numba backend

_tally_numba = None

if _backend.HAVE_NUMBA:
    from numba import njit

    _G = np.uint64(GAMMA)
    _M1 = np.uint64(MIX1)
    _M2 = np.uint64(MIX2)
    _ONE = np.uint64(1)

    @njit(inline="always")
    def _mix(z):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))

    @njit(inline="always")
    def _uniform(key, counter):
        return float(_mix(key + (counter + _ONE) * _G) >> np.uint64(11)) * INV_2_53

    @njit(inline="always")
    def _open_uniform(key, base):
        a = np.uint64(0)
        u = _uniform(key, base)
        while u == 0.0:
            a += _ONE
            u = _uniform(key, base + a)
        return u, a

    @njit(inline="always")
    def _coord(kind, key, i, x, b):
        base = np.uint64(i) << np.uint64(32)
        if kind == KIND_COPY:
            return x
        if kind == KIND_RANDOM:
            return _uniform(key, base)
        u, a = _open_uniform(key, base)
        if kind == KIND_LAPLACE:
            d = u - 0.5
            s = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
            return x + (0.0 - b * s * math.log(1.0 - 2.0 * abs(d)))
        if kind == KIND_DPTEXT_RESAMPLE:
            tries = 1
            while u >= 0.5:
                if tries >= RESAMPLE_CAP:
                    raise RuntimeError("no valid dptext draw after resample cap")
                tries += 1
                u2, a2 = _open_uniform(key, base + a + _ONE)
                u = u2
                a = a + _ONE + a2
        if u >= 0.5:
            return x + 0.0
        return x + (0.0 - b * math.log(1.0 - 2.0 * u))

    @njit(nogil=True, cache=True)
    def _tally_numba(kind, n, b, seedk, side, t0, t1, tie):
        x = float(side)
        side_bits = np.uint64(side) << _ONE
        correct = 0
        for t in range(t0, t1):
            sid = (np.uint64(t) << np.uint64(2)) | side_bits
            key = _mix(seedk ^ _mix(sid + _G))
            ones = 0
            for i in range(n):
                if _coord(kind, key, i, x, b) >= 0.5:
                    ones += 1
            twice = 2 * ones
            if twice > n:
                guess_ones = True
            elif twice < n or tie == TIE_ZEROS:
                guess_ones = False
            else:
                ckey = _mix(seedk ^ _mix((sid | _ONE) + _G))
                guess_ones = _uniform(ckey, np.uint64(0)) >= 0.5
            if guess_ones == (side == 1):
                correct += 1
        return correct


def tally_side(kind, n, b, seed, side, trials, tie=TIE_ZEROS, backend=None, threads=1):
    """Number of trials (out of ``trials``) on ``side`` where the attack
    recovers the true dataset."""
    backend = _backend.resolve(backend)
    starts = range(0, trials, CHUNK)
    if backend == "numba":
        seedk = np.uint64(seed_key(seed))

        def run(s0):
            return _tally_numba(kind, n, float(b), seedk, side, s0, min(trials, s0 + CHUNK), tie)
    else:

        def run(s0):
            return _tally_numpy(kind, n, float(b), seed, side, s0, min(trials, s0 + CHUNK), tie)

    if threads <= 1 or len(starts) <= 1:
        return int(sum(run(s0) for s0 in starts))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return int(sum(pool.map(run, starts)))
