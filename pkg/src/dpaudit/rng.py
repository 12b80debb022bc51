"""Counter-based uniform streams.

Every variate is a pure function of ``(master_seed, stream_id, counter)``:

    key = mix64(mix64(master_seed) ^ mix64(stream_id + GAMMA))
    u   = (mix64(key + (counter + 1) * GAMMA) >> 11) * 2**-53

``mix64`` is the SplitMix64 finalizer, so a single stream is exactly the
SplitMix64 sequence started from a hashed key. Streams with different keys
only overlap if their keys land within ``counter`` steps of each other on the
Weyl sequence, which for 64-bit hashed keys does not happen in practice.
Parallel workers can therefore evaluate any subset of trials in any order and
reproduce the serial result bit for bit.

The generator is fixed for this release; changing any constant below changes
every seeded result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
REPEAT_SALT = 0xD1B54A32D192ED03
INV_2_53 = 1.0 / 9007199254740992.0

# Mechanisms give coordinate i the counter block starting at i * LANE_STRIDE.
LANE_STRIDE = 1 << 32


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def seed_key(master_seed: int) -> int:
    """First half of the key derivation; shared by all streams of one seed."""
    return mix64(master_seed)


def stream_key(master_seed: int, stream_id: int) -> int:
    return mix64(seed_key(master_seed) ^ mix64(stream_id + GAMMA))


def uniform_at(key: int, counter: int) -> float:
    """The uniform in [0, 1) at position ``counter`` of the stream with ``key``."""
    return (mix64(key + ((counter + 1) & MASK64) * GAMMA) >> 11) * INV_2_53


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for the ``index``-th independent repetition of an experiment."""
    return mix64((master_seed ^ REPEAT_SALT) + (index & MASK64) * GAMMA)


# numpy versions operate on uint64 arrays; wraparound is the intended arithmetic.
_G = np.uint64(GAMMA)
_M1 = np.uint64(MIX1)
_M2 = np.uint64(MIX2)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys_array(master_seed: int, stream_ids: np.ndarray) -> np.ndarray:
    sk = np.uint64(seed_key(master_seed))
    with np.errstate(over="ignore"):
        ids = np.asarray(stream_ids, dtype=np.uint64) + _G
    return mix64_array(sk ^ mix64_array(ids))


def uniforms_array(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Vectorized ``uniform_at``; ``keys`` and ``counters`` broadcast."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = mix64_array(keys + (counters + np.uint64(1)) * _G)
    return (z >> np.uint64(11)).astype(np.float64) * INV_2_53


@dataclass
class UniformStream:
    """A single-owner cursor into one counter-based stream.

    Not safe to share between threads; derive one stream per task instead.
    """

    master_seed: int
    stream_id: int = 0
    counter: int = 0
    _key: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.master_seed &= MASK64
        self.stream_id &= MASK64
        self.counter &= MASK64
        self._key = stream_key(self.master_seed, self.stream_id)

    @property
    def key(self) -> int:
        return self._key

    def next_uniform(self) -> float:
        u = uniform_at(self._key, self.counter)
        self.counter = (self.counter + 1) & MASK64
        return u

    def take(self, count: int) -> np.ndarray:
        """The next ``count`` uniforms as an array (same values as repeated
        ``next_uniform`` calls)."""
        counters = np.arange(count, dtype=np.uint64) + np.uint64(self.counter)
        out = uniforms_array(np.uint64(self._key), counters)
        self.counter = (self.counter + count) & MASK64
        return out

    def lane(self, index: int) -> "UniformStream":
        """A cursor at the start of counter block ``index`` (relative to the
        current position). Blocks are ``LANE_STRIDE`` draws long."""
        return UniformStream(
            self.master_seed, self.stream_id, self.counter + index * LANE_STRIDE
        )

    def skip_lanes(self, count: int) -> None:
        self.counter = (self.counter + count * LANE_STRIDE) & MASK64


def next_uniform(stream: UniformStream) -> float:
    return stream.next_uniform()
