"""Laplace noise via inverse-CDF transforms of uniform variates.

Three transforms are correct parametrizations of the Laplace quantile function.
The fourth, ``dptext_transform``, feeds a standard uniform into the quantile
written for a zero-centred uniform: it is only defined on half its input
range and never produces a negative value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .rng import UniformStream

INVALID = math.nan
RESAMPLE_CAP = 1024


class SamplerKind(enum.Enum):
    INVERSE_CDF_CENTERED = "inverse-cdf-centered"
    INVERSE_CDF_PIECEWISE = "inverse-cdf-piecewise"
    INVERSE_CDF_SHIFTED = "inverse-cdf-shifted"
    DPTEXT_BROKEN = "dptext-broken"


class NanPolicy(enum.Enum):
    """What the broken sampler does with a draw whose logarithm is undefined."""

    REPLACE_ZERO = "replace-zero"
    RESAMPLE = "resample"


CORRECT_KINDS = (
    SamplerKind.INVERSE_CDF_CENTERED,
    SamplerKind.INVERSE_CDF_PIECEWISE,
    SamplerKind.INVERSE_CDF_SHIFTED,
)


@dataclass(frozen=True)
class LaplaceParams:
    mu: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0):
            raise ConfigurationError(f"Laplace scale must be positive and finite, got {self.b}")
        if not math.isfinite(self.mu):
            raise ConfigurationError(f"Laplace location must be finite, got {self.mu}")


def _sgn(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


def inverse_cdf_centered(u: float, p: LaplaceParams) -> float:
    """Laplace quantile ``mu - b sgn(u - 1/2) ln(1 - 2|u - 1/2|)`` for u in (0, 1)."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u}")
    d = u - 0.5
    return p.mu - p.b * _sgn(d) * math.log(1.0 - 2.0 * abs(d))


def inverse_cdf_piecewise(u: float, p: LaplaceParams) -> float:
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u}")
    if u < 0.5:
        return p.b * math.log(2.0 * u) + p.mu
    return p.mu - p.b * math.log(2.0 * (1.0 - u))


def inverse_cdf_shifted(v: float, p: LaplaceParams) -> float:
    """Laplace quantile for a uniform on (-1/2, 1/2)."""
    if not -0.5 < v < 0.5:
        raise DomainError(f"v must lie in (-0.5, 0.5), got {v}")
    return p.mu - p.b * _sgn(v) * math.log(1.0 - 2.0 * abs(v))


def _dptext_outcome(v: float, p: LaplaceParams) -> float | None:
    # None marks the invalid half of the input range (v >= 1/2, including ln 0).
    if v >= 0.5:
        return None
    return p.mu - p.b * _sgn(v) * math.log(1.0 - 2.0 * abs(v))


def dptext_transform(v: float, p: LaplaceParams) -> float:
    """The broken transform applied to ``v ~ Uni(0, 1)``.

    Returns ``mu - b ln(1 - 2v)`` for ``v < 0.5`` and ``INVALID`` (NaN)
    otherwise.
    """
    if not 0.0 < v < 1.0:
        raise DomainError(f"v must lie in (0, 1), got {v}")
    out = _dptext_outcome(v, p)
    return INVALID if out is None else out


def _check_policy(kind: SamplerKind, policy: NanPolicy | None) -> None:
    if kind is SamplerKind.DPTEXT_BROKEN and policy is None:
        raise ConfigurationError("dptext-broken sampling requires a NaN policy")
    if kind is not SamplerKind.DPTEXT_BROKEN and policy is not None:
        raise ConfigurationError(f"{kind.value} does not take a NaN policy")


def _next_open(stream: UniformStream) -> float:
    # Exact zeros (probability 2**-53) are skipped so every transform sees (0, 1).
    u = stream.next_uniform()
    while u == 0.0:
        u = stream.next_uniform()
    return u


def draw_noise(
    kind: SamplerKind,
    p: LaplaceParams,
    stream: UniformStream,
    policy: NanPolicy | None = None,
) -> float:
    """Draw one noise value, advancing ``stream`` by the uniforms consumed."""
    _check_policy(kind, policy)
    if kind is SamplerKind.INVERSE_CDF_CENTERED:
        return inverse_cdf_centered(_next_open(stream), p)
    if kind is SamplerKind.INVERSE_CDF_PIECEWISE:
        return inverse_cdf_piecewise(_next_open(stream), p)
    if kind is SamplerKind.INVERSE_CDF_SHIFTED:
        return inverse_cdf_shifted(_next_open(stream) - 0.5, p)
    if policy is NanPolicy.REPLACE_ZERO:
        out = _dptext_outcome(_next_open(stream), p)
        return 0.0 if out is None else out
    for _ in range(RESAMPLE_CAP):
        out = _dptext_outcome(_next_open(stream), p)
        if out is not None:
            return out
    raise RuntimeError(f"no valid dptext draw after {RESAMPLE_CAP} attempts")


# ---------------------------------------------------------------------------
# Vectorized forms. These evaluate the same expressions elementwise; numpy's
# SIMD log may differ from libm in the last bit.


def inverse_cdf_centered_array(u: np.ndarray, p: LaplaceParams) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("u must lie in (0, 1)")
    d = u - 0.5
    return p.mu - p.b * np.sign(d) * np.log(1.0 - 2.0 * np.abs(d))


def inverse_cdf_piecewise_array(u: np.ndarray, p: LaplaceParams) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("u must lie in (0, 1)")
    lower = u < 0.5
    out = np.empty_like(u)
    out[lower] = p.b * np.log(2.0 * u[lower]) + p.mu
    out[~lower] = p.mu - p.b * np.log(2.0 * (1.0 - u[~lower]))
    return out


def inverse_cdf_shifted_array(v: np.ndarray, p: LaplaceParams) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all((v > -0.5) & (v < 0.5)):
        raise DomainError("v must lie in (-0.5, 0.5)")
    return p.mu - p.b * np.sign(v) * np.log(1.0 - 2.0 * np.abs(v))


def dptext_transform_array(v: np.ndarray, p: LaplaceParams) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(values, valid)``; invalid slots of ``values`` hold NaN."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all((v > 0.0) & (v < 1.0)):
        raise DomainError("v must lie in (0, 1)")
    valid = v < 0.5
    out = np.full_like(v, INVALID)
    vv = v[valid]
    out[valid] = p.mu - p.b * np.sign(vv) * np.log(1.0 - 2.0 * np.abs(vv))
    return out, valid


def _take_open(stream: UniformStream, count: int) -> np.ndarray:
    """``count`` nonzero uniforms, consuming exactly what ``_next_open`` would."""
    parts = []
    need = count
    while need > 0:
        u = stream.take(need)
        u = u[u != 0.0]
        parts.append(u)
        need -= u.size
    return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    invalid_count: int


def sample_array(
    kind: SamplerKind,
    p: LaplaceParams,
    stream: UniformStream,
    count: int,
    policy: NanPolicy | None = None,
) -> SampleBatch:
    """``count`` draws, identical (up to last-bit log rounding) to ``count``
    successive ``draw_noise`` calls on the same stream.

    ``invalid_count`` is the number of raw broken-transform draws that landed
    in the invalid half (replaced or rejected, depending on the policy).
    """
    _check_policy(kind, policy)
    if count < 0:
        raise ConfigurationError("count must be non-negative")
    if kind is SamplerKind.INVERSE_CDF_CENTERED:
        return SampleBatch(inverse_cdf_centered_array(_take_open(stream, count), p), 0)
    if kind is SamplerKind.INVERSE_CDF_PIECEWISE:
        return SampleBatch(inverse_cdf_piecewise_array(_take_open(stream, count), p), 0)
    if kind is SamplerKind.INVERSE_CDF_SHIFTED:
        return SampleBatch(inverse_cdf_shifted_array(_take_open(stream, count) - 0.5, p), 0)
    if policy is NanPolicy.REPLACE_ZERO:
        values, valid = dptext_transform_array(_take_open(stream, count), p)
        values[~valid] = 0.0
        return SampleBatch(values, int(np.count_nonzero(~valid)))
    return _resample_array(p, stream, count)


def _resample_array(p: LaplaceParams, stream: UniformStream, count: int) -> SampleBatch:
    kept = []
    have = 0
    invalid = 0
    run = 0  # uniforms consumed since the last accepted draw
    while have < count:
        need = count - have
        start = stream.counter
        u = stream.take(2 * need + 64)
        accept = (u > 0.0) & (u < 0.5)
        pos = np.flatnonzero(accept)
        if pos.size >= need:
            pos = pos[:need]
            # rewind to just after the last accepted uniform
            stream.counter = start + int(pos[-1]) + 1
            u = u[: pos[-1] + 1]
        gaps = np.diff(np.concatenate(([-1 - run], pos)))
        if gaps.size and gaps.max() > RESAMPLE_CAP:
            raise RuntimeError(f"no valid dptext draw after {RESAMPLE_CAP} attempts")
        run = u.size - 1 - int(pos[-1]) if pos.size else run + u.size
        if run > RESAMPLE_CAP:
            raise RuntimeError(f"no valid dptext draw after {RESAMPLE_CAP} attempts")
        invalid += int(np.count_nonzero(u >= 0.5))
        values, _ = dptext_transform_array(u[pos], p)
        kept.append(values)
        have += pos.size
    values = np.concatenate(kept) if kept else np.empty(0)
    return SampleBatch(values, invalid)


def dptext_raw_array(p: LaplaceParams, stream: UniformStream, count: int) -> np.ndarray:
    """Raw broken-transform outputs with invalid draws left as NaN."""
    values, _ = dptext_transform_array(_take_open(stream, count), p)
    return values
