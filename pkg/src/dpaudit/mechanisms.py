"""Release mechanisms under audit.

Each mechanism maps a real vector to a privatized vector of the same length.
Coordinate ``i`` draws its randomness from lane ``i`` of the supplied stream
(see ``UniformStream.lane``), and the stream is advanced past all ``n`` lanes,
so the audit kernels reproduce these functions exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .rng import UniformStream
from .samplers import LaplaceParams, NanPolicy, SamplerKind, draw_noise


class MechanismTag(enum.Enum):
    LAPLACE = "laplace"
    DPTEXT_BROKEN = "dptext"
    WRONG_SENSITIVITY = "wrong-sensitivity"
    COPY_INPUT = "copy-input"
    RANDOM_OUTPUT = "random-output"


@dataclass(frozen=True)
class MechanismKind:
    tag: MechanismTag
    policy: NanPolicy | None = None
    delta_claimed: float | None = None

    def __post_init__(self):
        if self.tag is MechanismTag.DPTEXT_BROKEN:
            if self.policy is None:
                raise ConfigurationError("dptext mechanism requires a NaN policy")
        elif self.policy is not None:
            raise ConfigurationError(f"{self.tag.value} does not take a NaN policy")
        if self.tag is MechanismTag.WRONG_SENSITIVITY:
            if self.delta_claimed is None:
                object.__setattr__(self, "delta_claimed", 1.0)
            if not (math.isfinite(self.delta_claimed) and self.delta_claimed > 0):
                raise ConfigurationError("delta_claimed must be positive")
        elif self.delta_claimed is not None:
            raise ConfigurationError(f"{self.tag.value} does not take delta_claimed")

    @classmethod
    def laplace(cls):
        return cls(MechanismTag.LAPLACE)

    @classmethod
    def dptext(cls, policy: NanPolicy):
        return cls(MechanismTag.DPTEXT_BROKEN, policy=policy)

    @classmethod
    def wrong_sensitivity(cls, delta_claimed: float = 1.0):
        return cls(MechanismTag.WRONG_SENSITIVITY, delta_claimed=delta_claimed)

    @classmethod
    def copy_input(cls):
        return cls(MechanismTag.COPY_INPUT)

    @classmethod
    def random_output(cls):
        return cls(MechanismTag.RANDOM_OUTPUT)

    @property
    def name(self) -> str:
        """Command-line name, e.g. ``dptext-resample``."""
        if self.tag is MechanismTag.DPTEXT_BROKEN:
            return f"dptext-{self.policy.value}"
        return self.tag.value

    @classmethod
    def from_name(cls, name: str, delta_claimed: float = 1.0) -> "MechanismKind":
        if name == "laplace":
            return cls.laplace()
        if name == "dptext-replace-zero":
            return cls.dptext(NanPolicy.REPLACE_ZERO)
        if name == "dptext-resample":
            return cls.dptext(NanPolicy.RESAMPLE)
        if name == "wrong-sensitivity":
            return cls.wrong_sensitivity(delta_claimed)
        if name == "copy-input":
            return cls.copy_input()
        if name == "random-output":
            return cls.random_output()
        raise ConfigurationError(f"unknown mechanism {name!r}")


MECHANISM_NAMES = (
    "laplace",
    "dptext-replace-zero",
    "dptext-resample",
    "wrong-sensitivity",
    "copy-input",
    "random-output",
)


def _check_budget(epsilon: float, delta_sensitivity: float) -> None:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    if not (delta_sensitivity > 0 and math.isfinite(delta_sensitivity)):
        raise ConfigurationError(f"sensitivity must be positive, got {delta_sensitivity}")


def _add_noise(x, kind, params, stream, policy=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(x.size):
        out[i] = x[i] + draw_noise(kind, params, stream.lane(i), policy)
    stream.skip_lanes(x.size)
    return out


def laplace_mechanism(
    x: Sequence[float], epsilon: float, delta_sensitivity: float, stream: UniformStream
) -> np.ndarray:
    """Add i.i.d. ``Lap(0, delta_sensitivity / epsilon)`` noise to each coordinate."""
    _check_budget(epsilon, delta_sensitivity)
    params = LaplaceParams(0.0, delta_sensitivity / epsilon)
    return _add_noise(x, SamplerKind.INVERSE_CDF_CENTERED, params, stream)


def dptext_mechanism(
    x: Sequence[float],
    epsilon: float,
    delta_sensitivity: float,
    policy: NanPolicy,
    stream: UniformStream,
) -> np.ndarray:
    """Laplace mechanism built on the broken sampler; noise is never negative."""
    _check_budget(epsilon, delta_sensitivity)
    params = LaplaceParams(0.0, delta_sensitivity / epsilon)
    return _add_noise(x, SamplerKind.DPTEXT_BROKEN, params, stream, policy)


def wrong_sensitivity_mechanism(
    x: Sequence[float], epsilon: float, delta_claimed: float, stream: UniformStream
) -> np.ndarray:
    """Correct Laplace noise calibrated to a dimension-independent sensitivity.

    On inputs whose true L1 sensitivity is ``n``, the effective budget is
    ``n * epsilon / delta_claimed``.
    """
    return laplace_mechanism(x, epsilon, delta_claimed, stream)


def copy_mechanism(x: Sequence[float]) -> np.ndarray:
    return np.array(x, dtype=np.float64)


def random_mechanism(n: int, stream: UniformStream) -> np.ndarray:
    """``n`` i.i.d. Uni(0, 1) coordinates, independent of any input."""
    if n < 1:
        raise ConfigurationError("random output needs n >= 1")
    out = np.array([stream.lane(i).next_uniform() for i in range(n)])
    stream.skip_lanes(n)
    return out


def apply(
    kind: MechanismKind,
    x: Sequence[float],
    epsilon: float,
    delta_sensitivity: float,
    stream: UniformStream,
) -> np.ndarray:
    """Dispatch on ``kind``. Copy and random output ignore the budget."""
    tag = kind.tag
    if tag is MechanismTag.LAPLACE:
        return laplace_mechanism(x, epsilon, delta_sensitivity, stream)
    if tag is MechanismTag.DPTEXT_BROKEN:
        return dptext_mechanism(x, epsilon, delta_sensitivity, kind.policy, stream)
    if tag is MechanismTag.WRONG_SENSITIVITY:
        return wrong_sensitivity_mechanism(x, epsilon, kind.delta_claimed, stream)
    if tag is MechanismTag.COPY_INPUT:
        return copy_mechanism(x)
    return random_mechanism(len(x), stream)
