"""Empirical sanity check for real-valued release mechanisms.

The mechanism is run many times on the all-zeros and all-ones vectors of
length ``n`` (L1 sensitivity ``n``). Each output is attacked by rounding
every coordinate to 0 or 1 and taking a majority vote. The attacker's
precision on each side gives maximum-likelihood estimates of the posterior
probabilities, and under uniform priors the log posterior odds must stay
below ``epsilon`` for any epsilon-DP mechanism. Exceeding it is strong
evidence of a violation; staying below proves nothing, since the attack may
simply be weak.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .mechanisms import MechanismKind, MechanismTag
from .rng import UniformStream, derive_seed
from .samplers import NanPolicy

DEFAULT_TRIALS = 1_000_000
SINGLE_REPEAT_MARGIN = 0.01


class Guess(enum.Enum):
    ZEROS = 0
    ONES = 1


class TieBreak(enum.Enum):
    """Majority-vote outcome when exactly half the coordinates round to 1."""

    ZEROS = "zeros"
    COIN = "coin"


@dataclass(frozen=True)
class AuditConfig:
    n: int
    epsilon: float
    trials: int = DEFAULT_TRIALS
    repeats: int = 1
    master_seed: int = 0
    mechanism: MechanismKind = field(default_factory=MechanismKind.laplace)
    tie_break: TieBreak = TieBreak.ZEROS
    margin: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if self.trials >= 1 << 61:
            raise ConfigurationError("trials must fit in 61 bits")
        if self.margin is not None and not self.margin >= 0:
            raise ConfigurationError("margin must be non-negative")

    @property
    def sensitivity(self) -> float:
        return float(self.n)

    def noise_scale(self) -> float:
        m = self.mechanism
        if m.tag is MechanismTag.WRONG_SENSITIVITY:
            return m.delta_claimed / self.epsilon
        return self.sensitivity / self.epsilon


@dataclass(frozen=True)
class TrialTally:
    correct_on_x: int
    correct_on_xprime: int
    trials_per_side: int

    def __post_init__(self):
        for c in (self.correct_on_x, self.correct_on_xprime):
            if not 0 <= c <= self.trials_per_side:
                raise ValueError("correct counts must lie in [0, trials_per_side]")
        if self.trials_per_side < 1:
            raise ValueError("trials_per_side must be >= 1")

    @property
    def p_x(self) -> float:
        return self.correct_on_x / self.trials_per_side

    @property
    def p_xprime(self) -> float:
        return self.correct_on_xprime / self.trials_per_side

    def __add__(self, other: "TrialTally") -> "TrialTally":
        return TrialTally(
            self.correct_on_x + other.correct_on_x,
            self.correct_on_xprime + other.correct_on_xprime,
            self.trials_per_side + other.trials_per_side,
        )


@dataclass(frozen=True)
class LossEstimate:
    eps_forward: float
    eps_backward: float
    eps_emp: float


@dataclass(frozen=True)
class AuditResult:
    config: AuditConfig
    tally: TrialTally
    p_x: float
    p_xprime: float
    eps_forward: float
    eps_backward: float
    eps_emp: float
    eps_emp_mean: float
    eps_emp_std: float
    per_repeat_eps: tuple[float, ...]
    margin: float
    violated: bool


def make_neighboring_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    return np.zeros(n), np.ones(n)


def reconstruction_attack(
    z: Sequence[float],
    tie_coin: UniformStream | None = None,
    tie_break: TieBreak = TieBreak.ZEROS,
) -> Guess:
    """Round each coordinate to the closer of 0 and 1 (ties at 0.5 go up,
    NaN goes to 0) and return the majority value."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("cannot attack an empty vector")
    twice = 2 * int(np.count_nonzero(z >= 0.5))
    if twice > z.size:
        return Guess.ONES
    if twice < z.size or tie_break is TieBreak.ZEROS:
        return Guess.ZEROS
    if tie_coin is None:
        raise ConfigurationError("coin tie-breaking needs a tie_coin stream")
    return Guess.ONES if tie_coin.next_uniform() >= 0.5 else Guess.ZEROS


def _kernel_kind(m: MechanismKind) -> int:
    if m.tag in (MechanismTag.LAPLACE, MechanismTag.WRONG_SENSITIVITY):
        return _kernels.KIND_LAPLACE
    if m.tag is MechanismTag.DPTEXT_BROKEN:
        if m.policy is NanPolicy.REPLACE_ZERO:
            return _kernels.KIND_DPTEXT_ZERO
        return _kernels.KIND_DPTEXT_RESAMPLE
    if m.tag is MechanismTag.COPY_INPUT:
        return _kernels.KIND_COPY
    return _kernels.KIND_RANDOM


def repeat_seed(config: AuditConfig, repeat: int) -> int:
    return derive_seed(config.master_seed, repeat)


def run_trials(
    config: AuditConfig, repeat: int = 0, backend: str | None = None, threads: int = 1
) -> TrialTally:
    """Run ``config.trials`` trials on each dataset for one repetition.

    The tally is a pure function of ``(config, repeat)``: the backend and
    the number of worker threads do not affect it.
    """
    seed = repeat_seed(config, repeat)
    kind = _kernel_kind(config.mechanism)
    tie = _kernels.TIE_COIN if config.tie_break is TieBreak.COIN else _kernels.TIE_ZEROS
    b = config.noise_scale()
    counts = [
        _kernels.tally_side(kind, config.n, b, seed, side, config.trials, tie, backend, threads)
        for side in (0, 1)
    ]
    return TrialTally(counts[0], counts[1], config.trials)


def _log_ratio(num: int, den: int) -> float:
    if num == 0 and den == 0:
        return math.nan
    if num == 0:
        return -math.inf
    if den == 0:
        return math.inf
    return math.log(num / den)


def empirical_loss(tally: TrialTally) -> LossEstimate:
    """Log posterior odds achieved by each attack outcome.

    ``eps_forward = ln(p / (1 - q))`` after guessing zeros and
    ``eps_backward = ln(q / (1 - p))`` after guessing ones, with ``p`` and
    ``q`` the precisions on the all-zeros and all-ones data. An undetermined
    ratio (0/0) is NaN and is ignored by the maximum.
    """
    trials = tally.trials_per_side
    fwd = _log_ratio(tally.correct_on_x, trials - tally.correct_on_xprime)
    bwd = _log_ratio(tally.correct_on_xprime, trials - tally.correct_on_x)
    determined = [e for e in (fwd, bwd) if not math.isnan(e)]
    return LossEstimate(fwd, bwd, max(determined) if determined else math.nan)


def loss_standard_error(tally: TrialTally) -> float:
    """Delta-method standard error of ``eps_emp`` (binomial counts)."""
    est = empirical_loss(tally)
    if not math.isfinite(est.eps_emp):
        return math.nan
    n = tally.trials_per_side
    p, q = tally.p_x, tally.p_xprime
    if est.eps_emp == est.eps_forward:
        a, c = p, 1.0 - q
    else:
        a, c = q, 1.0 - p
    return math.sqrt((1.0 - a) / (a * n) + (1.0 - c) / (c * n))


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    vals = np.asarray(values, dtype=np.float64)
    if np.isnan(vals).any():
        return math.nan, math.nan
    if np.isposinf(vals).any():
        return math.inf, math.nan
    if np.isneginf(vals).any():
        return -math.inf, math.nan
    mean = float(np.mean(vals))
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else math.nan
    return mean, std


def default_margin(eps_std: float, repeats: int) -> float:
    if repeats > 1 and math.isfinite(eps_std):
        return 3.0 * eps_std
    return SINGLE_REPEAT_MARGIN


def check_violation(result: AuditResult | float, epsilon: float, margin: float) -> bool:
    """True iff the mean empirical loss exceeds ``epsilon + margin``.

    Infinite loss always violates; an undetermined loss never does.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    eps = result.eps_emp_mean if isinstance(result, AuditResult) else float(result)
    if math.isnan(eps):
        return False
    return eps > epsilon + margin


def run_audit(config: AuditConfig, backend: str | None = None, threads: int = 1) -> AuditResult:
    tallies = [run_trials(config, r, backend, threads) for r in range(config.repeats)]
    per_repeat = tuple(empirical_loss(t).eps_emp for t in tallies)
    pooled = tallies[0]
    for t in tallies[1:]:
        pooled = pooled + t
    est = empirical_loss(pooled)
    mean, std = _mean_std(per_repeat)
    margin = config.margin if config.margin is not None else default_margin(std, config.repeats)
    partial = AuditResult(
        config=config,
        tally=pooled,
        p_x=pooled.p_x,
        p_xprime=pooled.p_xprime,
        eps_forward=est.eps_forward,
        eps_backward=est.eps_backward,
        eps_emp=est.eps_emp,
        eps_emp_mean=mean,
        eps_emp_std=std,
        per_repeat_eps=per_repeat,
        margin=margin,
        violated=False,
    )
    return replace(partial, violated=check_violation(partial, config.epsilon, margin))
