"""Laplace-noise samplers (correct and broken), the mechanisms built on them,
and an empirical reconstruction-attack check for DP violations."""

from ._backend import BACKENDS, DEFAULT_BACKEND
from .audit import (
    AuditConfig,
    AuditResult,
    Guess,
    TieBreak,
    TrialTally,
    check_violation,
    empirical_loss,
    make_neighboring_pair,
    reconstruction_attack,
    run_audit,
    run_trials,
)
from .errors import ConfigurationError, DomainError
from .mechanisms import (
    MechanismKind,
    MechanismTag,
    apply,
    copy_mechanism,
    dptext_mechanism,
    laplace_mechanism,
    random_mechanism,
    wrong_sensitivity_mechanism,
)
from .rng import UniformStream, next_uniform
from .samplers import (
    INVALID,
    LaplaceParams,
    NanPolicy,
    SamplerKind,
    draw_noise,
    dptext_transform,
    inverse_cdf_centered,
    inverse_cdf_piecewise,
    inverse_cdf_shifted,
    sample_array,
)
from .stats import Histogram, KsReport, histogram, ks_statistic, ks_test, laplace_cdf

__version__ = "0.1.0"
