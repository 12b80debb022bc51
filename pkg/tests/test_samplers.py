import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpaudit.errors import ConfigurationError, DomainError
from dpaudit.rng import UniformStream
from dpaudit.samplers import (
    CORRECT_KINDS,
    LaplaceParams,
    NanPolicy,
    SamplerKind,
    draw_noise,
    dptext_raw_array,
    dptext_transform,
    inverse_cdf_centered,
    inverse_cdf_piecewise,
    inverse_cdf_shifted,
    sample_array,
)

STD = LaplaceParams(0.0, 1.0)
LN2 = math.log(2.0)


def analytic_cdf(x, mu, b):
    # independent of dpaudit.stats
    if x < mu:
        return 0.5 * math.exp((x - mu) / b)
    return 1.0 - 0.5 * math.exp(-(x - mu) / b)


def ulps(a, b):
    return abs(a - b) / math.ulp(max(abs(a), abs(b), 1e-300))


def test_params_validation():
    with pytest.raises(ConfigurationError):
        LaplaceParams(0.0, 0.0)
    with pytest.raises(ConfigurationError):
        LaplaceParams(0.0, -1.0)


class TestCentered:
    def test_median(self):
        assert inverse_cdf_centered(0.5, STD) == 0.0

    @pytest.mark.parametrize("u", [0.75, 0.25, 0.01, 0.999])
    def test_quantile_inverts_cdf(self, u):
        assert analytic_cdf(inverse_cdf_centered(u, STD), 0.0, 1.0) == pytest.approx(u, abs=1e-12)

    def test_examples(self):
        assert inverse_cdf_centered(0.75, STD) == pytest.approx(LN2, abs=1e-12)
        assert inverse_cdf_centered(0.25, STD) == pytest.approx(-LN2, abs=1e-12)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            inverse_cdf_centered(u, STD)


class TestPiecewise:
    def test_examples(self):
        assert inverse_cdf_piecewise(0.5, STD) == 0.0
        assert inverse_cdf_piecewise(0.1, LaplaceParams(0, 2)) == pytest.approx(2 * math.log(0.2), abs=1e-12)
        assert inverse_cdf_piecewise(0.9, LaplaceParams(1, 1)) == pytest.approx(1 - math.log(0.2), abs=1e-12)
        assert inverse_cdf_piecewise(0.1, LaplaceParams(0, 2)) == pytest.approx(
            inverse_cdf_centered(0.1, LaplaceParams(0, 2)), abs=1e-12
        )

    @pytest.mark.parametrize("u", [0.0, 1.0])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            inverse_cdf_piecewise(u, STD)


class TestShifted:
    def test_examples(self):
        assert inverse_cdf_shifted(0.0, STD) == 0.0
        assert inverse_cdf_shifted(0.25, STD) == pytest.approx(LN2, abs=1e-12)
        assert inverse_cdf_shifted(-0.25, STD) == pytest.approx(-LN2, abs=1e-12)

    @pytest.mark.parametrize("v", [0.5, -0.5, 0.7])
    def test_domain(self, v):
        with pytest.raises(DomainError):
            inverse_cdf_shifted(v, STD)


class TestDptextTransform:
    def test_valid_half(self):
        assert dptext_transform(0.25, STD) == pytest.approx(LN2, abs=1e-12)

    @pytest.mark.parametrize("v", [0.5, 0.75, 0.999])
    def test_invalid_half(self, v):
        assert math.isnan(dptext_transform(v, STD))

    @given(st.floats(1e-12, 0.5, exclude_max=True))
    def test_positive_on_valid_half(self, v):
        assert dptext_transform(v, STD) > 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            dptext_transform(0.0, STD)


def test_transforms_agree_on_generated_uniforms():
    u = UniformStream(11, 0).take(10**5)
    u = u[u > 0]
    p = LaplaceParams(0.3, 2.5)
    for x in u:
        c = inverse_cdf_centered(x, p)
        assert c == inverse_cdf_shifted(x - 0.5, p)
        assert ulps(c, inverse_cdf_piecewise(x, p)) <= 4


@given(st.integers(1, 2**53 - 1), st.floats(-5, 5), st.floats(0.01, 100))
def test_transforms_agree_on_53_bit_grid(m, mu, b):
    u = m * 2.0**-53
    p = LaplaceParams(mu, b)
    c = inverse_cdf_centered(u, p)
    assert c == inverse_cdf_shifted(u - 0.5, p)
    assert ulps(c, inverse_cdf_piecewise(u, p)) <= 4


class TestDrawNoise:
    def test_median_centered(self):
        s = UniformStream(0, 1)
        x = [draw_noise(SamplerKind.INVERSE_CDF_CENTERED, STD, s) for _ in range(10**5)]
        assert abs(np.median(x)) < 0.02

    def test_replace_zero_mass(self):
        s = UniformStream(0, 2)
        x = np.array([draw_noise(SamplerKind.DPTEXT_BROKEN, STD, s, NanPolicy.REPLACE_ZERO) for _ in range(10**5)])
        assert abs(np.mean(x == 0.0) - 0.5) < 0.01
        assert s.counter == 10**5

    def test_resample_positive(self):
        s = UniformStream(0, 3)
        x = np.array([draw_noise(SamplerKind.DPTEXT_BROKEN, STD, s, NanPolicy.RESAMPLE) for _ in range(10**5)])
        assert np.all(x > 0)
        # about two uniforms per output
        assert abs(s.counter / 10**5 - 2.0) < 0.03

    def test_policy_required(self):
        with pytest.raises(ConfigurationError):
            draw_noise(SamplerKind.DPTEXT_BROKEN, STD, UniformStream(0))

    def test_policy_superfluous(self):
        with pytest.raises(ConfigurationError):
            draw_noise(SamplerKind.INVERSE_CDF_CENTERED, STD, UniformStream(0), NanPolicy.RESAMPLE)

    def test_zero_uniform_is_skipped(self, monkeypatch):
        s = UniformStream(0)
        vals = iter([0.0, 0.75])
        monkeypatch.setattr(s, "next_uniform", lambda: next(vals))
        assert draw_noise(SamplerKind.INVERSE_CDF_CENTERED, STD, s) == pytest.approx(LN2)

    def test_resample_cap(self, monkeypatch):
        s = UniformStream(0)
        monkeypatch.setattr(s, "next_uniform", lambda: 0.9)
        with pytest.raises(RuntimeError):
            draw_noise(SamplerKind.DPTEXT_BROKEN, STD, s, NanPolicy.RESAMPLE)

    @pytest.mark.parametrize("kind", list(SamplerKind))
    def test_determinism(self, kind):
        policy = NanPolicy.RESAMPLE if kind is SamplerKind.DPTEXT_BROKEN else None
        a, b = UniformStream(9, 4), UniformStream(9, 4)
        xs = [draw_noise(kind, STD, a, policy) for _ in range(200)]
        ys = [draw_noise(kind, STD, b, policy) for _ in range(200)]
        assert xs == ys


CASES = [(k, None) for k in CORRECT_KINDS] + [
    (SamplerKind.DPTEXT_BROKEN, NanPolicy.REPLACE_ZERO),
    (SamplerKind.DPTEXT_BROKEN, NanPolicy.RESAMPLE),
]


@pytest.mark.parametrize("kind,policy", CASES)
def test_sample_array_matches_scalar_draws(kind, policy):
    p = LaplaceParams(1.5, 3.0)
    a, b = UniformStream(21, 5), UniformStream(21, 5)
    batch = sample_array(kind, p, a, 5000, policy)
    scalar = np.array([draw_noise(kind, p, b, policy) for _ in range(5000)])
    np.testing.assert_allclose(batch.values, scalar, rtol=1e-14, atol=1e-14)
    assert a.counter == b.counter


def test_sample_array_invalid_counts():
    s = UniformStream(0, 8)
    rz = sample_array(SamplerKind.DPTEXT_BROKEN, STD, s, 10**5, NanPolicy.REPLACE_ZERO)
    assert rz.invalid_count == np.count_nonzero(rz.values == 0.0)
    s = UniformStream(0, 8)
    rs = sample_array(SamplerKind.DPTEXT_BROKEN, STD, s, 10**5, NanPolicy.RESAMPLE)
    assert rs.invalid_count == s.counter - 10**5


def test_broken_sampler_sign_and_invalid_rate():
    raw = dptext_raw_array(LaplaceParams(0, 5), UniformStream(4, 4), 10**6)
    finite = raw[~np.isnan(raw)]
    assert np.all(finite > 0)
    assert abs(np.isnan(raw).mean() - 0.5) < 0.002
