import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mginf_mrp.dist import (
    Kind,
    ServiceDistribution,
    Tag,
    class_tags,
    equilibrium_survival,
    moments,
    parse_spec,
    sample,
    survival,
)

from conftest import CATALOG, EXTENDED


# scipy frozen laws used as an independent reference for the closed forms
def scipy_law(d: ServiceDistribution):
    if d.kind is Kind.EXPONENTIAL:
        return stats.expon(scale=d["alpha"])
    if d.kind is Kind.ERLANG:
        n = int(d["n"])
        return stats.gamma(n, scale=d["alpha"] / n)
    if d.kind is Kind.UNIFORM:
        return stats.uniform(d["a"], d["b"] - d["a"])
    return None


def test_parse_roundtrip(catalog_dist):
    assert parse_spec(catalog_dist.spec) == catalog_dist


@pytest.mark.parametrize(
    "text,kind",
    [
        ("exponential:alpha=2", Kind.EXPONENTIAL),
        ("deterministic:alpha=1.5", Kind.DETERMINISTIC),
        ("erlang:n=3,alpha=1e0", Kind.ERLANG),
        ("uniform:a=0,b=.5", Kind.UNIFORM),
    ],
)
def test_parse_aliases_and_number_forms(text, kind):
    assert parse_spec(text).kind is kind


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "exp",
        "exp:",
        "exp:alpha=-1",
        "exp:alpha=0",
        "exp:alpha=nan",
        "exp:alpha=inf",
        "exp:beta=1",
        "exp:alpha=1,alpha=2",
        "erlang:n=2.5,alpha=1",
        "erlang:n=0,alpha=1",
        "erlang:alpha=1",
        "hyperexp2:p=1,alpha1=1,alpha2=2",
        "hyperexp2:p=0.5,alpha1=0,alpha2=2",
        "uniform:a=2,b=1",
        "uniform:a=1,b=1",
        "gamma:k=2,theta=1",
        "exp:alpha=1,",
        "EXP:alpha=1",
    ],
)
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_spec(bad)


def test_direct_constructor_validates():
    with pytest.raises(ValueError):
        ServiceDistribution.uniform(3.0, 1.0)
    with pytest.raises(ValueError):
        ServiceDistribution.erlang(0, 1.0)


def test_moments_closed_forms():
    e = parse_spec("erlang:n=2,alpha=1.0")
    assert (e.mean, e.mu2, e.mu3, e.scv) == pytest.approx((1.0, 1.5, 3.0, 0.5))
    h = parse_spec(CATALOG["hyperexp2"])
    assert h.mu2 == pytest.approx(2.5)
    assert h.scv == pytest.approx(1.5)
    u = parse_spec("uniform:a=0,b=2")
    assert (u.mean, u.mu2, u.mu3, u.scv) == pytest.approx((1.0, 4 / 3, 2.0, 1 / 3))
    assert moments(parse_spec("det:alpha=2")).scv == 0.0


@pytest.mark.parametrize("spec", EXTENDED)
def test_moments_match_numeric_integration(spec):
    d = parse_spec(spec)
    if d.kind is Kind.DETERMINISTIC:
        pytest.skip("point mass")
    # E[X^r] = r int x^{r-1} S(x) dx
    upper = d.support_end if math.isfinite(d.support_end) else np.inf
    for r, mu in ((1, d.mean), (2, d.mu2), (3, d.mu3)):
        val, _ = integrate.quad(lambda x: r * x ** (r - 1) * survival(d, x), 0, upper, limit=200)
        assert val == pytest.approx(mu, rel=1e-8)


@pytest.mark.parametrize("spec", EXTENDED)
def test_survival_against_scipy(spec):
    d = parse_spec(spec)
    law = scipy_law(d)
    if law is None:
        pytest.skip("no scipy counterpart")
    x = np.linspace(0, 6 * d.mean, 57)
    np.testing.assert_allclose(survival(d, x), law.sf(x), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("spec", EXTENDED)
def test_equilibrium_tail_is_normalized_integral_of_survival(spec):
    d = parse_spec(spec)
    end = d.support_end if math.isfinite(d.support_end) else np.inf
    for t in (0.0, 0.1, 0.5, 1.0, 1.7, 3.0):
        if t >= end:
            assert equilibrium_survival(d, t) == 0.0
            continue
        pts = [p for p in d.kinks if t < p < end] or None
        val, _ = integrate.quad(lambda x: survival(d, x), t, end, points=pts, limit=200)
        assert equilibrium_survival(d, t) == pytest.approx(val / d.mean, rel=1e-9, abs=1e-14)


def test_frozen_oracle_values():
    e = parse_spec("erlang:n=2,alpha=1.0")
    # 3 e^{-2} and 2 e^{-2}
    assert survival(e, 1.0) == pytest.approx(0.406005849709838, rel=1e-14)
    assert equilibrium_survival(e, 1.0) == pytest.approx(0.270670566473225, rel=1e-14)
    assert equilibrium_survival(parse_spec("det:alpha=2"), 0.5) == 0.75


def test_deterministic_survival_steps_at_alpha():
    d = parse_spec("det:alpha=1")
    assert survival(d, 0.999) == 1.0
    assert survival(d, 1.0) == 0.0


def test_vectorized_shapes_and_scalar_type(catalog_dist):
    t = np.linspace(0, 3, 12).reshape(3, 4)
    assert equilibrium_survival(catalog_dist, t).shape == (3, 4)
    assert survival(catalog_dist, t).shape == (3, 4)
    assert isinstance(equilibrium_survival(catalog_dist, 0.3), float)
    assert equilibrium_survival(catalog_dist, 0.0) == pytest.approx(1.0)


def test_negative_time_rejected(catalog_dist):
    with pytest.raises(ValueError):
        survival(catalog_dist, -0.1)
    with pytest.raises(ValueError):
        equilibrium_survival(catalog_dist, np.array([0.0, -1.0]))


def test_erlang_large_n_is_stable():
    d = parse_spec("erlang:n=200,alpha=1")
    t = np.array([0.0, 0.5, 1.0, 1.5, 5.0])
    s = equilibrium_survival(d, t)
    assert np.all(np.isfinite(s))
    assert np.all(np.diff(s) <= 0)
    # concentrates near the deterministic tail 1 - t for t < 1
    assert s[1] == pytest.approx(0.5, abs=0.03)


@given(
    spec=st.sampled_from(EXTENDED),
    t1=st.floats(0, 20, allow_nan=False),
    t2=st.floats(0, 20, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_tails_are_monotone_and_bounded(spec, t1, t2):
    d = parse_spec(spec)
    lo, hi = sorted((t1, t2))
    for fn in (survival, equilibrium_survival):
        a, b = fn(d, lo), fn(d, hi)
        assert 0.0 <= b <= a <= 1.0


@pytest.mark.parametrize(
    "spec,tags",
    [
        ("exp:alpha=1", {Tag.NBUE, Tag.NWUE, Tag.IMRL, Tag.DFR, Tag.EXPONENTIAL}),
        ("det:alpha=1", {Tag.NBUE, Tag.DETERMINISTIC}),
        ("erlang:n=3,alpha=1", {Tag.NBUE}),
        ("erlang:n=1,alpha=1", {Tag.NBUE, Tag.NWUE, Tag.IMRL, Tag.DFR, Tag.EXPONENTIAL}),
        ("hyperexp2:p=0.5,alpha1=0.5,alpha2=1.5", {Tag.NWUE, Tag.IMRL, Tag.DFR}),
        ("hyperexp2:p=0.5,alpha1=2,alpha2=2", {Tag.NBUE, Tag.NWUE, Tag.IMRL, Tag.DFR, Tag.EXPONENTIAL}),
        ("uniform:a=0,b=2", {Tag.NBUE}),
    ],
)
def test_class_tags(spec, tags):
    assert class_tags(parse_spec(spec)) == tags


@pytest.mark.parametrize("spec", EXTENDED)
def test_nbue_nwue_tags_agree_with_mean_residual_life(spec):
    # NBUE: mean residual life E[X - t | X > t] <= mean for all t, NWUE: >= mean
    d = parse_spec(spec)
    tags = class_tags(d)
    for t in np.linspace(0.05, 0.95 * min(d.support_end, 5 * d.mean), 15):
        s = survival(d, t)
        if s <= 1e-12:
            continue
        mrl = d.mean * equilibrium_survival(d, t) / s
        if Tag.NBUE in tags:
            assert mrl <= d.mean * (1 + 1e-12)
        if Tag.NWUE in tags:
            assert mrl >= d.mean * (1 - 1e-12)


@pytest.mark.parametrize("spec", EXTENDED)
def test_sample_moments(spec):
    d = parse_spec(spec)
    x = sample(d, np.random.default_rng(12345), 400_000)
    n = len(x)
    var = d.mu2 - d.mean**2
    assert abs(x.mean() - d.mean) <= 4 * math.sqrt(var / n) + 1e-12
    if var > 0:
        # variance of the sample variance needs the fourth moment, use a loose relative check
        assert x.var() == pytest.approx(var, rel=0.05)


def test_sample_against_scipy_ks():
    for spec in ("exp:alpha=1", "erlang:n=3,alpha=2", "uniform:a=0.5,b=1.5"):
        d = parse_spec(spec)
        x = sample(d, np.random.default_rng(7), 20_000)
        assert stats.kstest(x, scipy_law(d).cdf).pvalue > 1e-3
