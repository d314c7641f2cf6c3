import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from cascadefund.beliefs import (
    ConfigError,
    DomainError,
    OutOfSupportWarning,
    QualitySpec,
    TypeDistribution,
    private_likelihood,
    update_on_decline,
    update_on_invest,
)
from conftest import bimodal_spec, triangular_spec


@st.composite
def uniform_specs(draw):
    R = draw(st.floats(0.5, 0.93))
    Q = draw(st.floats(R + 0.03, 0.98))
    return QualitySpec.uniform(R, Q)


@st.composite
def tabulated_specs(draw):
    R = draw(st.floats(0.5, 0.85))
    Q = draw(st.floats(R + 0.05, 0.97))
    k = draw(st.integers(2, 5))
    interior = sorted(draw(st.lists(st.floats(0.05, 0.95), min_size=k - 2, max_size=k - 2)))
    qs = [R] + [R + u * (Q - R) for u in interior] + [Q]
    if len(set(qs)) != len(qs):
        qs = [R, Q]
    ds = draw(st.lists(st.floats(0.1, 3.0), min_size=len(qs), max_size=len(qs)))
    return QualitySpec.tabulated(R, Q, list(zip(qs, ds)), normalize=True)


def any_specs():
    return st.one_of(uniform_specs(), tabulated_specs())


def quad_cdf(dist: TypeDistribution, omega: int, y: float) -> float:
    segs = []
    pts = sorted({dist.lo, 1.0 - dist.R, dist.R, min(y, dist.hi)})
    pts = [p for p in pts if p <= y + 1e-15]
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = quad(lambda t: dist.pdf(omega, t), a, b, limit=200)
        segs.append(val)
    return float(sum(segs))


class TestQualitySpec:
    def test_uniform_roundtrip(self):
        spec = QualitySpec.uniform(0.5, 0.8)
        doc = json.dumps(spec.to_dict())
        assert QualitySpec.from_json(doc) == spec

    def test_tabulated_roundtrip(self):
        spec = triangular_spec()
        assert QualitySpec.from_json(json.dumps(spec.to_dict())) == spec

    def test_json_example(self):
        spec = QualitySpec.from_json('{"kind": "uniform", "R": 0.5, "Q": 0.8}')
        assert spec.R == 0.5 and spec.Q == 0.8

    @pytest.mark.parametrize(
        "R,Q",
        [(0.4, 0.8), (0.8, 0.8), (0.85, 0.8), (0.5, 1.0), (0.5, 1.2)],
    )
    def test_bad_bounds_rejected(self, R, Q):
        with pytest.raises(ConfigError):
            QualitySpec.uniform(R, Q)

    def test_tabulated_must_span_support(self):
        with pytest.raises(ConfigError):
            QualitySpec(kind="tabulated", R=0.5, Q=0.8, knots=((0.55, 2.0), (0.8, 2.0)))

    def test_tabulated_needs_unit_mass(self):
        with pytest.raises(ConfigError):
            QualitySpec(kind="tabulated", R=0.5, Q=0.8, knots=((0.5, 5.0), (0.8, 5.0)))

    def test_endpoint_density_must_be_positive(self):
        with pytest.raises(ConfigError):
            QualitySpec.tabulated(0.5, 0.8, [(0.5, 0.0), (0.8, 1.0)], normalize=True)

    def test_interior_zero_density_warns_but_builds(self):
        with pytest.warns(OutOfSupportWarning):
            spec = QualitySpec.tabulated(
                0.5, 0.8, [(0.5, 2.0), (0.65, 0.0), (0.8, 2.0)], normalize=True
            )
        TypeDistribution(spec)

    def test_type_from_signal(self):
        spec = QualitySpec.uniform(0.5, 0.9)
        assert spec.type_from_signal(0.8, 1) == 0.8
        assert spec.type_from_signal(0.8, 0) == pytest.approx(0.2)
        assert_allclose(
            spec.type_from_signal(np.array([0.6, 0.7]), np.array([0, 1])),
            [0.4, 0.7],
        )
        with pytest.raises(DomainError):
            spec.type_from_signal(0.3, 1)
        with pytest.raises(DomainError):
            spec.type_from_signal(0.8, 2)


class TestUniformClosedForms:
    """Uniform-quality CDFs agree with quadrature and frozen values."""

    def test_frozen_values(self, dist_u58):
        assert_allclose(dist_u58.cdf(1, 0.4), 0.2, rtol=1e-12)
        assert_allclose(dist_u58.cdf(0, 0.4), 0.28 / 0.6, rtol=1e-12)
        assert_allclose(dist_u58.sf(1, 0.4), 0.8, rtol=1e-12)
        assert_allclose(dist_u58.sf(0, 0.4), 0.32 / 0.6, rtol=1e-12)

    def test_matches_quadrature(self, dist_u58):
        for omega in (0, 1):
            for y in [0.21, 0.3, 0.45, 0.5, 0.55, 0.7, 0.79]:
                assert_allclose(
                    dist_u58.cdf(omega, y), quad_cdf(dist_u58, omega, y), atol=1e-10
                )

    def test_gap_plateau(self, dist_u658):
        # No mass in (1-R, R); CDFs are flat there at the split values.
        xs = np.linspace(0.36, 0.64, 9)
        assert_allclose(dist_u658.cdf(1, xs), 1 - 0.725, rtol=1e-12)
        assert_allclose(dist_u658.cdf(0, xs), 0.725, rtol=1e-12)
        assert_allclose(dist_u658.pdf(1, xs), 0.0, atol=0)

    def test_support_endpoints(self, dist_u58):
        for omega in (0, 1):
            assert dist_u58.cdf(omega, dist_u58.lo) == pytest.approx(0.0, abs=1e-15)
            assert dist_u58.cdf(omega, dist_u58.hi) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_support_clamps_and_warns(self, dist_u58):
        with pytest.warns(OutOfSupportWarning):
            assert dist_u58.cdf(1, 0.05) == 0.0
        with pytest.warns(OutOfSupportWarning):
            assert dist_u58.cdf(0, 0.95) == 1.0


class TestTabulatedForms:
    """Tabulated-quality CDFs agree with adaptive quadrature to 1e-10."""

    @pytest.mark.parametrize("make", [triangular_spec, bimodal_spec])
    def test_matches_quadrature(self, make):
        dist = TypeDistribution(make())
        ys = np.linspace(dist.lo + 1e-6, dist.hi - 1e-6, 17)
        for omega in (0, 1):
            for y in ys:
                assert_allclose(
                    dist.cdf(omega, float(y)),
                    quad_cdf(dist, omega, float(y)),
                    atol=1e-10,
                )

    @pytest.mark.parametrize("make", [triangular_spec, bimodal_spec])
    def test_total_mass_one(self, make):
        dist = TypeDistribution(make())
        for omega in (0, 1):
            assert_allclose(dist.cdf(omega, dist.hi), 1.0, atol=1e-12)

    def test_quality_quantile_inverts_cdf(self, dist_triangular):
        spec = dist_triangular.spec
        us = np.linspace(0.0, 1.0, 41)
        qs = dist_triangular.quality_quantile(us)
        assert np.all(np.diff(qs) >= 0)
        assert qs[0] == pytest.approx(spec.R)
        assert qs[-1] == pytest.approx(spec.Q)
        # Mass below the quantile equals the argument.
        kq = [k[0] for k in spec.knots]
        kd = [k[1] for k in spec.knots]
        for u, q in zip(us[1:-1], qs[1:-1]):
            val, _ = quad(
                lambda t: np.interp(t, kq, kd),
                spec.R,
                q,
                points=[p for p in kq if p < q],
                limit=200,
            )
            assert_allclose(val, u, atol=1e-9)


class TestLikelihoodRatios:
    """Tail likelihood ratios: limits, monotonicity, and frozen values."""

    def test_frozen_values(self, dist_u58):
        assert_allclose(dist_u58.lr_upper_tail(0.4), 1.5, rtol=1e-12)
        assert_allclose(dist_u58.lr_lower_tail(0.4), 0.2 / (0.28 / 0.6), rtol=1e-12)

    def test_limits_at_support_edges(self, dist_u58):
        Q = 0.8
        assert_allclose(dist_u58.lr_upper_tail(Q), Q / (1 - Q), rtol=1e-12)
        assert_allclose(dist_u58.lr_upper_tail(Q - 1e-13), Q / (1 - Q), rtol=1e-12)
        assert dist_u58.lr_upper_tail(1 - Q) == 1.0
        assert_allclose(dist_u58.lr_lower_tail(1 - Q), (1 - Q) / Q, rtol=1e-12)
        assert_allclose(dist_u58.lr_lower_tail(1 - Q + 1e-13), (1 - Q) / Q, rtol=1e-12)
        assert dist_u58.lr_lower_tail(Q) == 1.0

    def test_limit_continuity(self, dist_u58):
        # Values just outside the limit band approach the limit value.
        assert_allclose(dist_u58.lr_upper_tail(0.8 - 1e-9), 4.0, rtol=1e-7)
        assert_allclose(dist_u58.lr_lower_tail(0.2 + 1e-9), 0.25, rtol=1e-7)

    @settings(max_examples=40, deadline=None)
    @given(any_specs())
    def test_monotone_nondecreasing(self, spec):
        dist = TypeDistribution(spec)
        xs = np.linspace(dist.lo, dist.hi, 1000)
        up = dist.lr_upper_tail(xs)
        lo = dist.lr_lower_tail(xs)
        assert np.all(np.diff(up) >= -1e-9)
        assert np.all(np.diff(lo) >= -1e-9)
        assert np.all(up >= 1.0 - 1e-12)
        assert np.all(up <= spec.Q / (1 - spec.Q) + 1e-9)
        assert np.all(lo >= (1 - spec.Q) / spec.Q - 1e-12)
        assert np.all(lo <= 1.0 + 1e-12)

    def test_strictly_increasing_outside_gap(self, dist_u658):
        xs = np.linspace(0.21, 0.34, 50)
        assert np.all(np.diff(dist_u658.lr_upper_tail(xs)) > 0)
        xs = np.linspace(0.66, 0.79, 50)
        assert np.all(np.diff(dist_u658.lr_lower_tail(xs)) > 0)


class TestDistributionLaws:
    """Structural laws of the conditional type distributions."""

    @settings(max_examples=40, deadline=None)
    @given(any_specs())
    def test_point_likelihood_ratio(self, spec):
        dist = TypeDistribution(spec)
        ys = np.linspace(dist.lo + 1e-9, dist.hi - 1e-9, 300)
        f1, f0 = dist.pdf(1, ys), dist.pdf(0, ys)
        mask = f0 > 1e-12
        assert_allclose(f1[mask] / f0[mask], ys[mask] / (1 - ys[mask]), rtol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(any_specs())
    def test_state0_dominates(self, spec):
        dist = TypeDistribution(spec)
        ys = np.linspace(dist.lo, dist.hi, 400)
        assert np.all(dist.cdf(0, ys) >= dist.cdf(1, ys) - 1e-12)

    def test_dominance_strict_inside(self, dist_u58):
        ys = np.linspace(0.25, 0.75, 21)
        assert np.all(dist_u58.cdf(0, ys) > dist_u58.cdf(1, ys))

    @settings(max_examples=40, deadline=None)
    @given(any_specs())
    def test_cdf_sf_complement(self, spec):
        dist = TypeDistribution(spec)
        ys = np.linspace(dist.lo, dist.hi, 200)
        for omega in (0, 1):
            assert_allclose(dist.cdf(omega, ys) + dist.sf(omega, ys), 1.0, atol=1e-12)


class TestBeliefUpdates:
    def test_invest_update(self, dist_u58):
        assert_allclose(update_on_invest(1.0, dist_u58, 0.4), 1.5, rtol=1e-12)
        assert_allclose(update_on_invest(2.0, dist_u58, 0.2), 2.0, rtol=1e-12)

    def test_decline_update(self, dist_u58):
        assert_allclose(update_on_decline(1.0, dist_u58, 0.4), 0.2 / (0.28 / 0.6), rtol=1e-12)
        assert_allclose(update_on_decline(2.0, dist_u58, 0.8), 2.0, rtol=1e-12)

    def test_private_likelihood(self):
        assert private_likelihood(2.0, 0.8) == pytest.approx(8.0)
        assert private_likelihood(1.0, 0.5) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            private_likelihood(1.0, 1.0)
        with pytest.raises(DomainError):
            private_likelihood(1.0, 0.0)
        with pytest.raises(DomainError):
            private_likelihood(-1.0, 0.5)

    def test_updates_multiply_to_prior_mean(self, dist_u58):
        # E over actions of the posterior given world w reproduces the
        # conditional action split: sanity identity
        # sf_w * lr_upper-part + cdf_w * lr_lower-part telescopes.
        L, x = 1.7, 0.45
        up = update_on_invest(L, dist_u58, x)
        dn = update_on_decline(L, dist_u58, x)
        lam = L / (1 + L)
        p_invest = lam * dist_u58.sf(1, x) + (1 - lam) * dist_u58.sf(0, x)
        p_decline = 1 - p_invest
        post_mean = p_invest * up / (1 + up) + p_decline * dn / (1 + dn)
        assert_allclose(post_mean, lam, rtol=1e-12)
