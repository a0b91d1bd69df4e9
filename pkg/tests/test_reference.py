from __future__ import annotations

import time

import numpy as np
import pytest
from scipy import stats

from depthfilter.depth.elliptical import LocationScatter
from depthfilter.depth.halfspace import random_tukey_depths, random_tukey_self_depths
from depthfilter.errors import ConfigError, NumericalError, UnsupportedFamilyError
from depthfilter.reference import distributions
from depthfilter.reference.distributions import (
    DepthRegionSpec,
    EmpiricalReference,
    GaussianReference,
    SkewNormalReference,
    StudentT5Reference,
    build_reference,
    cbeta_contains,
    chi2_cdf,
    chi2_quantile,
    delta_cdf,
    delta_quantile,
    marginal_cdf,
    sample,
    sn_mean_cov,
    theoretical_depth,
)


def _std(d: int) -> LocationScatter:
    return LocationScatter(np.zeros(d), np.eye(d))


# ------------------------------ chi-squared ------------------------------

def test_chi2_quantile_known_values():
    assert chi2_quantile(1, 0.5) == pytest.approx(0.4549364231195724, abs=1e-10)
    # chi2_2 is exponential with mean 2
    assert chi2_quantile(2, 0.95) == pytest.approx(-2.0 * np.log(0.05), abs=1e-10)


@pytest.mark.parametrize("d,q", [(1, 0.99), (3, 0.9999), (20, 0.99), (20, 0.05)])
def test_chi2_quantile_inverts_cdf(d, q):
    x = chi2_quantile(d, q)
    assert chi2_cdf(x, d) == pytest.approx(q, abs=1e-10)
    assert x == pytest.approx(stats.chi2.ppf(q, d), rel=1e-8)


@pytest.mark.parametrize("d,q", [(0, 0.5), (2, 0.0), (2, 1.0)])
def test_chi2_quantile_rejects_bad_input(d, q):
    with pytest.raises(ConfigError):
        chi2_quantile(d, q)


def test_distance_law_per_family():
    assert delta_cdf("gaussian", 2)(np.array([2.0]))[0] == pytest.approx(1.0 - np.exp(-1.0))
    assert delta_quantile("t5", 1, 0.95) == pytest.approx(stats.t.ppf(0.975, 5) ** 2, rel=1e-9)
    with pytest.raises(UnsupportedFamilyError):
        delta_cdf("skewnormal", 2)


# ------------------------------ elliptical regions ------------------------------

@pytest.mark.parametrize("cls", [GaussianReference, StudentT5Reference])
def test_univariate_region_is_two_tails(cls):
    # for d = 1 the region {depth <= eta} holds the two (1 - beta)/2 tails
    spec = cls(_std(1)).region(0.99)
    assert spec.eta_beta == pytest.approx(0.005, abs=1e-9)


def test_gaussian_region_in_two_dims():
    spec = GaussianReference(_std(2)).region(0.99)
    assert spec.delta_cutoff == pytest.approx(stats.chi2.ppf(0.99, 2), rel=1e-9)
    assert spec.eta_beta == pytest.approx(stats.norm.sf(np.sqrt(stats.chi2.ppf(0.99, 2))), rel=1e-8)


def test_cbeta_contains_univariate():
    ref = GaussianReference(_std(1))
    spec = ref.region(0.99)  # cutoff chi2_1(0.99) = 6.63
    inside = cbeta_contains(np.array([[np.sqrt(7.0)], [2.5], [-3.0]]), ref, spec)
    assert inside.tolist() == [True, False, True]


def test_region_spec_validation():
    with pytest.raises(ConfigError):
        DepthRegionSpec(beta=1.0, eta_beta=0.1)
    with pytest.raises(ConfigError):
        DepthRegionSpec(beta=0.5, eta_beta=-0.1)


def test_marginal_cdf():
    assert marginal_cdf(GaussianReference(_std(2)), 0.0) == pytest.approx(0.5)
    assert marginal_cdf(StudentT5Reference(_std(2)), 1.0) == pytest.approx(stats.t.cdf(1.0, 5))
    emp = EmpiricalReference(np.random.default_rng(0).standard_normal((1000, 2)), n_directions=20, seed=0)
    with pytest.raises(UnsupportedFamilyError):
        marginal_cdf(emp, 0.0)


def test_sampling_moments(rng):
    ls = LocationScatter(np.array([1.0, -1.0]), np.array([[2.0, 0.5], [0.5, 1.0]]))
    x = sample(GaussianReference(ls), 20000, rng)
    assert np.allclose(x.mean(axis=0), ls.location, atol=0.05)
    assert np.allclose(np.cov(x, rowvar=False), ls.scatter, atol=0.08)
    t = sample(StudentT5Reference(ls), 20000, rng)
    assert np.allclose(t.mean(axis=0), ls.location, atol=0.05)
    with pytest.raises(ConfigError):
        sample(GaussianReference(ls), 0, rng)


# ------------------------------ skew-normal ------------------------------

def test_sn_mean_cov_scalar():
    mean, cov = sn_mean_cov(np.zeros(1), np.eye(1), np.ones(1))
    assert mean[0] == pytest.approx(1.0 / np.sqrt(np.pi))
    assert cov[0, 0] == pytest.approx(1.0 - 1.0 / np.pi)


def test_sn_mean_cov_rejects_bad_omega():
    with pytest.raises(NumericalError):
        sn_mean_cov(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))


def test_skewnormal_reference_moments_and_draws():
    ref = SkewNormalReference(np.zeros(2), np.eye(2), np.array([10.0, 10.0]), ref_sample_size=2000, n_directions=100, seed=4)
    mean, cov = sn_mean_cov(np.zeros(2), np.eye(2), np.array([10.0, 10.0]))
    assert np.allclose(ref.mean_cov().location, mean)
    assert np.allclose(ref.mean_cov().scatter, cov)
    x = ref.draw(20000, np.random.default_rng(1))
    assert np.allclose(x.mean(axis=0), mean, atol=0.03)
    assert ref.describe()["reference_size"] == 2000


def test_skewnormal_injection_centers_straddle_the_gaussian_ellipse():
    ref = SkewNormalReference(np.zeros(2), np.eye(2), np.array([10.0, 10.0]), ref_sample_size=1000, n_directions=10)
    d2 = ref.mahalanobis_sq(np.array([[-0.2, -0.25], [-0.5, -0.6]]))
    assert d2[0] == pytest.approx(3.39, abs=0.02)
    assert d2[1] == pytest.approx(6.76, abs=0.02)
    cut = stats.chi2.ppf(0.95, 2)
    assert d2[0] < cut < d2[1]


def test_skewnormal_dimension_mismatch():
    with pytest.raises(ConfigError):
        SkewNormalReference(np.zeros(2), np.eye(3), np.ones(2), ref_sample_size=1000)


# ------------------------------ sampled references ------------------------------

def test_empirical_reference_needs_enough_draws():
    with pytest.raises(ConfigError):
        EmpiricalReference(np.zeros((999, 2)), n_directions=10, seed=0)


def test_empirical_region_mass():
    ref = build_reference("empirical", _std(2), ref_sample_size=2000, n_directions=200, seed=3)
    spec = ref.region(0.9)
    frac = float(np.mean(ref.reference_depths() <= spec.eta_beta))
    assert frac >= 0.099
    assert ref.region(0.9) is spec  # cached


def test_empirical_depth_tracks_gaussian_closed_form():
    ls = _std(2)
    emp = build_reference("empirical", ls, ref_sample_size=20000, n_directions=500, seed=1)
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.5, -1.0]])
    exact = GaussianReference(ls).theoretical_depth(pts)
    approx = theoretical_depth(pts, emp)
    assert np.allclose(approx, exact, atol=0.02)


def test_empirical_reference_is_keyed_by_context():
    a = build_reference("empirical", _std(2), ref_sample_size=1000, n_directions=20, seed=3, context=(2, 0, 1))
    b = build_reference("empirical", _std(2), ref_sample_size=1000, n_directions=20, seed=3, context=(2, 0, 1))
    c = build_reference("empirical", _std(2), ref_sample_size=1000, n_directions=20, seed=3, context=(2, 0, 2))
    assert np.array_equal(a.draws, b.draws)
    assert not np.array_equal(a.draws, c.draws)


def test_large_reference_keeps_exact_tails(monkeypatch):
    monkeypatch.setattr(distributions, "_PRECOMPUTE_CELLS", 0)
    g = np.random.default_rng(6)
    draws = g.standard_normal((4000, 2))
    ref = EmpiricalReference(draws, n_directions=150, seed=2)
    assert ref.describe()["exact_tail"] == 80
    U = ref.directions

    far = np.vstack([g.standard_normal((20, 2)) * 3.5, draws[:5] * 3.0])
    exact = random_tukey_depths(far, draws, U)
    got = ref.theoretical_depth(far)
    small = exact <= 80 / 4000
    assert small.sum() >= 10
    assert np.array_equal(got[small], exact[small])
    assert np.all(got[~small] > 80 / 4000)

    own = random_tukey_self_depths(draws, U)
    tail = own <= 80 / 4000
    assert np.array_equal(ref.reference_depths()[tail], own[tail])
    assert ref.region(0.99).eta_beta == pytest.approx(float(np.quantile(own, 0.01)), abs=1e-15)

    # deeper points come off the quantile grid
    deep = np.array([[0.0, 0.0], [0.5, -0.3], [-1.0, 0.2]])
    assert np.allclose(ref.theoretical_depth(deep), random_tukey_depths(deep, draws, U), atol=0.01)


@pytest.mark.slow
def test_default_size_empirical_reference_is_usable():
    ref = build_reference("empirical", _std(2), seed=1)
    assert ref.describe()["exact_tail"] == 2000
    q = np.random.default_rng(2).standard_normal((100, 2)) * 1.5
    start = time.perf_counter()
    depths = ref.theoretical_depth(q)
    spec = ref.region(0.99)
    assert time.perf_counter() - start < 60.0
    assert np.allclose(depths, GaussianReference(_std(2)).theoretical_depth(q), atol=0.03)
    assert 0.0 < spec.eta_beta < 0.02


def test_univariate_empirical_depth_is_exact_against_draws():
    draws = np.arange(1000, dtype=float)
    ref = EmpiricalReference(draws, n_directions=5, seed=0)
    assert ref.theoretical_depth(np.array([499.5]))[0] == pytest.approx(0.5)


def test_build_reference_families():
    assert isinstance(build_reference("gaussian", _std(2)), GaussianReference)
    assert isinstance(build_reference("t5", _std(2)), StudentT5Reference)
    with pytest.raises(UnsupportedFamilyError):
        build_reference("skewnormal", _std(2))
    with pytest.raises(ConfigError):
        build_reference("cauchy", _std(2))


@pytest.mark.slow
def test_gaussian_region_mass_by_monte_carlo():
    ref = GaussianReference(_std(3))
    spec = ref.region(0.95)
    x = ref.sample(200_000, np.random.default_rng(11))
    assert np.mean(ref.cbeta_contains(x, spec)) == pytest.approx(0.05, abs=0.003)
