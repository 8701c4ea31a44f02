import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from rdem import InvalidBox, PriorSpec, sample_lambda, sample_x0, \
    uniform_box_prior


def make_prior(**kw):
    defaults = dict(theta_prior=uniform_box_prior([-100, 50], [0, 150]),
                    mu_x0=np.array([0.0]), c=1.0, a_lambda=1.0, b_lambda=1.0)
    defaults.update(kw)
    return PriorSpec(**defaults)


def test_lambda_moments_exponential_case():
    rng = np.random.default_rng(0)
    draws = sample_lambda(make_prior(), rng, size=100_000)
    assert draws.mean() == pytest.approx(1.0, abs=0.02)
    assert draws.var() == pytest.approx(1.0, abs=0.05)


def test_lambda_matches_analytic_cdf():
    rng = np.random.default_rng(1)
    prior = make_prior(a_lambda=2.5, b_lambda=0.7)
    draws = sample_lambda(prior, rng, size=100_000)
    ks = sps.kstest(draws, sps.gamma(a=2.5, scale=1 / 0.7).cdf).statistic
    assert ks < 0.01


def test_x0_degenerate_scale_returns_mean():
    rng = np.random.default_rng(2)
    prior = make_prior(mu_x0=np.array([3.25]), c=1e-12)
    x = sample_x0(prior, 1.0, rng)
    assert abs(x[0] - 3.25) < 1e-4


def test_x0_standard_normal_moments():
    rng = np.random.default_rng(3)
    prior = make_prior(mu_x0=np.array([0.0]), c=1.0)
    draws = sample_x0(prior, np.ones(100_000), rng)
    assert draws.mean() == pytest.approx(0.0, abs=0.02)
    assert draws.var() == pytest.approx(1.0, rel=0.02)


def test_x0_bivariate_covariance():
    rng = np.random.default_rng(4)
    prior = make_prior(mu_x0=np.array([1.0, -2.0]), c=4.0)
    lam = np.full(100_000, 2.0)
    draws = sample_x0(prior, lam, rng)
    cov = np.cov(draws.T)
    assert np.allclose(np.diag(cov), 4.0 / 2.0, rtol=0.02)
    assert abs(cov[0, 1]) < 0.05


def test_box_prior_boundary_and_interior():
    box = uniform_box_prior([-100.0, 50.0], [0.0, 150.0])
    assert not box.support(np.array([0.0, 100.0]))
    assert box.log_density(np.array([-100.0, 100.0])) == -np.inf
    interior = np.array([-0.5, 80.0])
    assert box.support(interior)
    assert box.log_density(interior) == pytest.approx(
        -(np.log(100.0) + np.log(100.0)))


def test_fhn_box_contains_reference_point():
    box = uniform_box_prior([-0.8, -0.8, 0.0], [0.8, 0.8, 8.0])
    assert box.support(np.array([0.2, 0.2, 3.0]))


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=4))
@settings(max_examples=60, deadline=None)
def test_support_iff_finite_density(theta):
    box = uniform_box_prior([-1.0, -2.0], [1.5, 2.5])
    th = np.array(theta[:2]) if len(theta) >= 2 else np.array([0.0, 0.0])
    inside = bool(box.support(th))
    assert inside == bool(np.isfinite(box.log_density(th)))


def test_box_sampling_uniform_and_reproducible():
    box = uniform_box_prior([-1.0, 10.0], [1.0, 20.0])
    a = box.sample(np.random.default_rng(7), 50_000)
    b = box.sample(np.random.default_rng(7), 50_000)
    assert a.tobytes() == b.tobytes()
    assert np.all(box.support(a))
    assert a[:, 0].mean() == pytest.approx(0.0, abs=0.02)
    assert a[:, 1].mean() == pytest.approx(15.0, abs=0.05)


def test_invalid_box_rejected():
    with pytest.raises(InvalidBox):
        uniform_box_prior([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(InvalidBox):
        uniform_box_prior([2.0], [1.0])


def test_prior_spec_validation_and_resolution():
    with pytest.raises(ValueError):
        make_prior(c=0.0)
    with pytest.raises(ValueError):
        make_prior(a_lambda=-1.0)
    unresolved = PriorSpec(theta_prior=uniform_box_prior([0.0], [1.0]))
    with pytest.raises(ValueError):
        sample_x0(unresolved, 1.0, np.random.default_rng(0))
    resolved = unresolved.resolved(np.array([4.2]))
    assert resolved.mu_x0.tolist() == [4.2]
    already = make_prior(mu_x0=np.array([1.0])).resolved(np.array([9.9]))
    assert already.mu_x0.tolist() == [1.0]
