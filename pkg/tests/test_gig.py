import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ghcopula.errors import DomainError
from ghcopula.gig import (
    GigParams, SamplerStats, check_admissible, gig_log_pdf, gig_mean, gig_moment,
    gig_sample, gig_var,
)
from ghcopula.specfun import bessel_k


def quad_norm(p):
    f = lambda x: math.exp(gig_log_pdf(p, x))
    m = gig_mean(p)
    pieces = [0, m / 4, m, 4 * m, 40 * m, np.inf]
    return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
               for a, b in zip(pieces[:-1], pieces[1:]))


def quad_cdf(p):
    f = lambda x: math.exp(gig_log_pdf(p, x))
    return lambda x: integrate.quad(f, 0, x, epsabs=1e-12, limit=200)[0]


@pytest.mark.parametrize("lam,kappa,psi", [
    (-0.5, 1, 1), (1, 1, 1), (0, 4, 1), (3.5, 0.2, 2), (-4, 3, 0.1), (0.3, 1e-3, 2), (10, 5, 5),
])
def test_density_integrates_to_one(lam, kappa, psi):
    assert abs(quad_norm(GigParams(lam, kappa, psi)) - 1) <= 1e-8


def test_nig_mixing_value():
    p = GigParams(-0.5, 1, 1)
    want = math.log(math.exp(-1) / (2 * math.sqrt(math.pi / 2) * math.exp(-1)))
    assert gig_log_pdf(p, 1.0) == pytest.approx(want, abs=1e-14)


def test_gamma_limit():
    x = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(np.exp(gig_log_pdf(GigParams(1, 0, 2), x)), np.exp(-x), rtol=1e-14)


def test_inverse_gamma_limit_density():
    p = GigParams(-3, 2, 0)
    x = np.array([0.3, 1.0, 5.0])
    np.testing.assert_allclose(gig_log_pdf(p, x), stats.invgamma.logpdf(x, 3, scale=1), rtol=1e-13)


def test_interior_value_against_normalizing_quadrature():
    # [DERIVED] normalizing constant of the kernel by quadrature
    kern = lambda x: math.exp(-0.5 * (1 / x + x))
    z = integrate.quad(kern, 0, np.inf, epsabs=1e-14)[0]
    want = math.log(kern(2.0) / z)
    assert gig_log_pdf(GigParams(1, 1, 1), 2.0) == pytest.approx(want, abs=1e-12)


def test_means():
    assert gig_mean(GigParams(-0.5, 1, 1)) == pytest.approx(1.0, abs=1e-14)
    assert gig_mean(GigParams(1, 1, 1)) == pytest.approx(bessel_k(2, 1) / bessel_k(1, 1), rel=1e-13)
    assert gig_mean(GigParams(0, 4, 1)) == pytest.approx(2 * bessel_k(1, 2) / bessel_k(0, 2), rel=1e-13)


def test_moment_by_quadrature():
    p = GigParams(0.7, 2.0, 0.5)
    f = lambda x: x * x * math.exp(gig_log_pdf(p, x))
    m2 = integrate.quad(f, 0, np.inf, epsabs=1e-12)[0]
    assert gig_moment(p, 2) == pytest.approx(m2, rel=1e-9)


def test_admissibility():
    for bad in [(-1, 0, 1), (0, 0, 1), (0, 1, 0), (1, 1, 0), (1, -1, 1)]:
        with pytest.raises(DomainError):
            check_admissible(*bad)
    assert GigParams(1, 0, 1).limiting == "gamma"
    assert GigParams(-1, 1, 0).limiting == "inverse_gamma"
    assert GigParams(1, 1, 1).limiting is None


def test_infinite_moment_rejected():
    with pytest.raises(DomainError):
        gig_moment(GigParams(-1, 1, 0), 1)


def test_density_domain():
    with pytest.raises(DomainError):
        gig_log_pdf(GigParams(1, 1, 1), 0.0)


def test_sampler_ks_against_quadrature_cdf():
    p = GigParams(1, 1, 1)
    x = gig_sample(p, 200_000, np.random.default_rng(4))
    cdf = quad_cdf(p)
    grid = np.quantile(x, np.linspace(0.01, 0.99, 60))
    emp = np.searchsorted(np.sort(x), grid, side="right") / x.size
    d = max(abs(emp[i] - cdf(g)) for i, g in enumerate(grid))
    assert d < 1.63 / math.sqrt(x.size)


@pytest.mark.parametrize("lam,kappa,psi", [
    (-0.5, 1, 1), (1, 1, 1), (0.2, 1e-4, 1), (-2.5, 0.05, 0.05), (8, 50, 1), (0, 1, 3),
])
def test_sampler_mean_within_4se(lam, kappa, psi):
    p = GigParams(lam, kappa, psi)
    stats_ = SamplerStats()
    x = gig_sample(p, 200_000, np.random.default_rng(9), stats_)
    se = math.sqrt(gig_var(p) / x.size)
    assert abs(x.mean() - gig_mean(p)) <= 4 * se
    assert stats_.acceptance_rate > 0.5


def test_reciprocal_property():
    rng = np.random.default_rng(12)
    a = 1 / gig_sample(GigParams(1.5, 2.0, 0.7), 20_000, rng)
    b = gig_sample(GigParams(-1.5, 0.7, 2.0), 20_000, rng)
    assert stats.ks_2samp(a, b).pvalue > 0.001


def test_limiting_samplers():
    rng = np.random.default_rng(3)
    g = gig_sample(GigParams(2, 0, 1), 100_000, rng)
    assert abs(g.mean() - 4) < 4 * math.sqrt(8 / g.size)
    ig = gig_sample(GigParams(-4, 2, 0), 100_000, rng)
    assert abs(ig.mean() - 1 / 3) < 4 * math.sqrt((1 / 9 / 2) / ig.size)


def test_determinism():
    p = GigParams(0.4, 1.2, 0.3)
    a = gig_sample(p, 1000, np.random.default_rng(1))
    b = gig_sample(p, 1000, np.random.default_rng(1))
    assert np.array_equal(a, b)


def test_sample_size_validation():
    with pytest.raises(DomainError):
        gig_sample(GigParams(1, 1, 1), 0, np.random.default_rng(0))


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(-6, 6), lk=st.floats(-4, 4), lp=st.floats(-4, 4))
def test_samples_positive_and_finite(lam, lk, lp):
    p = GigParams(lam, math.exp(lk), math.exp(lp))
    x = gig_sample(p, 500, np.random.default_rng(0))
    assert np.all(np.isfinite(x)) and np.all(x > 0)
