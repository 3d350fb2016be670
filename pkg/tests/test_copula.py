import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ghcopula.copula import (
    N_PARAMS, CopulaDataset, CopulaParams, FitOptions, FitResult, _Transform, aic,
    copula_log_density, copula_sample, dataset_loglik, default_init, fit_mle,
    stationary_bootstrap, stationary_bootstrap_indices,
)
from ghcopula.errors import DataError, DomainError
from ghcopula.gh import Subclass
from ghcopula.spatial import SiteSet
from oracles import integrate_copula

PAIR = SiteSet([[0.0, 0.0], [0.3, 0.0]])


@pytest.mark.parametrize("p", [
    CopulaParams(-0.5, 1, 1, 0, 0.6, 1.5),
    CopulaParams(1, 1, 1, 1, 0.7, 1.5),
    CopulaParams(2.5, 0.5, 2, -0.6, 0.4, 1.0),
    CopulaParams(-1.5, 2, 0.3, 0.4, 1.0, 0.8),
    CopulaParams(0.3, 0.8, 1.2, -1.2, 0.25, 2.0),
])
def test_copula_integrates_to_one(p):
    assert abs(integrate_copula(p, PAIR) - 1) <= 1e-4


def test_gaussian_independence_limit():
    sites = SiteSet([[0, 0], [50, 0]])
    p = CopulaParams.gaussian(0.01, 1.0)
    u = np.random.default_rng(0).uniform(0.01, 0.99, (20, 2))
    assert np.max(np.abs(copula_log_density(p, sites, u))) < 1e-12


def test_gaussian_matches_scipy():
    p = CopulaParams.gaussian(0.5, 1.0)
    rho = math.exp(-0.6)
    u = np.array([0.2, 0.9])
    z = stats.norm.ppf(u)
    want = (stats.multivariate_normal([0, 0], [[1, rho], [rho, 1]]).logpdf(z)
            - stats.norm.logpdf(z).sum())
    assert copula_log_density(p, PAIR, u) == pytest.approx(want, abs=1e-12)


def test_student_t_matches_scipy():
    p = CopulaParams.student_t(4.0, 0.5, 1.0)
    rho = math.exp(-0.6)
    u = np.array([0.05, 0.7])
    z = stats.t.ppf(u, 4)
    want = (stats.multivariate_t([0, 0], [[1, rho], [rho, 1]], df=4).logpdf(z)
            - stats.t.logpdf(z, 4).sum())
    assert copula_log_density(p, PAIR, u) == pytest.approx(want, abs=1e-10)


def test_exchangeable_symmetry():
    p = CopulaParams(1.2, 0.8, 1.5, 0.7, 0.5, 1.2)
    u = np.array([[0.13, 0.91], [0.5, 0.02]])
    np.testing.assert_allclose(copula_log_density(p, PAIR, u),
                               copula_log_density(p, PAIR, u[:, ::-1]), atol=1e-12)


def test_scale_invariance():
    p = CopulaParams(0.8, 1.7, 0.6, 0.9, 0.5, 1.2)
    q = p.canonical()
    assert q.kappa == q.psi
    u = np.random.default_rng(2).uniform(0.01, 0.99, (10, 2))
    np.testing.assert_allclose(copula_log_density(p, PAIR, u),
                               copula_log_density(q, PAIR, u), atol=1e-9)


def small_dataset(p=None, n=120, seed=0):
    p = p or CopulaParams(1, 1, 1, 1, 0.7, 1.5)
    sites = SiteSet.grid([0, 0.5, 1])
    return CopulaDataset(copula_sample(p, sites, n, np.random.default_rng(seed)), sites), p


def test_loglik_row_permutation_and_single_row():
    data, p = small_dataset()
    perm = np.random.default_rng(1).permutation(data.n)
    assert dataset_loglik(p, data.take_rows(perm)) == pytest.approx(dataset_loglik(p, data),
                                                                    abs=1e-9)
    row = data.u[3]
    two = CopulaDataset(np.vstack([row, row]), data.sites)
    assert dataset_loglik(p, two) == pytest.approx(2 * copula_log_density(p, data.sites, row),
                                                   abs=1e-12)


def test_column_swap_with_equidistant_sites():
    sites = SiteSet([[0, 0], [1, 0], [0.5, 2]])
    p = CopulaParams(0.5, 1.0, 1.0, 0.6, 1.0, 1.0)
    u = copula_sample(p, sites, 50, np.random.default_rng(3))
    swapped_sites = SiteSet([[1, 0], [0, 0], [0.5, 2]])
    a = dataset_loglik(p, CopulaDataset(u, sites))
    b = dataset_loglik(p, CopulaDataset(u[:, [1, 0, 2]], swapped_sites))
    assert a == pytest.approx(b, abs=1e-10)


def test_truth_beats_perturbation_mostly():
    truth = CopulaParams(1, 1, 1, 1, 0.7, 1.5)
    worse = CopulaParams(1, 1, 1, 1, 0.45, 1.1)
    sites = SiteSet.grid([0, 0.5, 1])
    rng = np.random.default_rng(77)
    wins = 0
    for _ in range(40):
        data = CopulaDataset(copula_sample(truth, sites, 150, rng), sites)
        wins += dataset_loglik(truth, data) > dataset_loglik(worse, data)
    assert wins >= 38


def test_dataset_validation():
    sites = SiteSet([[0, 0], [1, 0]])
    with pytest.raises(DataError):
        CopulaDataset([[0.5, 1.0], [0.2, 0.3]], sites)
    with pytest.raises(DataError):
        CopulaDataset([[0.5, 0.5]], sites)
    with pytest.raises(DataError):
        CopulaDataset([[0.5, 0.5, 0.5], [0.2, 0.2, 0.2]], sites)


def test_param_validation():
    with pytest.raises(DomainError):
        CopulaParams(1, 1, 0, 0, 1, 1)
    with pytest.raises(DomainError):
        CopulaParams(-1, 1, 0, 0.5, 1, 1)
    with pytest.raises(DomainError):
        CopulaParams(1, 1, 1, 0, 1, 3)


def test_param_dict_round_trip():
    for p in (CopulaParams(1, 2, 3, 0.5, 0.7, 1.2), CopulaParams.gaussian(0.4, 1.0),
              CopulaParams.student_t(5, 0.4, 1.0)):
        q = CopulaParams.from_dict(p.as_dict())
        assert q.as_dict() == p.as_dict()


def test_aic_counts():
    assert {s.value: k for s, k in N_PARAMS.items() if s is not Subclass.CAUCHY} == {
        "gaussian": 2, "student_t": 3, "hyperbolic": 5, "nig": 5, "full_gh": 6,
    }
    f = FitResult(None, 10.0, 0.0, Subclass.NIG, 0, True)
    assert aic(f) == 2 * 5 - 20
    g = FitResult(None, 10.0, 0.0, Subclass.GAUSSIAN, 0, True)
    assert aic(g) < aic(f)


@settings(max_examples=40, deadline=None)
@given(theta=st.lists(st.floats(-6, 6), min_size=6, max_size=6))
def test_transform_always_admissible(theta):
    tr = _Transform(Subclass.FULL_GH, 4, reduce_scale=False)
    p = tr.to_params(np.array(theta))
    assert p.kappa > 0 and p.psi > 0 and p.zeta > 0 and 0 < p.nu <= 2


def test_transform_round_trip():
    tr = _Transform(Subclass.FULL_GH, 4, reduce_scale=True)
    p = CopulaParams(0.3, 1.4, 1.4, -0.2, 0.6, 1.1)
    q = tr.to_params(tr.from_params(p))
    for k in ("lam", "kappa", "psi", "gamma_c", "zeta", "nu"):
        assert getattr(q, k) == pytest.approx(getattr(p, k), rel=1e-12)


def test_default_init_recovers_range_roughly():
    truth = CopulaParams.gaussian(0.5, 1.0)
    sites = SiteSet.grid([0, 0.25, 0.5, 0.75, 1])
    data = CopulaDataset(copula_sample(truth, sites, 2000, np.random.default_rng(4)), sites)
    init = default_init(data, Subclass.GAUSSIAN)
    assert 0.35 < init.zeta < 0.7


def test_gaussian_fit_recovers_truth():
    truth = CopulaParams.gaussian(0.5, 1.2)
    sites = SiteSet.grid([0, 0.25, 0.5, 0.75, 1])
    data = CopulaDataset(copula_sample(truth, sites, 1000, np.random.default_rng(6)), sites)
    fit = fit_mle(data, "gaussian")
    assert fit.converged
    assert abs(fit.params.zeta - 0.5) < 0.05 and abs(fit.params.nu - 1.2) < 0.12
    assert fit.aic == pytest.approx(4 - 2 * fit.loglik)


def test_nig_fit_nested_ordering():
    data, _ = small_dataset(n=200, seed=5)
    opts = FitOptions(n_starts=1)
    nig = fit_mle(data, "nig", opts=opts)
    gh = fit_mle(data, "full_gh", init=nig.params, opts=opts)
    assert gh.loglik >= nig.loglik - 1e-4
    assert nig.params.lam == -0.5


def test_inadmissible_init_rejected():
    data, _ = small_dataset(n=50)
    with pytest.raises(DomainError):
        fit_mle(data, "full_gh", init=CopulaParams.gaussian(0.7, 1.0))


def test_bootstrap_indices():
    rng = np.random.default_rng(0)
    idx = stationary_bootstrap_indices(100, 5.0, rng)
    assert idx.size == 100 and idx.min() >= 0 and idx.max() < 100
    steps = np.diff(idx) % 100
    assert np.mean(steps == 1) > 0.6
    iid = stationary_bootstrap_indices(1000, 1.0, rng)
    assert np.mean(np.diff(iid) % 1000 == 1) < 0.01
    with pytest.raises(DomainError):
        stationary_bootstrap_indices(10, 0.5, rng)


def test_bootstrap_runs_and_is_deterministic():
    data, _ = small_dataset(p=CopulaParams.gaussian(0.7, 1.5), n=60)
    opts = FitOptions(n_starts=1)
    a = stationary_bootstrap(data, 3, 2, "gaussian", np.random.default_rng(1), opts=opts)
    b = stationary_bootstrap(data, 3, 2, "gaussian", np.random.default_rng(1), opts=opts)
    assert len(a) == 2
    assert [f.loglik for f in a] == [f.loglik for f in b]
