"""Generalized hyperbolic copulas for spatial extremal dependence."""

from .copula import (
    N_PARAMS, CopulaDataset, CopulaParams, FitOptions, FitResult, aic,
    copula_log_density, copula_sample, dataset_loglik, fit_mle,
    stationary_bootstrap, stationary_bootstrap_indices,
)
from .data import RawDataset, rank_transform, read_observations, read_sites
from .errors import (
    ConfigError, DataError, DomainError, GhCopulaError, ModelError, NumericalError,
)
from .gh import (
    GhParams, Subclass, gh_cdf_1d, gh_linear, gh_log_pdf, gh_marginal,
    gh_quantile_1d, gh_sample,
)
from .gig import GigParams, gig_log_pdf, gig_mean, gig_sample, gig_var
from .spatial import PowExpCorr, SiteSet, build_sigma, corr
from .specfun import bessel_k, log_bessel_k, normal_cdf, normal_quantile
from .taildep import (
    GaugeContext, TailDepEstimate, chi_eta_empirical, chi_eta_model, eta_gh,
    eta_inverted_br, gauge, simulate_inverted_br, spearman_rho, supremum_point,
)

__all__ = [name for name in dir() if not name.startswith("_")]
