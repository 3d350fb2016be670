"""
Extremal dependence summaries.

``chi_u = P(U_1 > u, U_2 > u) / P(U_1 > u)`` and
``eta_u = log P(U_1 > u) / log P(U_1 > u, U_2 > u)``, with the d-variate
versions obtained by requiring all listed coordinates to exceed ``u``.

For the GH copula with ``psi > 0`` the pair is asymptotically independent and
the limit of ``eta_u`` has a closed form (:func:`eta_gh`). It is the reciprocal
of the gauge function of the limit set evaluated at its coordinatewise
supremum, which :class:`GaugeContext`, :func:`gauge` and
:func:`supremum_point` expose for checking.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky
from scipy.stats import rankdata

from .copula import _model
from .errors import DomainError, ModelError
from .gh import Subclass, gh_sample
from .specfun import normal_cdf

#: Joint exceedance count below which an estimate is flagged unreliable.
MIN_EXCEEDANCES = 50


def eta_gh(psi, gamma1, gamma2, rho):
    """
    Limiting residual tail dependence coefficient of a bivariate GH copula
    with ``psi > 0``, skewness ``(gamma1, gamma2)`` and correlation ``rho``.
    """
    if not psi > 0:
        raise DomainError("eta_gh needs psi > 0")
    if not abs(rho) < 1:
        raise DomainError("eta_gh needs |rho| < 1")
    g1, g2 = float(gamma1), float(gamma2)
    m1 = (g1 + math.sqrt(psi + g1 * g1)) / psi
    m2 = (g2 + math.sqrt(psi + g2 * g2)) / psi
    a = psi * (1 - rho * rho) + g1 * g1 - 2 * rho * g1 * g2 + g2 * g2
    b = m1 * m1 - 2 * rho * m1 * m2 + m2 * m2
    den = math.sqrt(a * b) - m1 * (g1 - rho * g2) - m2 * (g2 - rho * g1)
    return (1 - rho * rho) / den


@dataclass(frozen=True)
class GaugeContext:
    """
    Geometry of the bivariate limit set for ``(psi, gamma, rho)``; ``h`` is the
    normalizer that puts the reference direction ``v`` on the boundary.
    """

    psi: float
    gamma1: float
    gamma2: float
    rho: float
    v: tuple = (1.0, 1.0)

    def __post_init__(self):
        if not self.psi > 0:
            raise DomainError("gauge geometry needs psi > 0")
        if not abs(self.rho) < 1:
            raise DomainError("gauge geometry needs |rho| < 1")

    @property
    def sigma_inv(self):
        r = self.rho
        return np.array([[1.0, -r], [-r, 1.0]]) / (1 - r * r)

    @property
    def gamma(self):
        return np.array([self.gamma1, self.gamma2])

    def _raw(self, u):
        si = self.sigma_inv
        g = self.gamma
        alpha2 = self.psi + g @ si @ g
        u = np.asarray(u, dtype=float)
        quad = np.einsum("...i,ij,...j->...", u, si, u)
        return np.sqrt(alpha2 * quad) - u @ (si @ g)

    @property
    def h(self):
        return float(self._raw(np.asarray(self.v, dtype=float)))


def gauge(ctx, u):
    """Gauge function of the limit set at ``u`` (shape ``(2,)`` or ``(n, 2)``)."""
    out = ctx._raw(u) / ctx.h
    return float(out) if np.ndim(out) == 0 else out


def supremum_point(ctx):
    """
    Coordinatewise supremum ``q = h (m_1, m_2)`` of the limit set, each
    coordinate being the larger root of ``psi t^2 - 2 h gamma_i t - h^2 = 0``.
    """
    h, psi = ctx.h, ctx.psi
    roots = [(h * g + h * math.sqrt(g * g + psi)) / psi for g in (ctx.gamma1, ctx.gamma2)]
    return np.array(roots)


@dataclass(frozen=True)
class TailDepEstimate:
    """
    Threshold summaries for one set of columns. ``chi_u``/``eta_u`` are None
    when no joint exceedance was observed; ``reliable`` is False below
    ``MIN_EXCEEDANCES`` joint exceedances.
    """

    u: float
    chi_u: float
    eta_u: float
    dimension: int
    n: int
    joint_exceedances: int
    chi_se: float = None
    eta_se: float = None

    @property
    def available(self):
        return self.chi_u is not None

    @property
    def reliable(self):
        return self.joint_exceedances >= MIN_EXCEEDANCES

    def as_dict(self):
        return {
            "u": self.u, "chi_u": self.chi_u, "eta_u": self.eta_u,
            "dimension": self.dimension, "n": self.n,
            "joint_exceedances": self.joint_exceedances,
            "chi_se": self.chi_se, "eta_se": self.eta_se,
            "available": self.available, "reliable": self.reliable,
        }


def _estimate(u, n, dim, n_single, n_joint, with_se):
    if n_joint == 0:
        return TailDepEstimate(u, None, None, dim, n, 0)
    p_s = n_single / n
    p_j = n_joint / n
    chi = p_j / p_s
    eta = math.log(p_s) / math.log(p_j) if p_j < 1 else 1.0
    chi_se = eta_se = None
    if with_se:
        se_j = math.sqrt(p_j * (1 - p_j) / n)
        chi_se = se_j / p_s
        if p_j < 1:
            eta_se = abs(math.log(p_s)) / (p_j * math.log(p_j) ** 2) * se_j
    return TailDepEstimate(float(u), chi, eta, dim, n, int(n_joint), chi_se, eta_se)


def _check_threshold(u):
    if not 0 < u < 1:
        raise DomainError(f"threshold must lie in (0, 1), got {u}")


def chi_eta_empirical(u_matrix, columns, u):
    """
    Empirical ``chi_u`` and ``eta_u`` of the listed columns of a pseudo-uniform
    matrix; the marginal proportion comes from the first listed column.
    """
    _check_threshold(u)
    x = np.asarray(u_matrix, dtype=float)[:, list(columns)]
    if x.shape[1] < 2:
        raise DomainError("need at least two columns")
    exceed = x > u
    n_single = int(exceed[:, 0].sum())
    n_joint = int(exceed.all(axis=1).sum())
    if n_single == 0:
        return TailDepEstimate(float(u), None, None, x.shape[1], x.shape[0], 0)
    return _estimate(u, x.shape[0], x.shape[1], n_single, n_joint, with_se=True)


def _rank_exceedances(x, thresholds):
    """
    Exceedance indicators of the rank-transformed columns of ``x`` above each
    threshold ``u``: rank / (n + 1) > u, found with order statistics instead of
    a full sort.
    """
    n = x.shape[0]
    out = []
    for u in thresholds:
        k = int(math.floor(u * (n + 1)))  # ranks 1..k do not exceed
        if k <= 0:
            out.append(np.ones_like(x, dtype=bool))
            continue
        if k >= n:
            out.append(np.zeros_like(x, dtype=bool))
            continue
        cut = np.partition(x, k - 1, axis=0)[k - 1]
        out.append(x > cut)
    return out


def _draw(p, sites, n, rng):
    model = _model(p, sites)
    if p.subclass is Subclass.GAUSSIAN:
        return rng.standard_normal((int(n), len(sites))) @ model.gh.chol.T
    return gh_sample(model.gh, n, rng)


def sample_summaries(x, column_sets, thresholds):
    """
    ``chi_u``/``eta_u`` with binomial standard errors for several column sets
    of one sample ``x`` (any margins; ranks are used). Returns a list over
    column sets of lists over thresholds.
    """
    n = x.shape[0]
    flags = _rank_exceedances(x, thresholds)
    result = []
    for cols in column_sets:
        cols = list(cols)
        row = []
        for u, f in zip(thresholds, flags):
            sub = f[:, cols]
            row.append(_estimate(u, n, len(cols), int(sub[:, 0].sum()),
                                 int(sub.all(axis=1).sum()), with_se=True))
        result.append(row)
    return result


def chi_eta_model(p, sites, columns, u, n_mc, rng):
    """
    Monte Carlo ``chi_u``/``eta_u`` of a fitted copula on the sites listed in
    ``columns``.

    ``u`` may be one threshold or a sequence, in which case a list of
    estimates is returned from the same sample.
    """
    scalar = np.ndim(u) == 0
    us = [float(u)] if scalar else [float(v) for v in u]
    for v in us:
        _check_threshold(v)
    columns = list(columns)
    if len(columns) < 2:
        raise DomainError("need at least two sites")
    sub_sites = sites.subset(columns)
    x = _draw(p, sub_sites, n_mc, rng)
    est = sample_summaries(x, [range(len(columns))], us)[0]
    return est[0] if scalar else est


def spearman_rho(x, y):
    """Pearson correlation of midranks; constant input raises :class:`DomainError`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d arrays of equal length")
    if x.size < 3:
        raise DomainError("need at least three observations")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0:
        raise DomainError("Spearman correlation is undefined for constant input")
    return float(np.clip(rx @ ry / den, -1.0, 1.0))


# ------------------------------------------------------- inverted Brown-Resnick


def br_variogram(h, zeta):
    """``2 h / zeta``."""
    return 2 * np.asarray(h, dtype=float) / zeta


def eta_inverted_br(h, zeta):
    """Residual tail dependence of the inverted Brown-Resnick pair at distance ``h``."""
    out = 1 / (2 * normal_cdf(np.sqrt(br_variogram(h, zeta)) / 2))
    return float(out) if np.ndim(out) == 0 else out


class _ExtremalFunctions:
    """Gaussian spectral functions rooted at each site for exact BR simulation."""

    def __init__(self, sites, zeta):
        dist = sites.distances()
        self.d = d = len(sites)
        self.gam = br_variogram(dist, zeta)
        self.chols = []
        for k in range(d):
            others = np.delete(np.arange(d), k)
            g = self.gam[k]
            cov = 0.5 * (g[others, None] + g[None, others] - self.gam[np.ix_(others, others)])
            try:
                self.chols.append((others, cholesky(cov, lower=True)))
            except np.linalg.LinAlgError:
                raise ModelError("Brown-Resnick spectral covariance is not positive definite") from None

    def draw(self, k, rng):
        others, chol = self.chols[k]
        y = np.zeros(self.d)
        y[others] = chol @ rng.standard_normal(others.size)
        return np.exp(y - 0.5 * self.gam[k])


def simulate_inverted_br(sites, zeta_br, n, rng):
    """
    ``n`` replicates of the inverted Brown-Resnick process with variogram
    ``2 h / zeta_br`` on ``sites``, returned on the uniform scale.

    The max-stable field ``Z`` (unit Frechet margins) is simulated exactly with
    extremal functions; then ``X = 1 / Z`` is unit exponential and
    ``U = 1 - exp(-X)``.
    """
    if not zeta_br > 0:
        raise DomainError("zeta_br must be positive")
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    ef = _ExtremalFunctions(sites, float(zeta_br))
    d = ef.d
    out = np.empty((n, d))
    for r in range(n):
        z = np.zeros(d)
        for k in range(d):
            inv = rng.exponential()
            while 1 / inv > z[k]:
                zeta = 1 / inv
                y = zeta * ef.draw(k, rng)
                if k == 0 or np.all(y[:k] < z[:k]):
                    np.maximum(z, y, out=z)
                inv += rng.exponential()
        out[r] = z
    return -np.expm1(-1 / out)
