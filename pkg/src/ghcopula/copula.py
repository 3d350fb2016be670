"""
GH copula with a powered exponential correlation structure.

The copula of ``GH_d(lam, kappa, psi, gamma_c 1_d, 0, Sigma(zeta, nu))`` has
density

.. math::
    c(u) = \\frac{f\\{F^{-1}(u_1), \\dots, F^{-1}(u_d)\\}}{\\prod_i f_1\\{F^{-1}(u_i)\\}},

where every margin is the same ``GH_1(lam, kappa, psi, gamma_c, 0, 1)``.
Gaussian and Student-t copulas are handled with their closed forms.

Because the copula does not change when all margins are rescaled together,
``(kappa, psi, gamma_c)`` and ``(c kappa, psi / c, gamma_c / sqrt(c))`` give the
same model. By default the fit therefore searches over ``kappa = psi`` only
and reports that representative.
"""

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, stats
from scipy.linalg import solve_triangular
from scipy.special import expit, logit, ndtr, ndtri

from ._parallel import ordered_map
from .errors import DataError, DomainError, GhCopulaError, ModelError, NumericalError
from .gh import (
    GhParams, Subclass, _log_pdf_core, _log_pdf_t, _std_log_pdf, gh_sample,
    univariate_table,
)
from .gig import check_admissible
from .spatial import PowExpCorr, SiteSet, build_sigma

#: Free parameter counts (AIC) per subclass.
N_PARAMS = {
    Subclass.GAUSSIAN: 2,
    Subclass.STUDENT_T: 3,
    Subclass.HYPERBOLIC: 5,
    Subclass.NIG: 5,
    Subclass.FULL_GH: 6,
    Subclass.CAUCHY: 2,
}

_NAMES = ("lam", "kappa", "psi", "gamma_c", "zeta", "nu")


@dataclass(frozen=True)
class CopulaParams:
    """
    GH copula parameters with ``gamma = gamma_c 1_d``, ``mu = 0`` and a
    unit-diagonal ``Sigma`` from ``PowExpCorr(zeta, nu)``.

    For the Gaussian subclass ``lam``, ``kappa``, ``psi`` and ``gamma_c`` carry no
    meaning and are stored as NaN. The Student-t copula uses
    ``lam = -df/2``, ``kappa = df``, ``psi = 0``, ``gamma_c = 0``.
    """

    lam: float
    kappa: float
    psi: float
    gamma_c: float
    zeta: float
    nu: float
    subclass: Subclass = Subclass.FULL_GH

    def __post_init__(self):
        sub = Subclass.parse(self.subclass)
        object.__setattr__(self, "subclass", sub)
        for name in _NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))
        PowExpCorr(self.zeta, self.nu)
        if sub is Subclass.GAUSSIAN:
            return
        check_admissible(self.lam, self.kappa, self.psi)
        if self.psi == 0 and self.gamma_c != 0:
            raise DomainError("psi = 0 requires gamma_c = 0 (Student-t limit)")
        if self.kappa == 0:
            raise DomainError("kappa = 0 copulas are not supported")

    @classmethod
    def gaussian(cls, zeta, nu):
        nan = float("nan")
        return cls(nan, nan, nan, nan, zeta, nu, Subclass.GAUSSIAN)

    @classmethod
    def student_t(cls, df, zeta, nu):
        return cls(-df / 2, df, 0.0, 0.0, zeta, nu, Subclass.STUDENT_T)

    @property
    def corr(self):
        return PowExpCorr(self.zeta, self.nu)

    def canonical(self):
        """Equivalent parameters with ``kappa = psi`` (same copula)."""
        if self.subclass in (Subclass.GAUSSIAN, Subclass.STUDENT_T, Subclass.CAUCHY):
            return self
        c = math.sqrt(self.psi / self.kappa)
        w = math.sqrt(self.kappa * self.psi)
        return replace(self, kappa=w, psi=w, gamma_c=self.gamma_c / math.sqrt(c))

    def to_gh(self, sites):
        """The underlying ``GhParams`` on ``sites``."""
        if self.subclass is Subclass.GAUSSIAN:
            raise DomainError("the Gaussian copula has no GH representation")
        d = len(sites)
        return GhParams(
            self.lam, self.kappa, self.psi, np.full(d, self.gamma_c), np.zeros(d),
            build_sigma(sites, self.corr),
        )

    def as_dict(self):
        out = {"subclass": self.subclass.value}
        for name in _NAMES:
            v = getattr(self, name)
            out[name] = None if math.isnan(v) else v
        return out

    @classmethod
    def from_dict(cls, d):
        vals = {k: (float("nan") if d.get(k) is None else d[k]) for k in _NAMES}
        return cls(subclass=d.get("subclass", "full_gh"), **vals)


@dataclass(frozen=True)
class CopulaDataset:
    """``n x d`` pseudo-uniform observations on ``sites``."""

    u: np.ndarray
    sites: SiteSet

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2:
            raise DataError("u must be a 2-d array (replicates x sites)")
        if u.shape[0] < 2:
            raise DataError("at least two replicates are needed")
        if u.shape[1] != len(self.sites):
            raise DataError(f"{u.shape[1]} columns but {len(self.sites)} sites")
        if np.any(~((u > 0) & (u < 1))):
            raise DataError("pseudo-uniform entries must lie strictly inside (0, 1)")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def d(self):
        return self.u.shape[1]

    def take_rows(self, rows):
        return CopulaDataset(self.u[np.asarray(rows)], self.sites)


class _Model:
    """Per-parameter-vector evaluation state (correlation factor, margins)."""

    def __init__(self, p, sites):
        self.p = p
        self.sub = p.subclass
        self.sigma = build_sigma(sites, p.corr)
        d = len(sites)
        if self.sub is Subclass.GAUSSIAN:
            self.gh = GhParams(1.0, 1.0, 1.0, np.zeros(d), np.zeros(d), self.sigma)
        else:
            self.gh = p.to_gh(sites)
        if self.sub is not Subclass.GAUSSIAN and p.psi > 0:
            self.table = univariate_table(p.lam, p.kappa, p.psi, p.gamma_c)

    def quantiles(self, u):
        if self.sub is Subclass.GAUSSIAN:
            return ndtri(u)
        if self.p.psi == 0:
            return stats.t.ppf(u, -2 * self.p.lam)
        return self.table.ppf(u)

    def cdf(self, x):
        if self.sub is Subclass.GAUSSIAN:
            return ndtr(x)
        if self.p.psi == 0:
            return stats.t.cdf(x, -2 * self.p.lam)
        return self.table.cdf(x)

    def log_density_rows(self, u):
        u = np.atleast_2d(u)
        x = self.quantiles(u)
        gh = self.gh
        z = solve_triangular(gh.chol, x.T, lower=True)
        quad = np.einsum("ij,ij->j", z, z)
        d = gh.dim
        if self.sub is Subclass.GAUSSIAN:
            joint = -0.5 * (d * np.log(2 * np.pi) + gh.logdet + quad)
            margins = -0.5 * (np.log(2 * np.pi) + x * x)
        elif self.p.psi == 0:
            df = -2 * self.p.lam
            joint = _log_pdf_t(-df / 2, df, d, gh.logdet, quad)
            margins = _log_pdf_t(-df / 2, df, 1, 0.0, x * x)
        else:
            p = self.p
            lin = x @ gh.sigma_inv_gamma
            joint = _log_pdf_core(
                p.lam, p.kappa, p.psi, d, gh.logdet, gh.gamma_quad, quad, lin
            )
            margins = _std_log_pdf(p.lam, p.kappa, p.psi, p.gamma_c, x)
        return joint - margins.sum(axis=1), joint, margins


@functools.lru_cache(maxsize=16)
def _model(p, sites):
    return _Model(p, sites)


def copula_log_density(p, sites, u):
    """
    Log copula density at one row ``u`` (shape ``(d,)``) or each row of an
    ``(n, d)`` array.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("copula arguments must lie strictly inside (0, 1)")
    if u.shape[-1] != len(sites):
        raise DomainError(f"expected {len(sites)} coordinates, got {u.shape[-1]}")
    out = _model(p, sites).log_density_rows(u)[0]
    return float(out[0]) if u.ndim == 1 else out


def dataset_loglik(p, data):
    """
    Full (uncensored) copula log-likelihood of a dataset.

    The marginal quantile table is built once for the parameter vector and
    reused for all ``n * d`` entries.

    Raises
    ------
    NumericalError
        If any row contribution is not finite; ``diagnostics`` lists the
        offending rows and columns.
    """
    rows, joint, margins = _model(p, data.sites).log_density_rows(data.u)
    if not np.all(np.isfinite(rows)):
        bad_rows = np.flatnonzero(~np.isfinite(rows))
        bad_cols = np.flatnonzero(~np.all(np.isfinite(margins), axis=0))
        raise NumericalError(
            "non-finite log-likelihood contributions",
            {"rows": bad_rows[:20].tolist(), "columns": bad_cols[:20].tolist(),
             "params": p.as_dict()},
        )
    return float(math.fsum(rows))


def copula_sample(p, sites, n, rng):
    """``n`` draws from the copula: GH (or Gaussian / t) draws pushed through the margins."""
    model = _model(p, sites)
    if p.subclass is Subclass.GAUSSIAN:
        x = rng.standard_normal((int(n), len(sites))) @ model.gh.chol.T
    else:
        x = gh_sample(model.gh, n, rng)
        if p.psi == 0:
            # standardize the inverse-gamma mixture to a unit-scale t
            x = x / math.sqrt(p.kappa / (-2 * p.lam))
    u = model.cdf(x)
    tiny = np.finfo(float).tiny
    return np.clip(u, tiny, np.nextafter(1.0, 0.0))


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class FitOptions:
    """Nelder-Mead settings; tolerances apply in the transformed space."""

    max_iter: int = 4000
    xatol: float = 1e-6
    fatol: float = 1e-8
    n_starts: int = 3
    initial_step: float = 0.4
    reduce_scale: bool = True

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class FitResult:
    params: CopulaParams
    loglik: float
    aic: float
    subclass: Subclass
    iterations: int
    converged: bool
    evaluations: int = 0
    starts: list = field(default_factory=list)
    bootstrap: list = None
    error: str = None

    def as_dict(self):
        return {
            "subclass": self.subclass.value,
            "params": None if self.params is None else self.params.as_dict(),
            "loglik": self.loglik,
            "aic": self.aic,
            "n_params": N_PARAMS[self.subclass],
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "starts": self.starts,
            "error": self.error,
        }


def aic(fit):
    """``2 k - 2 loglik`` with ``k`` the subclass parameter count."""
    return 2 * N_PARAMS[fit.subclass] - 2 * fit.loglik


class _Transform:
    """Maps unconstrained vectors to admissible ``CopulaParams`` of a subclass."""

    def __init__(self, subclass, d, reduce_scale=True):
        self.sub = subclass
        self.d = d
        self.reduce = reduce_scale
        if subclass is Subclass.GAUSSIAN or subclass is Subclass.CAUCHY:
            self.names = ("zeta", "nu")
        elif subclass is Subclass.STUDENT_T:
            self.names = ("df", "zeta", "nu")
        else:
            shape = ("lam",) if subclass is Subclass.FULL_GH else ()
            scale = ("omega",) if reduce_scale else ("kappa", "psi")
            self.names = shape + scale + ("gamma_c", "zeta", "nu")

    def to_params(self, theta):
        v = dict(zip(self.names, theta))
        zeta = math.exp(v["zeta"])
        nu = 2 * expit(v["nu"])
        if self.sub is Subclass.GAUSSIAN:
            return CopulaParams.gaussian(zeta, nu)
        if self.sub is Subclass.CAUCHY:
            return CopulaParams(-0.5, 1.0, 0.0, 0.0, zeta, nu, Subclass.CAUCHY)
        if self.sub is Subclass.STUDENT_T:
            return CopulaParams.student_t(math.exp(v["df"]), zeta, nu)
        lam = Subclass.fixed(self.sub, self.d).get("lam", v.get("lam"))
        if self.reduce:
            kappa = psi = math.exp(v["omega"])
        else:
            kappa, psi = math.exp(v["kappa"]), math.exp(v["psi"])
        return CopulaParams(lam, kappa, psi, v["gamma_c"], zeta, nu, self.sub)

    def from_params(self, p):
        if self.reduce and self.sub not in (
            Subclass.GAUSSIAN, Subclass.STUDENT_T, Subclass.CAUCHY
        ):
            p = p.canonical()
        nu = min(max(p.nu, 1e-6), 2 - 1e-9)
        out = {
            "zeta": math.log(p.zeta), "nu": float(logit(nu / 2)),
            "lam": p.lam, "gamma_c": p.gamma_c,
        }
        if self.sub is Subclass.STUDENT_T:
            out["df"] = math.log(-2 * p.lam)
        elif self.sub not in (Subclass.GAUSSIAN, Subclass.CAUCHY):
            out["omega"] = 0.5 * math.log(p.kappa * p.psi)
            out["kappa"] = math.log(p.kappa)
            out["psi"] = math.log(p.psi)
        return np.array([out[n] for n in self.names])


def spearman_matrix(u):
    """Spearman correlation matrix of the columns of ``u``."""
    ranks = stats.rankdata(u, axis=0)
    return np.corrcoef(ranks, rowvar=False)


def default_init(data, subclass):
    """
    Moment-flavoured starting point: ``nu = 1`` and ``zeta`` from the decay of
    the Gaussian-equivalent Spearman correlation with distance (the distance
    at which it halves is ``zeta log 2``); ``lam = kappa = psi = 1``,
    ``gamma_c = 0``.
    """
    h = data.sites.distances()
    iu = np.triu_indices(data.d, 1)
    s = spearman_matrix(data.u)[iu]
    rho = 2 * np.sin(np.pi * s / 6)
    dist = h[iu]
    ok = (rho > 0.02) & (rho < 0.98)
    if ok.sum() >= 1:
        y = -np.log(rho[ok])
        zeta = float(np.sum(dist[ok] ** 2) / np.sum(dist[ok] * y))
    else:
        zeta = float(np.median(dist))
    zeta = min(max(zeta, 1e-3 * dist.max()), 100 * dist.max())
    sub = Subclass.parse(subclass)
    if sub is Subclass.GAUSSIAN:
        return CopulaParams.gaussian(zeta, 1.0)
    if sub is Subclass.STUDENT_T:
        return CopulaParams.student_t(10.0, zeta, 1.0)
    if sub is Subclass.CAUCHY:
        return CopulaParams(-0.5, 1.0, 0.0, 0.0, zeta, 1.0, sub)
    lam = Subclass.fixed(sub, data.d).get("lam", 1.0)
    return CopulaParams(lam, 1.0, 1.0, 0.0, zeta, 1.0, sub)


def _start_offsets(names, n_starts):
    """Deterministic perturbations (transformed space) for extra starts."""
    table = {
        "lam": (0.0, -1.5, 1.0),
        "omega": (0.0, 0.7, -0.7),
        "kappa": (0.0, 0.7, -0.7),
        "psi": (0.0, 0.7, -0.7),
        "gamma_c": (0.0, 0.5, -0.5),
        "df": (0.0, -1.0, 1.0),
        "zeta": (0.0, 0.3, -0.3),
        "nu": (0.0, 1.0, -1.0),
    }
    out = []
    for i in range(n_starts):
        k = i % 3
        scale = 1 + i // 3
        out.append(np.array([scale * table[n][k] for n in names]))
    return out


def fit_mle(data, subclass, init=None, opts=None):
    """
    Maximum-likelihood fit of a copula subclass by multi-start Nelder-Mead.

    Parameters
    ----------
    data : CopulaDataset
    subclass : Subclass or str
    init : CopulaParams, optional
        First starting point; defaults to :func:`default_init`.
    opts : FitOptions, optional

    Returns
    -------
    FitResult
        Best start; ``converged`` is set when its final simplex has diameter
        below ``xatol`` or function spread below ``fatol``.
    """
    sub = Subclass.parse(subclass)
    opts = opts or FitOptions()
    tr = _Transform(sub, data.d, opts.reduce_scale)
    if init is None:
        init = default_init(data, sub)
    elif init.subclass is not sub:
        init = replace(init, subclass=sub)
    theta0 = tr.from_params(init)
    if not np.all(np.isfinite(theta0)):
        raise DomainError(f"inadmissible starting point {init}")

    evals = [0]

    def objective(theta):
        evals[0] += 1
        try:
            return -dataset_loglik(tr.to_params(theta), data)
        except (GhCopulaError, ValueError, OverflowError, FloatingPointError):
            return np.inf

    best = None
    starts = []
    for offset in _start_offsets(tr.names, opts.n_starts):
        x0 = theta0 + offset
        if not np.isfinite(objective(x0)):
            x0 = theta0
        simplex = np.vstack([x0, x0 + opts.initial_step * np.eye(x0.size)])
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={
                "xatol": opts.xatol, "fatol": opts.fatol, "maxiter": opts.max_iter,
                "maxfev": 4 * opts.max_iter, "initial_simplex": simplex,
                "adaptive": x0.size > 4,
            },
        )
        sim, fsim = res.final_simplex
        diam = float(np.max(np.abs(sim[1:] - sim[0])))
        spread = float(np.max(np.abs(fsim[1:] - fsim[0])))
        conv = bool(np.isfinite(res.fun) and (diam < opts.xatol or spread < opts.fatol))
        starts.append({
            "loglik": -float(res.fun), "iterations": int(res.nit),
            "converged": conv, "diameter": diam, "spread": spread,
        })
        if best is None or res.fun < best[0].fun:
            best = (res, conv)
    res, conv = best
    if not np.isfinite(res.fun):
        raise NumericalError("no start produced a finite likelihood", {"subclass": sub.value})
    params = tr.to_params(res.x)
    loglik = dataset_loglik(params, data)
    fit = FitResult(
        params=params, loglik=loglik, aic=0.0, subclass=sub,
        iterations=int(res.nit), converged=conv, evaluations=evals[0], starts=starts,
    )
    fit.aic = aic(fit)
    return fit


# -------------------------------------------------------------- bootstrap


def stationary_bootstrap_indices(n, mean_block_length, rng):
    """
    Row indices of one stationary-bootstrap resample: blocks start at uniform
    positions, have geometric lengths with mean ``mean_block_length`` and wrap
    around the end of the series.
    """
    if mean_block_length < 1:
        raise DomainError("mean block length must be >= 1")
    p = 1.0 / mean_block_length
    idx = np.empty(n, dtype=int)
    idx[0] = rng.integers(n)
    new_block = rng.random(n) < p
    fresh = rng.integers(n, size=n)
    for t in range(1, n):
        idx[t] = fresh[t] if new_block[t] else (idx[t - 1] + 1) % n
    return idx


def _refit(task):
    data, sub, init, opts = task
    try:
        return fit_mle(data, sub, init=init, opts=opts)
    except (GhCopulaError, ValueError) as exc:
        return FitResult(None, float("nan"), float("nan"), sub, 0, False, error=str(exc))


def stationary_bootstrap(data, mean_block_length, n_boot, subclass, rng, opts=None,
                         init=None, threads=1):
    """
    Refit ``subclass`` on ``n_boot`` stationary-bootstrap resamples of the rows.

    All resampling indices are drawn from ``rng`` up front, so the refits can
    run on ``threads`` processes without changing the result. Failed refits
    are returned as ``FitResult`` objects with ``params=None`` and the error
    message, so one failure never aborts the run.
    """
    if n_boot < 1:
        raise DomainError("n_boot must be >= 1")
    sub = Subclass.parse(subclass)
    tasks = [
        (data.take_rows(stationary_bootstrap_indices(data.n, mean_block_length, rng)),
         sub, init, opts)
        for _ in range(int(n_boot))
    ]
    return ordered_map(_refit, tasks, threads)
