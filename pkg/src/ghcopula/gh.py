"""
Multivariate and univariate generalized hyperbolic (GH) distribution.

``X ~ GH_d(lam, kappa, psi, gamma, mu, Sigma)`` is the normal mean-variance
mixture ``X = mu + gamma R + sqrt(R) W`` with ``R ~ GIG(lam, kappa, psi)`` and
``W ~ N_d(0, Sigma)``.
"""

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import DomainError, ModelError, NumericalError
from .gig import GigParams, check_admissible, gig_mean, gig_sample, gig_var
from .specfun import log_bessel_k

_LOG_2PI = np.log(2 * np.pi)


class Subclass(str, enum.Enum):
    """Named subclasses and limiting cases of the GH family."""

    FULL_GH = "full_gh"
    HYPERBOLIC = "hyperbolic"
    NIG = "nig"
    STUDENT_T = "student_t"
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"gh": "full_gh", "t": "student_t", "normal": "gaussian"}
        key = str(value).lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown subclass {value!r}") from None

    def fixed(self, d, df=None):
        """
        Parameter values fixed by the subclass, as a dict over
        ``lam, kappa, psi, gamma`` (``gamma`` fixed means ``gamma = 0``).
        """
        if self is Subclass.HYPERBOLIC:
            return {"lam": (d + 1) / 2}
        if self is Subclass.NIG:
            return {"lam": -0.5}
        if self is Subclass.STUDENT_T:
            if df is None:
                return {"psi": 0.0, "gamma": 0.0}
            return {"lam": -df / 2, "kappa": float(df), "psi": 0.0, "gamma": 0.0}
        if self is Subclass.CAUCHY:
            return {"lam": -0.5, "kappa": 1.0, "psi": 0.0, "gamma": 0.0}
        return {}


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GhParams:
    """
    Parameters of ``GH_d(lam, kappa, psi, gamma, mu, sigma)``.

    The Cholesky factor of ``sigma``, ``log|sigma|``, ``sigma^-1 gamma`` and
    ``gamma' sigma^-1 gamma`` are computed once at construction.
    """

    lam: float
    kappa: float
    psi: float
    gamma: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)
    logdet: float = field(init=False, repr=False, compare=False)
    sigma_inv_gamma: np.ndarray = field(init=False, repr=False, compare=False)
    gamma_quad: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        set_ = functools.partial(object.__setattr__, self)
        for name in ("lam", "kappa", "psi"):
            set_(name, float(getattr(self, name)))
        check_admissible(self.lam, self.kappa, self.psi)
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        d = sigma.shape[0]
        if sigma.shape != (d, d):
            raise DomainError(f"sigma must be square, got shape {sigma.shape}")
        gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (d,))
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (d,))
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
            raise ModelError("sigma must be symmetric")
        try:
            chol = cholesky(sigma, lower=True)
        except LinAlgError as exc:
            raise ModelError(f"sigma is not positive definite: {exc}") from None
        set_("gamma", _frozen(gamma))
        set_("mu", _frozen(mu))
        set_("sigma", _frozen(sigma))
        set_("chol", _frozen(chol))
        set_("logdet", float(2 * np.sum(np.log(np.diag(chol)))))
        w = solve_triangular(chol, gamma, lower=True)
        set_("sigma_inv_gamma", _frozen(solve_triangular(chol.T, w, lower=False)))
        set_("gamma_quad", float(w @ w))

    @property
    def dim(self):
        return self.sigma.shape[0]

    @property
    def mixing(self):
        return GigParams(self.lam, self.kappa, self.psi)

    @property
    def is_correlation(self):
        return bool(np.all(np.diag(self.sigma) == 1.0))

    @property
    def is_elliptical(self):
        return not np.any(self.gamma)

    def key(self):
        """Hashable identity used by caches."""
        return (
            self.lam, self.kappa, self.psi,
            self.gamma.tobytes(), self.mu.tobytes(), self.sigma.tobytes(),
        )


def _log_pdf_core(lam, kappa, psi, d, logdet, gamma_quad, quad, lin):
    """
    GH log density from the Mahalanobis terms ``quad = (x-mu)' S^-1 (x-mu)``
    and ``lin = (x-mu)' S^-1 gamma``; interior parameters only.
    """
    alpha2 = psi + gamma_quad
    arg = np.sqrt((kappa + quad) * alpha2)
    nu = lam - d / 2
    log_norm = (
        0.5 * lam * np.log(psi)
        - nu * np.log(alpha2)
        - 0.5 * d * _LOG_2PI
        - 0.5 * logdet
        - 0.5 * lam * np.log(kappa)
        - log_bessel_k(lam, np.sqrt(kappa * psi))
    )
    return log_norm + log_bessel_k(nu, arg) + lin + nu * np.log(arg)


def _log_pdf_t(lam, kappa, d, logdet, quad):
    shape, scale = -lam, kappa / 2
    return (
        -0.5 * d * _LOG_2PI
        - 0.5 * logdet
        + shape * np.log(scale)
        - gammaln(shape)
        + gammaln(shape + d / 2)
        - (shape + d / 2) * np.log(scale + quad / 2)
    )


def _mahalanobis(params, x):
    z = solve_triangular(params.chol, (x - params.mu).T, lower=True)
    quad = np.einsum("ij,ij->j", z, z)
    lin = (x - params.mu) @ params.sigma_inv_gamma
    return quad, lin


def gh_log_pdf(params, x):
    """
    Log density of ``GH_d`` at one point (shape ``(d,)``) or many (``(n, d)``).

    Interior parameters (``kappa > 0``, ``psi > 0``) use the closed-form GH
    density with all Bessel factors in log scale. The Student-t limit
    (``psi = 0``, ``gamma = 0``) uses its own closed form.

    Raises
    ------
    DomainError
        On dimension mismatch or unsupported limiting cases.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    x = np.atleast_2d(x)
    d = params.dim
    if d == 1 and x.shape[0] == 1 and x.shape[1] != 1:
        x = x.T
    if x.shape[1] != d:
        raise DomainError(f"expected points of dimension {d}, got {x.shape[1]}")
    quad, lin = _mahalanobis(params, x)
    if params.psi == 0:
        if not params.is_elliptical:
            raise DomainError("psi = 0 with gamma != 0 is not supported")
        out = _log_pdf_t(params.lam, params.kappa, d, params.logdet, quad)
    elif params.kappa == 0:
        raise DomainError("kappa = 0 (variance-gamma limit) is not supported")
    else:
        out = _log_pdf_core(
            params.lam, params.kappa, params.psi, d,
            params.logdet, params.gamma_quad, quad, lin,
        )
    if single and out.size == 1:
        return float(out[0])
    return out


def gh_sample(params, n, rng, stats=None):
    """
    ``n`` draws of ``mu + gamma R + sqrt(R) L Z`` as an ``(n, d)`` array,
    with ``L`` the cached Cholesky factor of ``sigma``.
    """
    r = gig_sample(params.mixing, n, rng, stats)
    z = rng.standard_normal((int(n), params.dim))
    return params.mu + np.outer(r, params.gamma) + np.sqrt(r)[:, None] * (z @ params.chol.T)


def gh_linear(params, b_matrix, offset=None):
    """Law of ``B X + b``: ``GH_k(lam, kappa, psi, B gamma, B mu + b, B S B')``."""
    b_matrix = np.atleast_2d(np.asarray(b_matrix, dtype=float))
    if b_matrix.shape[1] != params.dim:
        raise DomainError("B has the wrong number of columns")
    mu = b_matrix @ params.mu
    if offset is not None:
        mu = mu + np.asarray(offset, dtype=float)
    sigma = b_matrix @ params.sigma @ b_matrix.T
    return GhParams(
        params.lam, params.kappa, params.psi,
        b_matrix @ params.gamma, mu, 0.5 * (sigma + sigma.T),
    )


def gh_marginal(params, indices):
    """GH parameters of the coordinates ``indices`` (closure under selection)."""
    idx = np.atleast_1d(np.asarray(indices, dtype=int))
    if idx.size == 0:
        raise DomainError("index subset must be non-empty")
    if np.any((idx < 0) | (idx >= params.dim)):
        raise DomainError(f"indices out of range for dimension {params.dim}")
    return GhParams(
        params.lam, params.kappa, params.psi,
        params.gamma[idx], params.mu[idx], params.sigma[np.ix_(idx, idx)],
    )


def _require_univariate(params):
    if params.dim != 1:
        raise DomainError("a univariate (d = 1) GH is required")
    if params.psi <= 0 or params.kappa <= 0:
        raise DomainError("univariate CDF/quantile need kappa > 0 and psi > 0")


def _std_log_pdf(lam, kappa, psi, gamma, y):
    """Log density of ``GH_1(lam, kappa, psi, gamma, 0, 1)`` at ``y`` (any shape)."""
    return _log_pdf_core(lam, kappa, psi, 1, 0.0, gamma * gamma, y * y, y * gamma)


def _std_moments(lam, kappa, psi, gamma):
    mix = GigParams(lam, kappa, psi)
    er, vr = gig_mean(mix), gig_var(mix)
    return gamma * er, np.sqrt(er + gamma * gamma * vr)


def gh_cdf_1d(params, x):
    """
    Distribution function of a univariate GH by adaptive quadrature.

    The integration range is split at the location and around the mean; the
    upper half is computed as ``1 - survival`` so both tails keep absolute
    accuracy near 1e-10 or better.
    """
    _require_univariate(params)
    lam, kappa, psi = params.lam, params.kappa, params.psi
    s = float(np.sqrt(params.sigma[0, 0]))
    g = float(params.gamma[0]) / s
    mu = float(params.mu[0])
    mean, sd = _std_moments(lam, kappa, psi, g)

    def dens(y):
        return float(np.exp(_std_log_pdf(lam, kappa, psi, g, y)))

    breaks = sorted({0.0, mean - sd, mean, mean + sd})
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)

    def lower(y):
        pts = [b for b in breaks if b < y]
        if not pts:
            return integrate.quad(dens, -np.inf, y, **opts)[0]
        total = integrate.quad(dens, -np.inf, pts[0], **opts)[0]
        for a, b in zip(pts, pts[1:] + [y]):
            total += integrate.quad(dens, a, b, **opts)[0]
        return total

    def upper(y):
        pts = [b for b in breaks if b > y]
        if not pts:
            return integrate.quad(dens, y, np.inf, **opts)[0]
        total = integrate.quad(dens, pts[-1], np.inf, **opts)[0]
        for a, b in zip([y] + pts[:-1], pts):
            total += integrate.quad(dens, a, b, **opts)[0]
        return total

    def cdf(xi):
        if xi == -np.inf:
            return 0.0
        if xi == np.inf:
            return 1.0
        y = (xi - mu) / s
        return lower(y) if y <= 0 else 1.0 - upper(y)

    if np.ndim(x) == 0:
        return cdf(float(x))
    return np.array([cdf(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))


# Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1)
_GL_W = 0.5 * _GL_W


class UnivariateTable:
    """
    Cached distribution function and quantile of ``GH_1(lam, kappa, psi,
    gamma, 0, 1)``.

    The CDF is tabulated on a sinh-spaced grid around the mean. Interval
    masses come from 8-point Gauss-Legendre panels on each half interval, and
    intervals are bisected until the quintic Hermite interpolant (CDF value,
    density and density slope at the nodes) matches the panel integral at the
    midpoint to ``tol`` in probability. Quantiles invert the interpolant with
    a bracketed Newton iteration.
    """

    def __init__(self, lam, kappa, psi, gamma, tol=1e-11, step=1 / 16, max_rounds=40):
        check_admissible(lam, kappa, psi)
        if kappa <= 0 or psi <= 0:
            raise DomainError("tabulated margins need kappa > 0 and psi > 0")
        self.lam, self.kappa, self.psi, self.gamma = lam, kappa, psi, gamma
        alpha = np.sqrt(psi + gamma * gamma)
        self.rate_hi = alpha - gamma
        self.rate_lo = alpha + gamma
        center, scale = _std_moments(lam, kappa, psi, gamma)
        nodes = self._base_grid(center, scale, step)
        self._build(nodes, tol, max_rounds)

    def log_pdf(self, y):
        return _std_log_pdf(self.lam, self.kappa, self.psi, self.gamma, y)

    def dlog_pdf(self, y):
        """Derivative of the log density (Bessel ratio form)."""
        alpha2 = self.psi + self.gamma * self.gamma
        arg = np.sqrt((self.kappa + y * y) * alpha2)
        nu = self.lam - 0.5
        ratio = np.exp(log_bessel_k(nu - 1, arg) - log_bessel_k(nu, arg))
        return self.gamma - ratio * alpha2 * y / arg

    def _base_grid(self, center, scale, step):
        s = 0.5 * scale
        peak = np.max(self.log_pdf(center + s * np.sinh(np.arange(-40, 41) * 0.1)))
        drop = 42.0

        def reach(sign, rate):
            dist = max(8 * scale, drop / rate)
            while self.log_pdf(center + sign * dist) > peak - drop:
                dist *= 1.5
            return dist

        t_hi = np.arcsinh(reach(1, self.rate_hi) / s)
        t_lo = np.arcsinh(reach(-1, self.rate_lo) / s)
        t = np.arange(-int(np.ceil(t_lo / step)), int(np.ceil(t_hi / step)) + 1) * step
        return center + s * np.sinh(t)

    def _panel_mass(self, a, b):
        h = b - a
        y = a[:, None] + h[:, None] * _GL_X[None, :]
        return h * (np.exp(self.log_pdf(y)) @ _GL_W)

    def _node_values(self, y):
        f = np.exp(self.log_pdf(y))
        return f, f * self.dlog_pdf(y)

    def _build(self, nodes, tol, max_rounds):
        dens, slope = self._node_values(nodes)
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        left = self._panel_mass(nodes[:-1], mid)
        right = self._panel_mass(mid, nodes[1:])
        for _ in range(max_rounds):
            h = np.diff(nodes)
            whole = left + right
            pred = _quintic(0.0, whole, h * dens[:-1], h * dens[1:],
                            h * h * slope[:-1], h * h * slope[1:], 0.5)
            bad = np.abs(pred - left) > tol
            if not bad.any():
                break
            k = np.flatnonzero(bad)
            a, b, m = nodes[k], nodes[k + 1], mid[k]
            fm, sm = self._node_values(m)
            q1, q3 = 0.5 * (a + m), 0.5 * (m + b)
            l1, r1 = self._panel_mass(a, q1), self._panel_mass(q1, m)
            l2, r2 = self._panel_mass(m, q3), self._panel_mass(q3, b)
            nodes = np.insert(nodes, k + 1, m)
            dens = np.insert(dens, k + 1, fm)
            slope = np.insert(slope, k + 1, sm)
            # interval k becomes (a, m) and a new interval (m, b) follows it
            left[k], right[k] = l1, r1
            mid[k] = q1
            left = np.insert(left, k + 1, l2)
            right = np.insert(right, k + 1, r2)
            mid = np.insert(mid, k + 1, q3)
        else:
            raise NumericalError(
                "GH CDF table did not reach the requested accuracy",
                {"lam": self.lam, "kappa": self.kappa, "psi": self.psi, "gamma": self.gamma},
            )
        mass = left + right
        tail_lo = dens[0] / self.rate_lo
        tail_hi = dens[-1] / self.rate_hi
        total = tail_lo + mass.sum() + tail_hi
        if abs(total - 1) > 1e-8:
            raise NumericalError(
                "GH density table does not integrate to one",
                {"total": float(total), "lam": self.lam, "kappa": self.kappa,
                 "psi": self.psi, "gamma": self.gamma},
            )
        cdf = np.concatenate([[tail_lo], tail_lo + np.cumsum(mass)]) / total
        self.nodes, self.cdf_nodes = nodes, cdf
        self.dens, self.slope = dens / total, slope / total

    def _coeffs(self, i):
        x, f, g, F = self.nodes, self.dens, self.slope, self.cdf_nodes
        h = x[i + 1] - x[i]
        return h, (F[i], F[i + 1], h * f[i], h * f[i + 1], h * h * g[i], h * h * g[i + 1])

    def cdf(self, y):
        """Interpolated distribution function (exponential tails outside the grid)."""
        y = np.asarray(y, dtype=float)
        x, F = self.nodes, self.cdf_nodes
        i = np.clip(np.searchsorted(x, y) - 1, 0, x.size - 2)
        h, c = self._coeffs(i)
        t = np.clip((y - x[i]) / h, 0.0, 1.0)
        out = _quintic(*c, t)
        lo, hi = y < x[0], y > x[-1]
        if lo.any():
            out = np.where(lo, F[0] * np.exp(self.rate_lo * np.minimum(y - x[0], 0)), out)
        if hi.any():
            out = np.where(
                hi, 1 - (1 - F[-1]) * np.exp(-self.rate_hi * np.maximum(y - x[-1], 0)), out
            )
        return out

    def ppf(self, u):
        """Quantile function for ``u`` in (0, 1), vectorized."""
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise DomainError("quantile level must lie in (0, 1)")
        x, F = self.nodes, self.cdf_nodes
        flat = u.ravel()
        out = np.empty_like(flat)
        lo = flat < F[0]
        hi = flat > F[-1]
        mid = ~(lo | hi)
        out[lo] = x[0] + np.log(flat[lo] / F[0]) / self.rate_lo
        out[hi] = x[-1] - np.log((1 - flat[hi]) / (1 - F[-1])) / self.rate_hi
        um = flat[mid]
        i = np.clip(np.searchsorted(F, um, side="right") - 1, 0, x.size - 2)
        h, c = self._coeffs(i)
        span = c[1] - c[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(span > 0, (um - c[0]) / span, 0.5)
        t_lo, t_hi = np.zeros_like(t), np.ones_like(t)
        for _ in range(60):
            val = _quintic(*c, t) - um
            t_lo = np.where(val < 0, t, t_lo)
            t_hi = np.where(val > 0, t, t_hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_new = t - val / _quintic_slope(*c, t)
            bisect = ~((t_new > t_lo) & (t_new < t_hi))
            t_new = np.where(bisect, 0.5 * (t_lo + t_hi), t_new)
            done = np.abs(t_new - t) <= 1e-13
            t = t_new
            if done.all():
                break
        out[mid] = x[i] + h * t
        return out.reshape(u.shape) if u.ndim else float(out[0])


def _quintic(f0, f1, m0, m1, c0, c1, t):
    """Quintic Hermite interpolant on [0, 1] from values, slopes, curvatures."""
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return (
        f0 * (1 - 10 * t3 + 15 * t4 - 6 * t5)
        + m0 * (t - 6 * t3 + 8 * t4 - 3 * t5)
        + c0 * (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5)
        + c1 * (0.5 * t3 - t4 + 0.5 * t5)
        + m1 * (-4 * t3 + 7 * t4 - 3 * t5)
        + f1 * (10 * t3 - 15 * t4 + 6 * t5)
    )


def _quintic_slope(f0, f1, m0, m1, c0, c1, t):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    return (
        (f1 - f0) * (30 * t2 - 60 * t3 + 30 * t4)
        + m0 * (1 - 18 * t2 + 32 * t3 - 15 * t4)
        + c0 * (t - 4.5 * t2 + 6 * t3 - 2.5 * t4)
        + c1 * (1.5 * t2 - 4 * t3 + 2.5 * t4)
        + m1 * (-12 * t2 + 28 * t3 - 15 * t4)
    )


@functools.lru_cache(maxsize=32)
def univariate_table(lam, kappa, psi, gamma):
    """Memoized :class:`UnivariateTable` keyed by the parameter values."""
    return UnivariateTable(float(lam), float(kappa), float(psi), float(gamma))


def gh_quantile_1d(params, u):
    """
    Quantile of a univariate GH.

    Uses the spline-interpolated CDF table (cached per parameter value) and
    a safeguarded root refinement inside the bracketing grid interval.
    """
    _require_univariate(params)
    s = float(np.sqrt(params.sigma[0, 0]))
    table = univariate_table(params.lam, params.kappa, params.psi, float(params.gamma[0]) / s)
    return float(params.mu[0]) + s * table.ppf(u)


def gh_quantile_1d_exact(params, u):
    """Quantile by root finding on :func:`gh_cdf_1d` (slow; reference path)."""
    _require_univariate(params)
    u = float(u)
    if not 0 < u < 1:
        raise DomainError("quantile level must lie in (0, 1)")
    guess = gh_quantile_1d(params, u)
    width = 1.0
    a, b = guess - width, guess + width
    while gh_cdf_1d(params, a) > u:
        a -= width
        width *= 2
    while gh_cdf_1d(params, b) < u:
        b += width
        width *= 2
    return brentq(lambda x: gh_cdf_1d(params, x) - u, a, b, xtol=1e-12)
