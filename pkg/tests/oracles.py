"""Independent reference computations shared by the test modules."""

import math

import mpmath as mp
import numpy as np
from scipy import integrate

from ghcopula.copula import copula_log_density
from ghcopula.gh import univariate_table

mp.mp.dps = 30


def log_k_quadrature(lam, x):
    """
    log K_lam(x) from K = int_0^inf exp(-x cosh t) cosh(lam t) dt, by mpmath
    quadrature in 30-digit arithmetic, with breakpoints around the peak of the
    integrand and the range cut where it has fallen by e^-120.
    """
    lam = abs(float(lam))
    x = float(x)
    peak = math.asinh(lam / x) if lam else 0.0

    def phi(t):
        return -x * math.cosh(t) + lam * t

    top = phi(peak)
    hi = peak + 1
    while phi(hi) > top - 120:
        hi += 1
    lo = peak
    while lo > 0 and phi(lo) > top - 120:
        lo = max(0.0, lo - 1)
    w = (x * x + lam * lam) ** -0.25
    pts = [lo] + [peak + k * w for k in range(-20, 21) if lo < peak + k * w < hi] + [hi]
    f = lambda t: mp.exp(-x * mp.cosh(t) - top) * mp.cosh(lam * t)
    return float(mp.log(mp.quad(f, pts)) + top)


def gig_log_pdf_ref(lam, kappa, psi, r):
    return (0.5 * lam * math.log(psi / kappa) + (lam - 1) * math.log(r) - math.log(2)
            - log_k_quadrature(lam, math.sqrt(kappa * psi)) - 0.5 * (kappa / r + psi * r))


def gh_log_pdf_mixture(lam, kappa, psi, gamma, mu, sigma, x):
    """log int N_d(x; mu + gamma r, r sigma) f_GIG(r) dr by adaptive quadrature in log r."""
    gamma, mu, x = (np.asarray(a, dtype=float) for a in (gamma, mu, x))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    d = x.size
    sinv = np.linalg.inv(sigma)
    _, logdet = np.linalg.slogdet(sigma)
    log_c = -log_k_quadrature(lam, math.sqrt(kappa * psi))

    def log_integrand(s):
        r = math.exp(s)
        z = x - mu - gamma * r
        log_norm = -0.5 * (d * math.log(2 * math.pi * r) + logdet + z @ sinv @ z / r)
        log_gig = (0.5 * lam * math.log(psi / kappa) + (lam - 1) * s - math.log(2)
                   + log_c - 0.5 * (kappa / r + psi * r))
        return log_norm + log_gig + s  # dr = r ds

    grid = np.linspace(-40, 40, 8001)
    vals = np.array([log_integrand(s) for s in grid])
    top = vals.max()
    s0 = grid[vals.argmax()]
    width = grid[vals > top - 60]
    f = lambda s: math.exp(log_integrand(s) - top)
    res = integrate.quad(f, width.min() - 0.5, width.max() + 0.5, points=[s0],
                         epsabs=0, epsrel=1e-12, limit=400)[0]
    return math.log(res) + top


def elliptical_joint_survival(lam, kappa, psi, rho, q):
    """
    Pr{X1 > q, X2 > q} for a symmetric bivariate GH vector sqrt(R) W with
    corr(W) = rho, obtained by conditioning on R and integrating the bivariate
    normal orthant probability against the GIG density in log r.
    """
    from scipy import stats

    mvn = stats.multivariate_normal([0, 0], [[1, rho], [rho, 1]])

    def f(s):
        t = q / math.exp(s / 2)
        both = 1 - 2 * stats.norm.cdf(t) + mvn.cdf([t, t])
        return math.exp(gig_log_pdf_ref(lam, kappa, psi, math.exp(s)) + s) * both

    return integrate.quad(f, -10, 8, limit=300, epsabs=1e-13)[0]


def integrate_copula(p, sites):
    """
    Integral of c over (0,1)^2 through the substitution u_i = F(x_i): a tensor
    of 6-point Gauss-Legendre panels between every second node of the margin
    table, evaluated through the copula's own quantile inversion.
    """
    tab = univariate_table(p.lam, p.kappa, p.psi, p.gamma_c)
    edges = tab.nodes[::2]
    t, w = np.polynomial.legendre.leggauss(6)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (a + b) + 0.5 * (b - a) * t).ravel()
    wx = (0.5 * (b - a) * w).ravel()
    fx = np.exp(tab.log_pdf(x))
    u = tab.cdf(x)
    keep = (u > 1e-15) & (u < 1 - 1e-15)
    u, g = u[keep], (wx * fx)[keep]
    total = 0.0
    for i in range(u.size):
        row = np.column_stack([np.full(u.size, u[i]), u])
        total += g[i] * np.sum(np.exp(copula_log_density(p, sites, row)) * g)
    return total
