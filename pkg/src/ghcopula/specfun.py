"""
Scalar special functions used by the densities.

The modified Bessel function of the second kind is only ever needed in log
scale: GH tails push its argument to the size of extreme quantiles and its
order to ``lambda - d/2`` with ``d`` the number of sites.

Small-argument / large-order combinations overflow the exponentially scaled
``scipy.special.kve``; those are recomputed from the representation

.. math::
    K_\\nu(x) = \\frac{1}{2}\\int_{-\\infty}^{\\infty} e^{-x\\cosh t + \\nu t}\\,dt

with a log-space trapezoidal rule, which converges geometrically for this
entire, doubly-exponentially decaying integrand.
"""

import numpy as np
from scipy.special import kve, logsumexp, ndtr, ndtri

from .errors import DomainError

MAX_ORDER = 60.0

_TRAPZ_STEP = 0.05
_TRAPZ_DROP = 60.0


def _log_k_trapezoid(nu, x):
    """log K_nu(x) for one ``nu >= 0`` and one ``x > 0``."""
    t_peak = np.arcsinh(nu / x)

    def phi(t):
        return -x * np.cosh(t) + nu * t

    top = phi(t_peak)
    lo, hi, step = t_peak, t_peak, 0.25
    while phi(lo) > top - _TRAPZ_DROP:
        lo -= step
        step *= 1.5
    step = 0.25
    while phi(hi) > top - _TRAPZ_DROP:
        hi += step
        step *= 1.5
    width = (x * x + nu * nu) ** -0.25
    n = int(np.ceil((hi - lo) / min(_TRAPZ_STEP, 0.2 * width)))
    t = np.linspace(lo, hi, n + 1)
    h = t[1] - t[0]
    return float(np.log(0.5 * h) + logsumexp(phi(t)))


def log_bessel_k(lam, x):
    """
    Logarithm of the modified Bessel function of the second kind.

    Parameters
    ----------
    lam : float
        Real order, ``|lam| <= 60``.
    x : float or ndarray
        Positive argument(s).

    Returns
    -------
    float or ndarray
        ``log K_lam(x)``, same shape as ``x``.

    Raises
    ------
    DomainError
        If ``x <= 0``, any input is non-finite, or ``|lam| > 60``.
    """
    lam = float(lam)
    if not np.isfinite(lam):
        raise DomainError(f"Bessel order must be finite, got {lam}")
    if abs(lam) > MAX_ORDER:
        raise DomainError(f"|order| > {MAX_ORDER} is unsupported, got {lam}")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    if np.any(x <= 0):
        raise DomainError("Bessel argument must be positive")

    nu = abs(lam)
    with np.errstate(divide="ignore", over="ignore"):
        scaled = kve(nu, x)
        out = np.log(scaled) - x
    flat_x, flat_out = x.ravel(), out.ravel()
    for i in np.flatnonzero(~np.isfinite(flat_out)):
        flat_out[i] = _log_k_trapezoid(nu, flat_x[i])
    out = flat_out.reshape(x.shape)
    return float(out[0]) if scalar else out


def bessel_k(lam, x):
    """``K_lam(x)`` as the exponential of :func:`log_bessel_k`."""
    return np.exp(log_bessel_k(lam, x))


def log_bessel_k_ratio(lam, x, shift=1):
    """``log K_{lam+shift}(x) - log K_lam(x)``, e.g. for GIG moments."""
    return log_bessel_k(lam + shift, x) - log_bessel_k(lam, x)


def normal_cdf(x):
    """Standard normal distribution function."""
    return ndtr(x)


def normal_quantile(p):
    """Standard normal quantile function; ``p`` must lie in ``[0, 1]``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("probability outside [0, 1]")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out
