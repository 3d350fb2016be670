"""
Generalized inverse Gaussian (GIG) mixing distribution.

The parameterization is ``GIG(lam, kappa, psi)`` with density

.. math::
    f(x) = \\Big(\\frac{\\psi}{\\kappa}\\Big)^{\\lambda/2}
    \\frac{x^{\\lambda-1}}{2K_\\lambda(\\sqrt{\\kappa\\psi})}
    \\exp\\Big\\{-\\frac{1}{2}\\Big(\\frac{\\kappa}{x}+\\psi x\\Big)\\Big\\},
    \\quad x > 0.

``kappa = 0`` (gamma) and ``psi = 0`` (inverse gamma) are limiting cases and
are handled with their own closed forms.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import DomainError
from .specfun import log_bessel_k

GAMMA = "gamma"
INVERSE_GAMMA = "inverse_gamma"


def check_admissible(lam, kappa, psi):
    """Raise :class:`DomainError` unless ``(lam, kappa, psi)`` is admissible."""
    if not all(np.isfinite(v) for v in (lam, kappa, psi)):
        raise DomainError(f"non-finite GIG parameters {(lam, kappa, psi)}")
    if lam < 0:
        ok = kappa > 0 and psi >= 0
    elif lam == 0:
        ok = kappa > 0 and psi > 0
    else:
        ok = kappa >= 0 and psi > 0
    if not ok:
        raise DomainError(
            f"inadmissible GIG parameters lam={lam}, kappa={kappa}, psi={psi}"
        )


@dataclass(frozen=True)
class GigParams:
    """Shape ``lam`` and the two scale-like parameters ``kappa``, ``psi``."""

    lam: float
    kappa: float
    psi: float

    def __post_init__(self):
        for name in ("lam", "kappa", "psi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        check_admissible(self.lam, self.kappa, self.psi)

    @property
    def limiting(self):
        """``"gamma"``, ``"inverse_gamma"`` or ``None`` for interior points."""
        if self.kappa == 0:
            return GAMMA
        if self.psi == 0:
            return INVERSE_GAMMA
        return None

    @property
    def omega(self):
        return float(np.sqrt(self.kappa * self.psi))


def gig_log_pdf(params, x):
    """
    Log density of ``GIG(lam, kappa, psi)``.

    Limiting cases are routed to the gamma (shape ``lam``, rate ``psi/2``)
    and inverse gamma (shape ``-lam``, scale ``kappa/2``) log densities.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(x > 0)):
        raise DomainError("GIG density requires x > 0")
    lam, kappa, psi = params.lam, params.kappa, params.psi
    kind = params.limiting
    if kind == GAMMA:
        rate = psi / 2
        out = lam * np.log(rate) - gammaln(lam) + (lam - 1) * np.log(x) - rate * x
    elif kind == INVERSE_GAMMA:
        shape, scale = -lam, kappa / 2
        out = shape * np.log(scale) - gammaln(shape) - (shape + 1) * np.log(x) - scale / x
    else:
        out = (
            0.5 * lam * np.log(psi / kappa)
            + (lam - 1) * np.log(x)
            - np.log(2.0)
            - log_bessel_k(lam, params.omega)
            - 0.5 * (kappa / x + psi * x)
        )
    return float(out[0]) if scalar else out


def gig_moment(params, k):
    """``E[R^k]``; infinite moments raise :class:`DomainError`."""
    lam, kappa, psi = params.lam, params.kappa, params.psi
    kind = params.limiting
    if kind == GAMMA:
        if lam + k <= 0:
            raise DomainError(f"moment {k} of gamma({lam}) is infinite")
        return float(np.exp(gammaln(lam + k) - gammaln(lam) - k * np.log(psi / 2)))
    if kind == INVERSE_GAMMA:
        shape = -lam
        if shape - k <= 0:
            raise DomainError(f"moment {k} of inverse gamma({shape}) is infinite")
        return float(np.exp(gammaln(shape - k) - gammaln(shape) + k * np.log(kappa / 2)))
    w = params.omega
    return float(
        np.exp(0.5 * k * np.log(kappa / psi) + log_bessel_k(lam + k, w) - log_bessel_k(lam, w))
    )


def gig_mean(params):
    """``sqrt(kappa/psi) * K_{lam+1}(w) / K_lam(w)`` with ``w = sqrt(kappa psi)``."""
    return gig_moment(params, 1)


def gig_var(params):
    m1 = gig_moment(params, 1)
    return gig_moment(params, 2) - m1 * m1


@dataclass
class SamplerStats:
    """Running proposal/acceptance counters of the ratio-of-uniforms sampler."""

    proposed: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else float("nan")


class _BatchSampler:
    """Vectorized accept/reject loop shared by the GIG proposal schemes."""

    def _propose(self, batch, rng):
        raise NotImplementedError

    def draw(self, n, rng, stats):
        out = np.empty(n)
        filled = 0
        rate = 0.5
        while filled < n:
            need = n - filled
            batch = max(64, int(1.2 * need / rate) + 16)
            acc = self._propose(batch, rng)
            stats.proposed += batch
            stats.accepted += acc.size
            if acc.size:
                rate = max(acc.size / batch, 0.01)
            take = min(acc.size, need)
            out[filled:filled + take] = acc[:take]
            filled += take
        return out


class _ShiftedRou(_BatchSampler):
    """
    Ratio-of-uniforms with mode shift for the one-parameter family
    ``g(x) = x^(lam-1) exp(-w (x + 1/x) / 2)``, ``lam >= 0``, ``w > 0``.
    """

    def __init__(self, lam, w):
        self.lam, self.w = lam, w
        self.mode = ((lam - 1) + np.sqrt((lam - 1) ** 2 + w * w)) / w
        self._log_g_mode = self._log_g_raw(self.mode)
        x_lo, x_hi = self._extremes()
        self.v_lo = (x_lo - self.mode) * np.exp(0.5 * self.log_g(x_lo))
        self.v_hi = (x_hi - self.mode) * np.exp(0.5 * self.log_g(x_hi))

    def _log_g_raw(self, x):
        return (self.lam - 1) * np.log(x) - 0.5 * self.w * (x + 1 / x)

    def log_g(self, x):
        return self._log_g_raw(x) - self._log_g_mode

    def _extremes(self):
        # stationary points of log[(x - m)^2 g(x)] on each side of the mode
        m, lam, w = self.mode, self.lam, self.w

        def dlog(x):
            return 2 / (x - m) + (lam - 1) / x - 0.5 * w + 0.5 * w / (x * x)

        eps = 1e-12 * m
        left = m / 2
        while dlog(left) < 0:
            left /= 2
        x_lo = brentq(dlog, left, m - eps, xtol=1e-14 * m, maxiter=500)
        right = 2 * m + 1
        while dlog(right) > 0:
            right *= 2
        x_hi = brentq(dlog, m + eps, right, xtol=1e-14 * right, maxiter=500)
        return x_lo, x_hi

    def _propose(self, batch, rng):
        u = rng.random(batch)
        v = self.v_lo + (self.v_hi - self.v_lo) * rng.random(batch)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = v / u + self.mode
            ok = x > 0
            ok[ok] = 2 * np.log(u[ok]) <= self.log_g(x[ok])
        return x[ok]


class _ConcaveRejection(_BatchSampler):
    """
    Rejection from a three-piece dominating density; used where the
    ratio-of-uniforms envelope is poor (``lam < 1`` and small ``w``).
    """

    def __init__(self, lam, w):
        self.lam, self.w = lam, w
        mode = w / ((1 - lam) + np.sqrt((1 - lam) ** 2 + w * w))
        x0 = w / (1 - lam)
        xs = max(x0, 2 / w)
        self.x0, self.xs = x0, xs
        self.k1 = np.exp(self.log_g(mode))
        self.a1 = self.k1 * x0
        if x0 < 2 / w:
            self.k2 = np.exp(-w)
            if lam == 0:
                self.a2 = self.k2 * np.log(2 / (w * w))
            else:
                self.a2 = self.k2 * ((2 / w) ** lam - x0 ** lam) / lam
        else:
            self.k2, self.a2 = 0.0, 0.0
        self.k3 = xs ** (lam - 1)
        self.a3 = 2 * self.k3 * np.exp(-xs * w / 2) / w
        self.total = self.a1 + self.a2 + self.a3

    def log_g(self, x):
        return (self.lam - 1) * np.log(x) - 0.5 * self.w * (x + 1 / x)

    def _propose(self, batch, rng):
        lam, w = self.lam, self.w
        u = rng.random(batch)
        v = self.total * rng.random(batch)
        x = np.empty(batch)
        hx = np.empty(batch)
        p1 = v <= self.a1
        p2 = ~p1 & (v <= self.a1 + self.a2)
        p3 = ~(p1 | p2)
        x[p1] = self.x0 * v[p1] / self.a1
        hx[p1] = self.k1
        if p2.any():
            v2 = v[p2] - self.a1
            if lam == 0:
                x[p2] = self.x0 * np.exp(v2 / self.k2)
            else:
                x[p2] = (self.x0 ** lam + v2 * lam / self.k2) ** (1 / lam)
            hx[p2] = self.k2 * x[p2] ** (lam - 1)
        v3 = v[p3] - self.a1 - self.a2
        with np.errstate(divide="ignore", invalid="ignore"):
            x[p3] = -2 / w * np.log(np.exp(-self.xs * w / 2) - v3 * w / (2 * self.k3))
            hx[p3] = self.k3 * np.exp(-x[p3] * w / 2)
            ok = (x > 0) & np.isfinite(x)
            ok[ok] = np.log(u[ok] * hx[ok]) <= self.log_g(x[ok])
        return x[ok]


def _standard_sampler(lam, w):
    if lam < 1 and w <= min(0.5, 2 / 3 * np.sqrt(1 - lam)):
        return _ConcaveRejection(lam, w)
    return _ShiftedRou(lam, w)


def gig_sample(params, n, rng, stats=None):
    """
    Draw ``n`` i.i.d. variates from ``GIG(lam, kappa, psi)``.

    Interior parameters use a mode-shifted ratio-of-uniforms scheme on the
    standardized law (a three-piece rejection envelope for ``|lam| < 1`` with
    ``sqrt(kappa psi)`` small), then rescale by ``sqrt(kappa/psi)``; negative
    ``lam`` is handled through ``1/R ~ GIG(-lam, psi, kappa)``.

    Parameters
    ----------
    params : GigParams
    n : int
        Number of draws, ``n >= 1``.
    rng : numpy.random.Generator
        Source of randomness; the module never touches global state.
    stats : SamplerStats, optional
        Counters updated in place.

    Returns
    -------
    ndarray of shape (n,)
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if stats is None:
        stats = SamplerStats()
    lam, kappa, psi = params.lam, params.kappa, params.psi
    kind = params.limiting
    if kind == GAMMA:
        stats.proposed += n
        stats.accepted += n
        return rng.gamma(lam, 2.0 / psi, size=n)
    if kind == INVERSE_GAMMA:
        stats.proposed += n
        stats.accepted += n
        return (kappa / 2.0) / rng.gamma(-lam, 1.0, size=n)
    sampler = _standard_sampler(abs(lam), params.omega)
    y = sampler.draw(n, rng, stats)
    if lam < 0:
        y = 1.0 / y
    return y * np.sqrt(kappa / psi)
