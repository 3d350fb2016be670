"""Site geometry and the powered exponential correlation model."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.spatial.distance import pdist, squareform

from .errors import DataError, DomainError, ModelError


@dataclass(frozen=True, eq=False)
class SiteSet:
    """Planar site coordinates (Euclidean, native units) with optional ids."""

    coords: np.ndarray
    ids: tuple = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise DataError(f"coords must have shape (d, 2), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise DataError("site coordinates must be finite")
        d = coords.shape[0]
        if d >= 2 and np.min(pdist(coords)) == 0:
            raise DataError("duplicate site coordinates")
        ids = tuple(str(i) for i in range(d)) if self.ids is None else tuple(map(str, self.ids))
        if len(ids) != d or len(set(ids)) != d:
            raise DataError("site ids must be unique and match the coordinates")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return self.coords.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SiteSet):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.coords.tobytes(), self.ids))

    def distances(self):
        return squareform(pdist(self.coords))

    def subset(self, indices):
        idx = list(indices)
        return SiteSet(self.coords[idx], tuple(self.ids[i] for i in idx))

    @classmethod
    def grid(cls, values):
        """Sites on the product grid ``values x values``, x varying fastest."""
        v = np.asarray(values, dtype=float)
        xx, yy = np.meshgrid(v, v)
        return cls(np.column_stack([xx.ravel(), yy.ravel()]))


@dataclass(frozen=True)
class PowExpCorr:
    """``rho(h) = exp{-(h / zeta)^nu}`` with range ``zeta > 0`` and ``0 < nu <= 2``."""

    zeta: float
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "zeta", float(self.zeta))
        object.__setattr__(self, "nu", float(self.nu))
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise DomainError(f"zeta must be positive, got {self.zeta}")
        if not (0 < self.nu <= 2):
            raise DomainError(f"nu must lie in (0, 2], got {self.nu}")


def corr(c, h):
    """Powered exponential correlation at distance(s) ``h >= 0``."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise DomainError("distances must be non-negative")
    out = np.exp(-((h / c.zeta) ** c.nu))
    return float(out) if out.ndim == 0 else out


def build_sigma(sites, c):
    """
    Correlation matrix of the sites: exactly symmetric with exact unit
    diagonal. Raises :class:`ModelError` when the Cholesky factorization
    fails (numerically coincident sites); no jitter is added.
    """
    sigma = corr(c, sites.distances())
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    try:
        cholesky(sigma, lower=True)
    except LinAlgError:
        raise ModelError(
            f"correlation matrix not positive definite (zeta={c.zeta}, nu={c.nu})"
        ) from None
    return sigma
