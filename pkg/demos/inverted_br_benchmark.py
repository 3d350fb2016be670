"""
Fit an NIG copula to an inverted Brown-Resnick field and compare the fitted
limiting eta(h) with the true curve and with empirical eta_0.95.
"""

import numpy as np

from ghcopula import CopulaDataset, FitOptions, SiteSet, fit_mle
from ghcopula.experiments import fitted_eta
from ghcopula.spatial import corr
from ghcopula.taildep import chi_eta_empirical, eta_inverted_br, simulate_inverted_br

sites = SiteSet.grid(np.linspace(0.0, 1.0, 4))
u = simulate_inverted_br(sites, 0.3, 300, np.random.default_rng(11))
fit = fit_mle(CopulaDataset(u, sites), "nig", opts=FitOptions(n_starts=1))
p = fit.params

dist = sites.distances()
print(f"{'h':>6} {'true':>7} {'NIG':>7} {'emp':>7}")
for h in np.unique(np.round(dist[np.triu_indices(len(sites), 1)], 10)):
    pairs = np.argwhere(np.isclose(np.triu(dist, 1), h))
    emp = [chi_eta_empirical(u, (i, j), 0.95).eta_u for i, j in pairs]
    emp = np.mean([e for e in emp if e is not None])
    print(f"{h:6.3f} {eta_inverted_br(h, 0.3):7.3f} {float(fitted_eta(p, corr(p.corr, h))):7.3f} "
          f"{emp:7.3f}")
