"""Edges spanned by a random half of G(n, 1/2): exact law vs coupling-based sampling."""
import numpy as np

from qlo.ramsey import distribution_summary, edge_statistic_distribution, gnp

G = gnp(16, 0.5, np.random.default_rng(16))
for mode in ("exact", "coupling"):
    s = distribution_summary(edge_statistic_distribution(G, 8, mode=mode, N=200_000, seed=1))
    print(f"{mode:>8}: max point probability {float(s['max_point_probability']):.4f}")
