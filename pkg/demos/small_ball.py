"""Exact point-mass law of (x1+...+xn)^2 and of a random quadratic, side by side."""
import numpy as np

from qlo.poly import QuadraticPoly, exact_distribution, max_point_probability

for n in (6, 10, 14):
    d = exact_distribution(QuadraticPoly.square_of_sum(n))
    v, p = max_point_probability(d)
    print(f"square of sum, n={n:2d}: Pr(0) = {d.probability(0)}, max {p} at {v}")

rng = np.random.default_rng(0)
for n in (8, 12, 16):
    v, p = max_point_probability(exact_distribution(QuadraticPoly.random(n, rng)))
    print(f"random quadratic, n={n:2d}: max point probability {float(p):.4f}")
