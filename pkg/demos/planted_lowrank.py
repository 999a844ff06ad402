"""Recover a planted symmetric rank-1 matrix from a corrupted copy and re-verify the trace."""
import numpy as np

from qlo.exact import rank
from qlo.symlowrank import DESK_PROFILE, planted_instance, symmetric_low_rank_approx, verify_trace

A, _, mass = planted_instance(30, 1, 0.03, np.random.default_rng(7))
res = symmetric_low_rank_approx(A, 2, 0.3, **DESK_PROFILE)
ok, fails = verify_trace(res.trace)
print(f"q = {res.q}, rank H = {rank(res.H)}")
print(f"||A - H||_1 = {res.distance} (corruption mass {mass}, ratio {float(res.distance / mass):.2f})")
print("trace verifies" if ok else f"trace failures: {fails}")
