import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlo.closure import ClosureTooLarge, T_q, coefficient_set_closure, sigma_r, tau_q


def sigma2_oracle(X):
    """X union {z w / m}: the r = 2 closure written out by hand."""
    X = set(X) | {F(0)}
    return X | {z * w / m for m in X if m for z in X for w in X}


def tau2_cramer(S):
    """tau_2 via Cramer's rule over all 2x2 systems, independent of the row-reduction solver."""
    S = sorted(set(S) | {F(0)})
    out = set()
    for a, b, c, d in itertools.product(S, repeat=4):
        D = a * d - b * c
        if D == 0:
            continue
        for z1, z2 in itertools.product(S, repeat=2):
            v1 = (z1 * d - b * z2) / D
            v2 = (a * z2 - c * z1) / D
            for w1, w2 in itertools.product(S, repeat=2):
                out.add(v1 * w1 + v2 * w2)
    return out


def test_r1_is_identity():
    c = coefficient_set_closure({0, 1}, 1)
    assert c.S_prime == {0, 1}
    assert c.T == {} and c.tau == {}


def test_binary_r2():
    c = coefficient_set_closure({0, 1}, 2)
    assert c.sigma == {0, 1}
    assert c.S_prime == {0, 1}


def test_halves_r2():
    c = coefficient_set_closure({0, F(1, 2), 1}, 2)
    want = {F(0), F(1, 4), F(1, 2), F(1), F(2)}
    assert c.tau[1] == want
    assert c.sigma == want
    assert c.S_prime == sigma2_oracle(sigma2_oracle(want))
    assert len(c.S_prime) == 29
    assert c.contains(F(1, 4), level=0) is False
    assert c.contains(F(1, 4), level=1)


def test_levels_nest():
    c = coefficient_set_closure({0, F(1, 2), 1}, 2)
    for lo, hi in zip(c.levels, c.levels[1:]):
        assert lo <= hi


@pytest.mark.parametrize("S", [{0, 1}, {0, 1, -1}, {0, F(1, 2), 1}])
def test_tau2_matches_cramer_oracle(S):
    assert tau_q(S, 2) == tau2_cramer({F(s) for s in S})


def test_T1_is_quotients():
    assert T_q({0, 2, 3}, 1) == {(F(z, m),) for m in (2, 3) for z in (0, 2, 3)}


def test_guard():
    with pytest.raises(ClosureTooLarge):
        T_q(range(10), 2, guard=1000)
    c = coefficient_set_closure({0, 1}, 3)
    assert c.S_prime is None
    with pytest.raises(ClosureTooLarge):
        c.contains(0, level=3)
    with pytest.raises(ClosureTooLarge):
        coefficient_set_closure({0, 1}, 3, strict=True)


def test_sigma3_binary_matches_oracle():
    # r = 3 first level: S, tau_1, tau_2 over {0, 1}
    want = {F(0), F(1)} | tau2_cramer({F(0), F(1)})
    assert sigma_r({0, 1}, 3) == want
    assert coefficient_set_closure({0, 1}, 3).sigma == want


@settings(max_examples=30)
@given(st.sets(st.integers(-3, 3).map(lambda k: F(k, 2)), min_size=1, max_size=3))
def test_sigma2_property(S):
    assert sigma_r(S, 2) == sigma2_oracle(S)
    assert set(S) <= sigma_r(S, 2)
