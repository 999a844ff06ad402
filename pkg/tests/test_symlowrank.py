import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlo.closure import coefficient_set_closure
from qlo.exact import rank, to_fraction_array
from qlo.io import dumps
from qlo.robust import l1
from qlo.symlowrank import (
    DESK_PROFILE,
    HypothesisFailure,
    NoIndexSet,
    PipelineParams,
    PipelineTrace,
    build_A_star,
    build_B_star,
    build_H,
    disjoint_independent_tuples,
    planted_instance,
    select_index_set,
    symmetric_close,
    symmetric_low_rank_approx,
    verify_trace,
    zero_bad_columns,
)


def fr(a):
    return to_fraction_array(np.asarray(a, dtype=object))


def eye(n):
    return fr(np.eye(n, dtype=int))


def ones(n):
    return fr(np.ones((n, n), dtype=int))


def max_disjoint(pairs, n):
    """Largest set of pairwise disjoint pairs, by exhaustive search."""
    for k in range(n // 2, 0, -1):
        for combo in itertools.combinations(pairs, k):
            if len(set(itertools.chain(*combo))) == 2 * k:
                return k
    return 0


# ---------------------------------------------------------------- A*

def test_tuples_of_zero_matrix():
    assert disjoint_independent_tuples(fr(np.zeros((5, 5), dtype=int)), 2, 0.3) == []


def test_tuples_of_ones_matrix():
    # two equal rows are 0-dependent
    assert disjoint_independent_tuples(ones(6), 2, 0.3) == []


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("alpha", [0.1, 0.4])
def test_identity_pairs_against_exhaustive_oracle(n, alpha):
    # e_i, e_j become dependent by zeroing one of them (cost 1) and no cheaper
    # perturbation exists, so a pair is certified exactly when 1 > alpha n
    certifiable = [p for p in itertools.combinations(range(n), 2) if 1 > alpha * n]
    got = disjoint_independent_tuples(eye(n), 2, alpha)
    assert len(got) == max_disjoint(certifiable, n)
    assert len(set(itertools.chain(*got))) == 2 * len(got)


def test_A_star_without_independent_tuples():
    A_star, J, rounds = build_A_star(ones(6), 2, 0.3)
    assert J == [] and rounds == []
    assert all(a == b for a, b in zip(A_star.flat, ones(6).flat))


def test_A_star_all_rows_independent():
    # a 1-tuple (1,...,1) costs n > alpha n to make dependent
    A_star, J, _ = build_A_star(ones(6), 1, 0.5)
    assert J == list(range(6))
    assert all(x == 0 for x in A_star.flat)


def test_identity_rows_cheaply_dependent():
    # e_i is alpha-dependent at cost 1 <= alpha n
    A_star, J, _ = build_A_star(eye(6), 1, 0.5)
    assert J == []
    A_star, J, _ = build_A_star(eye(6), 1, 0.1)
    assert J == list(range(6))


def test_identity_hypothesis_certificate():
    with pytest.raises(HypothesisFailure) as e:
        symmetric_low_rank_approx(eye(6), 1, 0.1, delta=0.5)
    assert e.value.stage == "A*"
    assert sorted(t[0] for t in e.value.tuples) == list(range(6))


def test_identity_forced_gives_zero():
    res = symmetric_low_rank_approx(eye(6), 1, 0.5)
    assert res.q == 0 and res.distance == 6
    assert all(x == 0 for x in res.H.flat)


@pytest.mark.parametrize("seed", range(3))
def test_A_star_mass_bound_on_planted(seed):
    A, _, _ = planted_instance(30, 1, 0.05, np.random.default_rng(seed), mode="flip")
    A_star, J, _ = build_A_star(A, 2, 0.3)
    assert l1(A - A_star) <= 2 * len(J) * 30


# ---------------------------------------------------------------- B*

def test_B_star_rank_one():
    v = np.array([1, -1, 1, 1, -1, 1, -1, 1])
    A = fr(np.outer(v, v))
    q, basis, B, coeffs, info = build_B_star(A, PipelineParams(2, 0.3))
    assert q == 1
    assert all(a == b for a, b in zip(B.flat, A.flat))
    assert all(r == 0 for r in info["residuals"])


def test_B_star_zero():
    q, basis, B, _, _ = build_B_star(fr(np.zeros((4, 4), dtype=int)), PipelineParams(2, 0.3))
    assert q == 0 and basis == [] and all(x == 0 for x in B.flat)


def test_B_star_residuals_on_planted():
    rng = np.random.default_rng(7)
    A, _, _ = planted_instance(30, 1, 0.03, rng)
    p = PipelineParams(2, 0.3, **DESK_PROFILE)
    A_star, _, _ = build_A_star(A, 2, 0.3)
    q, basis, B, _, info = build_B_star(A_star, p)
    assert q == 1
    w = A_star[basis[0]]
    for i in range(30):
        # an L1-optimal multiple of w sits at a breakpoint t = a_ij / w_j
        best = min(l1(A_star[i] - t * w) for t in [F(0)] + [A_star[i, j] / w[j] for j in range(30) if w[j]])
        assert info["residuals"][i] == best


# ---------------------------------------------------------------- A', B'

def test_zero_bad_columns_identity_case():
    A = ones(4)
    A1, B1, W1, J2, _ = zero_bad_columns(A, A.copy(), A[:1], F(1, 2), 1)
    assert J2 == []
    assert all(a == b for a, b in zip(A1.flat, A.flat))


def test_zero_bad_columns_boundary():
    n = 4
    ta = F(1, 2)
    A = ones(n)
    B = A.copy()
    # column mass exactly tilde_alpha * n = 2 is cut (>= rule)
    B[0, 0] -= 1
    B[1, 0] -= 1
    _, _, W1, J2, cut = zero_bad_columns(A, B, A[:1].copy(), ta, 1)
    assert cut == 2 and J2 == [0]
    assert W1[0, 0] == 0
    B[1, 0] += F(1, 100)
    assert zero_bad_columns(A, B, A[:1].copy(), ta, 1)[3] == []


# ---------------------------------------------------------------- I and H

def test_index_set_empty_when_q_zero():
    Z = fr(np.zeros((3, 3), dtype=int))
    I, d, _ = select_index_set(Z, Z, fr(np.zeros((0, 3), dtype=int)), 0.5, 1)
    assert I == () and d == 1


def test_index_set_unit_row():
    A = fr(np.diag([1, 0, 0]))
    I, d, _ = select_index_set(A, A, fr([[1, 0, 0]]), 0.5, 1)
    assert I == (0,) and d == 1


def test_index_set_search_failure_carries_candidate():
    A = fr(np.diag([1, 0, 0]))
    with pytest.raises(NoIndexSet) as e:
        select_index_set(A, A, fr([[F(1, 10), 0, 0]]), 0.5, 1)
    assert e.value.best["I"] == (0,)


def test_H_zero():
    Z = fr(np.zeros((3, 3), dtype=int))
    H = build_H(Z, Z, fr(np.zeros((0, 3), dtype=int)), ())
    assert all(x == 0 for x in H.flat)


def test_rank_one_recovered_exactly():
    v = np.array([1, -1, 1, 1, -1, 1, -1, 1])
    A = fr(np.outer(v, v))
    res = symmetric_low_rank_approx(A, 2, 0.3)
    assert res.distance == 0 and all(a == b for a, b in zip(res.H.flat, A.flat))
    assert verify_trace(res.trace)[0]


def test_all_ones():
    res = symmetric_low_rank_approx(ones(8), 2, 0.3)
    assert res.distance == 0 and res.q == 1


def test_zero_matrix():
    res = symmetric_low_rank_approx(fr(np.zeros((5, 5), dtype=int)), 2, 0.3)
    assert res.q == 0 and res.distance == 0


@pytest.mark.parametrize("seed", range(3))
def test_planted_classical_schedule(seed):
    A, _, mass = planted_instance(40, 1, 0.02, np.random.default_rng(seed))
    res = symmetric_low_rank_approx(A, 2, 0.3)
    assert rank(res.H) == 1
    assert res.distance <= 10 * mass
    ok, fails = verify_trace(res.trace)
    assert ok, fails


@pytest.mark.parametrize("seed", range(3))
def test_planted_rank_two_desk_profile(seed):
    A, _, mass = planted_instance(30, 2, 0.03, np.random.default_rng(100 + seed))
    res = symmetric_low_rank_approx(A, 3, 0.3, **DESK_PROFILE)
    assert rank(res.H) <= 2 and res.distance <= 10 * mass
    assert verify_trace(res.trace)[0]


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        symmetric_low_rank_approx(fr([[0, 1], [0, 0]]), 2, 0.3)


def test_symmetric_close():
    A, P, mass = planted_instance(30, 1, 0.02, np.random.default_rng(3))
    res = symmetric_close(A, P, 2)
    t = float(mass) ** 0.5 / 30
    assert res.trace.params["alpha"] == pytest.approx(t)
    assert res.distance <= 10 * mass
    with pytest.raises(ValueError):
        symmetric_close(A, eye(30), 2)


# ---------------------------------------------------------------- traces

def _planted_trace():
    A, _, _ = planted_instance(30, 1, 0.03, np.random.default_rng(11))
    return symmetric_low_rank_approx(A, 2, 0.3, **DESK_PROFILE).trace


def test_trace_json_round_trip():
    tr = _planted_trace()
    back = PipelineTrace.from_json(json.loads(dumps(tr.to_json())))
    ok, fails = verify_trace(back)
    assert ok, fails
    assert back.distances == tr.distances


@pytest.mark.parametrize("field", ["H", "B_star", "A_star"])
def test_trace_tamper_detected(field):
    tr = _planted_trace()
    M = getattr(tr, field).copy()
    M[2, 5] += F(1, 3)
    M[5, 2] += F(1, 3)
    setattr(tr, field, M)
    assert not verify_trace(tr)[0]


def test_trace_tampered_J_detected():
    tr = _planted_trace()
    tr.J = tr.J + [0] if 0 not in tr.J else tr.J[1:]
    assert not verify_trace(tr)[0]


# ---------------------------------------------------------------- set mode

def test_set_mode_entries_in_closure():
    S = [F(0), F(1, 2), F(1)]
    cl = coefficient_set_closure(S, 2)
    rng = np.random.default_rng(4)
    n = 30
    x = (rng.random(n) < 0.85).astype(int)
    A = fr(np.outer(x, x))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for idx in rng.choice(len(pairs), 12, replace=False):
        i, j = pairs[idx]
        A[i, j] = A[j, i] = S[rng.integers(3)]
    res = symmetric_low_rank_approx(A, 2, 0.3, S=S, **DESK_PROFILE)
    assert res.q == 1
    assert res.set_mode["verified"] is True
    assert all(cl.contains(v, 1) for v in res.trace.B_star.flat)
    assert all(cl.contains(v, 3) for v in res.H.flat)
    assert verify_trace(res.trace)[0]


def test_set_mode_rejects_foreign_entries():
    with pytest.raises(ValueError):
        symmetric_low_rank_approx(fr([[F(1, 3)]]), 2, 0.3, S=[0, 1])


# ---------------------------------------------------------------- properties

@settings(max_examples=15)
@given(st.integers(0, 10**6), st.integers(3, 8), st.integers(1, 3))
def test_output_invariants(seed, n, r):
    rng = np.random.default_rng(seed)
    M = rng.integers(-2, 3, size=(n, n))
    A = fr(np.triu(M) + np.triu(M, 1).T) / 2
    try:
        res = symmetric_low_rank_approx(A, r, 0.3, **DESK_PROFILE)
    except HypothesisFailure as e:
        assert e.tuples
        return
    H = res.H
    assert all(H[i, j] == H[j, i] for i in range(n) for j in range(n))
    assert rank(H) <= res.q < r
    ok, fails = verify_trace(res.trace)
    assert ok, fails
