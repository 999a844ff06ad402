import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlo.exact import det, rank, to_fraction_array
from qlo.robust import (
    adjugate_constant,
    attack_certified,
    best_minor,
    check_eps_independence,
    check_non_degenerate,
    extend_in_span,
    greedy_disjoint_minors,
    l1,
    l1_fit,
    least_l1_image,
    select_basis_rows,
    sphere_net,
    verify_certificate,
    verify_dependence_witness,
    verify_non_degeneracy_refutation,
    witness_from_json,
    witness_to_json,
)


def fr(rows):
    return to_fraction_array(np.array(rows, dtype=object))


def line_singularization_cost(V, points=20001):
    """Brute force for rows in R^2: min over lines y of sum_i min_t ||v_i - t y||_1, grid in the angle."""
    V = np.asarray(V, dtype=float)
    th = np.concatenate([np.linspace(0, np.pi, points), np.arctan2(V[:, 1], V[:, 0]) % np.pi, [0, np.pi / 2]])
    Y = np.stack([np.cos(th), np.sin(th)], axis=1)
    tot = np.zeros(len(th))
    for v in V:
        with np.errstate(divide="ignore", invalid="ignore"):
            T = np.where(np.abs(Y) > 1e-15, v[None, :] / Y, 0.0)  # breakpoints t = v_j / y_j
        T = np.concatenate([T, np.zeros((len(th), 1))], axis=1)
        cost = np.abs(v[None, None, :] - T[:, :, None] * Y[:, None, :]).sum(axis=2)
        tot += cost.min(axis=1)
    return float(tot.min())


# ---------------------------------------------------------------- minors

def test_best_minor_identity_padded():
    M = fr([[1, 0, 0, 0, 0], [0, 1, 0, 0, 0]])
    cols, d, how = best_minor(M, 2)
    assert set(cols) == {0, 1} and d == 1 and how == "exhaustive"


def test_best_minor_single_row():
    cols, d, _ = best_minor(fr([[1] * 6]), 1)
    assert len(cols) == 1 and d == 1


@pytest.mark.parametrize("seed", range(5))
def test_best_minor_matches_brute_force(seed):
    M = fr(np.random.default_rng(seed).choice([-1, 1], size=(3, 8)))
    want = max(abs(det(M[:, list(c)])) for c in itertools.combinations(range(8), 3))
    cols, d, _ = best_minor(M, 3)
    assert d == want == abs(det(M[:, list(cols)]))


def test_greedy_minors_examples():
    ones = fr([[1] * 7])
    got = greedy_disjoint_minors(ones, 1, 1)
    assert len(got) == 7
    II = fr([[1, 0, 1, 0], [0, 1, 0, 1]])
    got = greedy_disjoint_minors(II, 2, F(1, 2))
    assert len(got) == 2
    assert not set(got[0][0]) & set(got[1][0])


@pytest.mark.parametrize("seed", range(5))
def test_greedy_minors_reverify(seed):
    M = np.random.default_rng(seed).uniform(-1, 1, size=(2, 12))
    got = greedy_disjoint_minors(M, 2, 0.3)
    used = set()
    for cols, d in got:
        assert abs(np.linalg.det(M[:, list(cols)])) >= 0.3 - 1e-12
        assert not used & set(cols)
        used |= set(cols)


# ---------------------------------------------------------------- eps-independence

def test_ones_vector_certified():
    v = check_eps_independence(fr([[1] * 10]), 0.9)
    assert v.certified


def test_unit_vectors_long_refuted():
    V = fr([[1] + [0] * 9, [0, 1] + [0] * 8])
    v = check_eps_independence(V, F(1, 2))
    assert v.refuted
    assert v.witness["cost"] == 1
    ok, fails = verify_dependence_witness(v.witness)
    assert ok, fails


def test_unit_vectors_short_certified_against_grid_oracle():
    V = fr([[1, 0], [0, 1]])
    v = check_eps_independence(V, F(2, 5))
    assert v.certified
    assert v.lower == 1
    assert line_singularization_cost([[1, 0], [0, 1]]) == pytest.approx(1, abs=1e-9)
    assert verify_certificate(V, F(2, 5), v.certificate)[0]


def test_empty_collection_is_independent():
    assert check_eps_independence(np.zeros((0, 5), dtype=object), 1).certified


@pytest.mark.parametrize("seed", range(8))
def test_exact_cost_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    v1, v2 = [F(int(x), 4) for x in rng.integers(-4, 5, 2)], [F(int(x), 4) for x in rng.integers(-4, 5, 2)]
    V = fr([v1, v2])
    v = check_eps_independence(V, 0)
    cost = v.lower if v.certified else v.upper
    if v.certified:
        assert v.lower == v.upper
    assert float(cost) == pytest.approx(line_singularization_cost([v1, v2]), abs=1e-6)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(4, 12))
def test_lower_bound_never_exceeds_witness_cost(seed, q, n):
    rng = np.random.default_rng(seed)
    V = fr(rng.integers(-4, 5, size=(q, n)) / 4)
    v = check_eps_independence(V, F(1, 2))
    if v.upper is not None:
        assert v.lower <= v.upper
    if v.refuted:
        assert verify_dependence_witness(v.witness)[0]
    if v.certified:
        assert verify_certificate(V, F(1, 2), v.certificate)[0]


def test_attacks_never_break_certificates():
    rng = np.random.default_rng(5)
    seen = 0
    for _ in range(20):
        V = fr(rng.choice([-1, 1], size=(2, 8)))
        eps = F(1, 8)
        v = check_eps_independence(V, eps)
        if v.certified:
            seen += 1
            assert attack_certified(V, eps, 200, rng) is None
    assert seen


def test_complex_vectors():
    V = np.array([[1, 1j, 0, 1], [0, 1, 1, -1j]])
    v = check_eps_independence(V, 0.05)
    assert v.certified
    w = check_eps_independence(np.array([[1, 0, 0, 0], [0, 1j, 0, 0]]), 0.5)
    assert w.refuted and verify_dependence_witness(w.witness)[0]


def test_witness_json_round_trip_and_tamper():
    V = fr([[1] + [0] * 9, [0, 1] + [0] * 8])
    w = check_eps_independence(V, F(1, 2)).witness
    back = witness_from_json(witness_to_json(w))
    assert verify_dependence_witness(back)[0]
    back["kernel"] = np.array([F(1), F(1)], dtype=object)
    assert not verify_dependence_witness(back)[0]


def test_certified_instances_have_large_minor():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        q = int(rng.integers(1, 4))
        V = fr(rng.integers(-4, 5, size=(q, 8)) / 4)
        eps = F(1, 4)
        if check_eps_independence(V, eps).certified:
            _, d, how = best_minor(V, q)
            assert how == "exhaustive"
            assert d >= eps ** q
            checked += 1
    assert checked


def test_adjugate_constant():
    assert adjugate_constant(1) == 1
    assert adjugate_constant(2) == 3
    assert adjugate_constant(3) == 2 * 16


# ---------------------------------------------------------------- non-degeneracy

def test_nondegen_ones_certified():
    v = check_non_degenerate(np.ones((1, 10)), 1)
    assert v.kind == "certified" and v.delta_cert == pytest.approx(1 / 3)


def test_nondegen_half_zero_refuted():
    M = np.array([[1.0] * 5 + [0.0] * 5])
    v = check_non_degenerate(M, 0.6, delta_refute=0.6)
    assert v.kind == "refuted"
    assert verify_non_degeneracy_refutation(M, v.witness, v.level)[0]


@pytest.mark.parametrize("seed", range(4))
def test_nondegen_stable_under_refinement(seed):
    M = np.random.default_rng(seed).choice([-1.0, 1.0], size=(2, 40))
    assert check_non_degenerate(M, 0.3).kind == check_non_degenerate(M, 0.3, refine=2).kind


@pytest.mark.parametrize("r,eps", [(2, 0.1), (3, 0.2)])
def test_sphere_net_covers(r, eps):
    P, meta = sphere_net(r, eps)
    X = np.random.default_rng(0).normal(size=(2000, r))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    d = np.minimum(np.linalg.norm(X[:, None] - P[None], axis=2), np.linalg.norm(X[:, None] + P[None], axis=2))
    assert d.min(axis=1).max() <= eps


# ---------------------------------------------------------------- span tools

def test_extend_in_span_examples():
    W = fr([[1, 0, 1]])
    assert list(extend_in_span(W, [0], fr([2]))) == [2, 0, 2]
    W = fr([[1, 0, 1], [0, 1, 1]])
    assert list(extend_in_span(W, [0, 1], fr([3, -1]))) == [3, -1, 2]


def test_least_l1_image():
    out = least_l1_image(np.eye(2), samples=2000)
    assert out["min"] >= 1 - 1e-12 and out["floor"] == pytest.approx(0.5) and not out["violation"]
    out = least_l1_image(np.array([[1.0, 2], [2, 4]]), samples=500)
    assert out["floor"] == 0 and not out["violation"]
    B = np.random.default_rng(3).uniform(-1, 1, (3, 3))
    out = least_l1_image(B, samples=10_000)
    assert out["min"] >= abs(np.linalg.det(B)) / 6 and not out["violation"]


def test_l1_fit_rank_one_exact():
    W = fr([[1, 2, -1, 0]])
    a, v = l1_fit(fr([3, 6, -3, 0]), W)
    assert l1(v - fr([3, 6, -3, 0])) == 0


def test_select_basis_rows_examples():
    sel = select_basis_rows(np.zeros((4, 6), dtype=object) * F(0), 0.5, 2)
    assert sel.q == 0 and all(r == 0 for r in sel.residuals)
    u = fr([1, -1, 1, 1, -1, 1])
    V = fr([list(c * u) for c in (1, -1, F(1, 2), 2)])
    sel = select_basis_rows(V, 0.5, 2, level_base=1.5)
    assert sel.q == 1 and all(r == 0 for r in sel.residuals)


def test_select_basis_rows_planted_span():
    rng = np.random.default_rng(4)
    n = 40
    B = rng.choice([-1, 1], size=(2, n))
    C = rng.integers(-2, 3, size=(6, 2))
    clean = fr(C @ B) / 4
    noisy = clean.copy()
    for i in range(6):
        j = rng.integers(n)
        noisy[i, j] += F(1, 2)
    eta = max(l1(noisy[i] - clean[i]) for i in range(6))
    sel = select_basis_rows(noisy, 0.5, 3, level_base=1.5)
    assert sel.q <= 2
    assert rank(clean) == 2
    assert max(sel.residuals) <= 4 * eta
