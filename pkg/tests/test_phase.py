from fractions import Fraction as F
from math import factorial, pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlo.phase import (
    GaussRational,
    det_polynomial,
    exact_abs_det,
    exact_det,
    expected_abs_det,
    markov_success_bound,
    phase_det,
    phase_sweep,
    poly_phase_det,
    random_complex_matrix,
    success_probability,
)

I1 = np.array([[1j]])


def test_det_polynomial_unit_imaginary():
    c = det_polynomial(I1)
    assert np.allclose(c, [-1j, 0, 1j], atol=1e-12)
    assert abs(c[0]) == pytest.approx(1.0)


def test_det_polynomial_real_scalar():
    assert np.allclose(det_polynomial(np.array([[0.7]])), [0.7, 0, 0.7], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_polynomial_route_matches_direct_determinant(seed):
    rng = np.random.default_rng(seed)
    A = random_complex_matrix(3, rng)
    c = det_polynomial(A)
    th = rng.uniform(0, 2 * pi, 50)
    assert np.allclose(poly_phase_det(c, th), phase_det(A, th), atol=1e-9, rtol=0)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_identity_property(seed, r):
    rng = np.random.default_rng(seed)
    A = random_complex_matrix(r, rng)
    th = rng.uniform(0, 2 * pi, 8)
    assert np.allclose(poly_phase_det(det_polynomial(A), th), phase_det(A, th), atol=1e-9 * factorial(r), rtol=0)
    # Leibniz: each of the r! terms has modulus <= 1
    assert np.all(np.abs(phase_det(A, th)) <= factorial(r) + 1e-12)


def test_phase_det_examples():
    assert phase_det(I1, pi / 2) == pytest.approx(-1.0)
    assert phase_det(I1, 0.0) == pytest.approx(0.0)
    assert phase_det(np.eye(2), pi / 3) == pytest.approx(0.25)


def test_exact_det():
    A = np.array([[0.5 + 0.25j, 1], [0.125j, -0.75]])
    d = exact_det(A)
    assert d == GaussRational(F(-3, 8), F(-3, 16)) - GaussRational(0, F(1, 8))
    assert complex(d) == pytest.approx(np.linalg.det(A))
    assert exact_abs_det(np.array([[1, 1], [1, 1]])) == 0.0
    assert exact_det(np.zeros((0, 0))) == 1


def test_gauss_rational_arithmetic():
    a, b = GaussRational(1, 2), GaussRational(F(1, 2), -1)
    assert a * b == GaussRational(F(5, 2), 0)
    assert (a / b) * b == a
    assert abs(complex(a - b) - complex(0.5, 3)) < 1e-15


def test_expected_abs_det_closed_forms():
    out = expected_abs_det(I1)
    assert out["mean"] == pytest.approx(2 / pi, abs=1e-9)
    assert out["lower_bound"] == pytest.approx(0.5) and not out["flag"]
    out = expected_abs_det(np.eye(2))
    assert out["mean"] == pytest.approx(0.5, abs=1e-9)
    assert out["lower_bound"] == pytest.approx(0.25)
    out = expected_abs_det(np.array([[1, 1j], [1, 1j]]))
    assert out["lower_bound"] == 0 and not out["flag"]


def test_expected_abs_det_dominates_on_random():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        A = random_complex_matrix(int(rng.integers(1, 5)), rng)
        out = expected_abs_det(A)
        assert not out["flag"]
        assert out["mean"] + out["error"] >= out["lower_bound"]


def test_success_probability_examples():
    # |sin| >= 1/2 on theta in [pi/6, 5 pi/6] and its mirror
    frac, _ = success_probability(I1, 0.5)
    assert frac == pytest.approx(2 / 3, abs=1e-4)
    assert success_probability(I1, 0.0)[0] == 1.0


def test_markov_bound_against_grid():
    rng = np.random.default_rng(9)
    seen = 0
    while seen < 10:
        A = random_complex_matrix(2, rng)
        if abs(np.linalg.det(A)) < 0.5:
            continue
        seen += 1
        c, p = markov_success_bound(A)
        assert c > 0 and p > 0
        assert success_probability(A, c)[0] >= p
    with pytest.raises(ValueError):
        markov_success_bound(np.array([[2.0]]))


def test_sweep():
    sw = phase_sweep(np.eye(2), points=4)
    assert [round(d, 12) for _, d, _ in sw.rows()] == [1.0, 0.0, 1.0, 0.0]
    assert sw.fraction_ge[0.5] == 0.5


def test_size_guard():
    with pytest.raises(ValueError):
        det_polynomial(np.eye(9))
    with pytest.raises(ValueError):
        phase_det(np.ones((2, 3)), 0.0)
