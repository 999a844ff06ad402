"""Real projections Re(e^{i theta} A) of complex matrices and the determinant polynomial
p(z) = det(z^2 A + conj(A)), which satisfies det Re(e^{i theta} A) = e^{-i r theta} p(e^{i theta}) / 2^r."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from qlo.exact import _row_echelon

MAX_R = 8
GRID = 100_000


class QuadratureNonConvergence(RuntimeError):
    pass


class _Defer(Exception):
    pass


def _binop(fn):
    def op(self, o):
        try:
            return fn(self, o)
        except _Defer:
            return NotImplemented
    return op


class GaussRational:
    """a + b i with Fraction parts; just enough field arithmetic for elimination."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        return cls(Fraction(z.real), Fraction(z.imag))

    def _c(self, o):
        if isinstance(o, np.ndarray):
            raise _Defer
        return o if isinstance(o, GaussRational) else GaussRational.from_complex(o) if isinstance(o, complex) else GaussRational(o)

    @_binop
    def __add__(self, o):
        o = self._c(o)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    @_binop
    def __sub__(self, o):
        o = self._c(o)
        return GaussRational(self.re - o.re, self.im - o.im)

    @_binop
    def __rsub__(self, o):
        return self._c(o) - self

    @_binop
    def __mul__(self, o):
        o = self._c(o)
        return GaussRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    @_binop
    def __truediv__(self, o):
        o = self._c(o)
        d = o.re * o.re + o.im * o.im
        return GaussRational((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __eq__(self, o):
        o = self._c(o)
        return self.re == o.re and self.im == o.im

    def __ne__(self, o):
        return not self == o

    def __hash__(self):
        return hash((self.re, self.im))

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


def _check(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if A.shape[0] > MAX_R:
        raise ValueError(f"r <= {MAX_R} required")
    return A


def exact_det(A) -> GaussRational:
    """Exact determinant of the binary values stored in A."""
    A = _check(A)
    r = A.shape[0]
    if r == 0:
        return GaussRational(1)
    m = np.empty((r, r), dtype=object)
    for idx, z in np.ndenumerate(A):
        m[idx] = GaussRational.from_complex(z)
    piv, sign = _row_echelon(m)
    if len(piv) < r:
        return GaussRational(0)
    out = GaussRational(sign)
    for i in range(r):
        out = out * m[i, i]
    return out


def exact_abs_det(A) -> float:
    """|det A| rounded once from the exact squared modulus."""
    return float(exact_det(A).abs2()) ** 0.5


def det_polynomial(A, tol=1e-9):
    """Coefficients c_0..c_{2r} (ascending) of p(z) = det(z^2 A + conj A) by interpolation at the 2r+1 roots of unity.

    Raises AssertionError if p(0) differs from conj(det A).
    """
    A = _check(A)
    r = A.shape[0]
    N = 2 * r + 1
    z = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([np.linalg.det(zk * zk * A + A.conj()) if r else 1.0 for zk in z])
    coeffs = np.fft.fft(vals) / N  # vals_k = sum_j c_j z_k^j, so c_j = (1/N) sum_k vals_k z_k^{-j}
    d = complex(exact_det(A))
    scale = max(1.0, float(factorial(r)))
    if abs(coeffs[0] - np.conj(d)) > tol * scale:
        raise AssertionError(f"p(0) = {coeffs[0]} but conj(det A) = {np.conj(d)}")
    return coeffs


def poly_phase_det(coeffs, theta):
    """e^{-i r theta} p(e^{i theta}) / 2^r (real part) from the coefficient list."""
    r = (len(coeffs) - 1) // 2
    th = np.asarray(theta, dtype=float)
    z = np.exp(1j * th)
    val = np.polyval(np.asarray(coeffs)[::-1], z) * np.exp(-1j * r * th) / 2.0 ** r
    return val.real


def phase_det(A, theta):
    """det Re(e^{i theta} A), computed directly (vectorized over theta)."""
    A = _check(A)
    th = np.asarray(theta, dtype=float)
    R = (np.exp(1j * th)[..., None, None] * A).real
    return np.linalg.det(R) if A.shape[0] else np.ones_like(th)


def _simpson(g, n):
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    y = g(th)
    h = 2 * np.pi / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def expected_abs_det(A, tol=1e-10, k0=4, k_max=20):
    """Mean over uniform theta of |det Re(e^{i theta} A)| by composite Simpson on 2^k panels, doubled until stable.

    Returns a dict with mean, error (|S_2h - S_h| / 15), the bound 2^-r |det A| and
    a flag that fires if mean + error falls below the bound.
    """
    A = _check(A)
    r = A.shape[0]
    bound = exact_abs_det(A) / 2 ** r
    g = lambda th: np.abs(phase_det(A, th))
    prev = _simpson(g, 2 ** k0)
    for k in range(k0 + 1, k_max + 1):
        cur = _simpson(g, 2 ** k)
        err = abs(cur - prev) / 15
        if err <= tol * max(1.0, abs(cur)) and k >= k0 + 2:
            break
        prev = cur
    else:
        raise QuadratureNonConvergence(f"Simpson did not settle by 2^{k_max} panels (change {err:.3g})")
    mean = cur / (2 * np.pi)
    err = err / (2 * np.pi)
    return {"mean": float(mean), "error": float(err), "lower_bound": bound, "panels": 2 ** k,
            "flag": bool(mean + err < bound)}


def success_probability(A, c, grid=GRID):
    """Fraction of the theta-grid (grid points on [0, 2 pi)) with |det Re(e^{i theta} A)| >= c."""
    th = 2 * np.pi * np.arange(grid) / grid
    v = np.abs(phase_det(A, th))
    return float(np.mean(v >= c)), 2 * np.pi / grid


def markov_success_bound(A):
    """(c, p): Pr(|det| >= c) >= p with c = mu/2, p = mu / (2 r!) where mu = 2^-r |det A|.

    Follows from E|det| >= mu and |det| <= r! for entries of modulus <= 1.
    """
    A = _check(A)
    r = A.shape[0]
    if np.abs(A).max(initial=0) > 1 + 1e-12:
        raise ValueError("entries must have modulus <= 1")
    mu = exact_abs_det(A) / 2 ** r
    return mu / 2, mu / (2 * factorial(r))


@dataclass
class PhaseSweep:
    A: np.ndarray
    thetas: np.ndarray
    dets: np.ndarray
    mean_abs: float
    fraction_ge: dict = field(default_factory=dict)

    def rows(self):
        return [(float(t), float(d), float(abs(d))) for t, d in zip(self.thetas, self.dets)]


def phase_sweep(A, points=360, levels=(0.1, 0.25, 0.5)):
    A = _check(A)
    th = 2 * np.pi * np.arange(points) / points
    d = phase_det(A, th)
    return PhaseSweep(A, th, d, float(np.mean(np.abs(d))), {c: float(np.mean(np.abs(d) >= c)) for c in levels})


def random_complex_matrix(r, rng):
    """Entries uniform in the unit disc."""
    rad = np.sqrt(rng.random((r, r)))
    return rad * np.exp(2j * np.pi * rng.random((r, r)))
