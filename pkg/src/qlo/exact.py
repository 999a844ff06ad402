"""Small dense linear algebra over exact rationals (and a float fallback).

Matrices are numpy arrays.  ``dtype=object`` arrays holding ``Fraction``
(or ``int``) entries are treated exactly; anything else goes through
numpy/LAPACK.  Sizes here are tiny (q <= 8 rows, n <= a few hundred
columns), so plain Gaussian elimination is fine.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial

import numpy as np

FLOAT_TOL = 1e-9


def is_exact(a) -> bool:
    a = np.asarray(a)
    if a.dtype != object:
        return np.issubdtype(a.dtype, np.integer)
    return all(isinstance(x, (int, Fraction)) for x in a.flat)


def to_fraction_array(a) -> np.ndarray:
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        if isinstance(x, Fraction):
            out[idx] = x
        elif isinstance(x, (int, np.integer)):
            out[idx] = Fraction(int(x))
        elif isinstance(x, str):
            out[idx] = Fraction(x)
        else:
            out[idx] = Fraction(x)  # floats map to their exact binary value
    return out


def as_float(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        if any(isinstance(x, complex) for x in a.flat):
            return a.astype(complex)
        return a.astype(float)
    return a


def _row_echelon(m: np.ndarray):
    """In-place fraction elimination. Returns list of pivot columns and sign of row swaps."""
    rows, cols = m.shape
    pivots = []
    sign = 1
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if m[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            m[[r, p]] = m[[p, r]]
            sign = -sign
        piv = m[r, c]
        for i in range(r + 1, rows):
            if m[i, c] != 0:
                f = m[i, c] / piv
                m[i, c:] = m[i, c:] - f * m[r, c:]
        pivots.append(c)
        r += 1
    return pivots, sign


def rank(a, tol: float = FLOAT_TOL) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    if is_exact(a):
        m = to_fraction_array(a)
        pivots, _ = _row_echelon(m)
        return len(pivots)
    return int(np.linalg.matrix_rank(as_float(a), tol=tol))


def det(a):
    """Determinant; exact Fraction for exact input. The 0x0 determinant is 1."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("det needs a square matrix")
    if a.shape[0] == 0:
        return Fraction(1) if is_exact(a) or a.dtype == object else 1.0
    if is_exact(a):
        m = to_fraction_array(a)
        n = m.shape[0]
        pivots, sign = _row_echelon(m)
        if len(pivots) < n:
            return Fraction(0)
        out = Fraction(sign)
        for i in range(n):
            out *= m[i, i]
        return out
    return np.linalg.det(as_float(a))


def solve_left(m_sq, b):
    """Solve x @ m_sq = b for a row vector x."""
    m_sq = np.asarray(m_sq)
    b = np.asarray(b)
    if m_sq.shape[0] == 0:
        return np.zeros(0, dtype=object if is_exact(b) else float)
    if is_exact(m_sq) and is_exact(b):
        return solve(m_sq.T, b)
    return np.linalg.solve(as_float(m_sq).T, as_float(b))


def solve(a, b):
    """Solve a @ x = b (a square). Raises np.linalg.LinAlgError when singular."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=object)
    if not (is_exact(a) and is_exact(b)):
        return np.linalg.solve(as_float(a), as_float(b))
    aug = np.empty((n, n + 1), dtype=object)
    aug[:, :n] = to_fraction_array(a)
    aug[:, n] = to_fraction_array(b)
    pivots, _ = _row_echelon(aug)
    if len(pivots) < n or pivots[-1] >= n:
        raise np.linalg.LinAlgError("singular matrix")
    x = np.empty(n, dtype=object)
    for i in range(n - 1, -1, -1):
        s = aug[i, n] - sum((aug[i, j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = s / aug[i, i]
    return x


def left_kernel_vector(m):
    """A nonzero y with y @ m == 0, or None if the rows of m are independent."""
    m = np.asarray(m)
    q = m.shape[0]
    if q == 0:
        return None
    if is_exact(m):
        # kernel of m.T via reduced row echelon form
        t = to_fraction_array(m.T)
        pivots, _ = _row_echelon(t)
        if len(pivots) == q:
            return None
        free = next(c for c in range(q) if c not in pivots)
        y = np.array([Fraction(0)] * q, dtype=object)
        y[free] = Fraction(1)
        for i in range(len(pivots) - 1, -1, -1):
            c = pivots[i]
            s = sum((t[i, j] * y[j] for j in range(c + 1, q)), Fraction(0))
            y[c] = -s / t[i, c]
        return y
    mf = as_float(m)
    u, s, _ = np.linalg.svd(mf, full_matrices=True)
    smin = s[-1] if len(s) == q else 0.0
    if len(s) == q and smin > FLOAT_TOL * max(1.0, s[0]):
        return None
    return np.conj(u[:, -1])


def adjugate_entry_bound(q: int, entry_bound: float) -> float:
    """Largest possible |cofactor| of a q x q matrix with entries bounded by entry_bound."""
    if q <= 1:
        return 1.0
    return factorial(q - 1) * float(entry_bound) ** (q - 1)


def rationalize(x, max_den: int = 10**9) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(float(x)).limit_denominator(max_den)
