"""Quadratic polynomials in +-1 variables and their value distributions."""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, gcd, log2

import numpy as np

from qlo import _kernels

FIELDS = ("rational", "real", "complex")
DEFAULT_CAP = 28
BLOCK_BITS = 20
_INT_LIMIT = 2**62


class EnumerationCapError(ValueError):
    """Raised when 2^n enumeration is requested above the configured cap."""


def enumeration_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get("QLO_CAP")
    return int(env) if env else DEFAULT_CAP


def coerce_scalar(x, fld: str):
    if fld == "rational":
        if isinstance(x, Fraction):
            return x
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, str):
            return Fraction(x)
        if isinstance(x, float):
            return Fraction(x)
        raise TypeError(f"cannot use {x!r} as a rational coefficient")
    if fld == "real":
        if isinstance(x, complex):
            raise TypeError("complex coefficient in a real polynomial")
        return float(Fraction(x)) if isinstance(x, str) else float(x)
    if fld == "complex":
        if isinstance(x, str):
            try:
                return complex(float(Fraction(x)))
            except ValueError:
                return complex(x.replace(" ", ""))
        return complex(x)
    raise ValueError(f"unknown field {fld!r}")


def _zero(fld):
    return {"rational": Fraction(0), "real": 0.0, "complex": 0j}[fld]


def sort_key(v):
    """Canonical order on scalars: complex values compare on (real, imag)."""
    if isinstance(v, complex):
        return (v.real, v.imag)
    return (v, 0)


@dataclass
class QuadraticPoly:
    """f(x) = sum_{i<=j} a_ij x_i x_j + sum_i a_i x_i + a_0.

    ``matrix`` is the symmetric view M (M_ij = M_ji = a_ij, M_ii = a_ii).
    Indices are 0-based.
    """

    matrix: np.ndarray
    lin: np.ndarray
    const: object
    field: str = "rational"

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        m = np.asarray(self.matrix, dtype=object)
        n = m.shape[0]
        if m.shape != (n, n):
            raise ValueError("coefficient matrix must be square")
        lin = np.asarray(self.lin, dtype=object).reshape(-1)
        if lin.shape != (n,):
            raise ValueError("linear part has wrong length")
        dt = object if self.field == "rational" else (float if self.field == "real" else complex)
        mm = np.empty((n, n), dtype=dt)
        for i in range(n):
            for j in range(n):
                mm[i, j] = coerce_scalar(m[i, j], self.field)
        if self.field == "rational":
            if any(mm[i, j] != mm[j, i] for i in range(n) for j in range(i)):
                raise ValueError("coefficient matrix must be symmetric")
        elif not np.allclose(mm, mm.T, atol=0, rtol=0):
            raise ValueError("coefficient matrix must be symmetric")
        self.matrix = mm
        self.lin = np.array([coerce_scalar(x, self.field) for x in lin], dtype=dt)
        self.const = coerce_scalar(self.const, self.field)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_terms(cls, n, deg2=(), lin=None, const=0, field="rational"):
        """Build from upper-triangular terms ``[(i, j, a_ij), ...]`` with i <= j (0-based)."""
        m = np.empty((n, n), dtype=object)
        m[:] = 0
        for i, j, c in deg2:
            i, j = min(i, j), max(i, j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"index ({i}, {j}) out of range")
            m[i, j] = m[i, j] + coerce_scalar(c, field)
            m[j, i] = m[i, j]
        lin = [0] * n if lin is None else list(lin)
        return cls(m, lin, const, field)

    @classmethod
    def square_of_sum(cls, n: int):
        """(x_1 + ... + x_n)^2."""
        terms = [(i, i, 1) for i in range(n)] + [(i, j, 2) for i in range(n) for j in range(i + 1, n)]
        return cls.from_terms(n, terms)

    @classmethod
    def random(cls, n, rng, density=1.0, values=None, field="rational", lin=True, const=True):
        """Random polynomial with coefficients from ``values`` (default k/4, |k| <= 4)."""
        if values is None:
            values = [Fraction(k, 4) for k in range(-4, 5)]
        terms = []
        for i in range(n):
            for j in range(i, n):
                if rng.random() < density:
                    terms.append((i, j, values[rng.integers(len(values))]))
        lv = [values[rng.integers(len(values))] for _ in range(n)] if lin else None
        c = values[rng.integers(len(values))] if const else 0
        return cls.from_terms(n, terms, lv, c, field)

    def coefficient(self, i, j):
        return self.matrix[min(i, j), max(i, j)]

    def terms(self):
        n = self.n
        return [(i, j, self.matrix[i, j]) for i in range(n) for j in range(i, n) if self.matrix[i, j] != 0]

    def form_matrix(self) -> np.ndarray:
        """H with h(x) = x^T H x / 2 equal to the homogeneous degree-2 part."""
        h = self.matrix.copy()
        for i in range(self.n):
            h[i, i] = 2 * h[i, i]
        return h

    def sup_norm(self):
        vals = [abs(x) for x in self.matrix.flat] + [abs(x) for x in self.lin] + [abs(self.const)]
        return max(vals) if vals else 0

    def __call__(self, signs):
        return evaluate(self, signs)


def evaluate(f: QuadraticPoly, signs):
    signs = list(signs)
    if len(signs) != f.n:
        raise ValueError(f"expected {f.n} signs, got {len(signs)}")
    if any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be +-1")
    n = f.n
    v = f.const
    for i in range(n):
        v += f.lin[i] * signs[i]
        for j in range(i, n):
            a = f.matrix[i, j]
            if a != 0:
                v += a * signs[i] * signs[j]
    return v


@dataclass
class PointMass:
    """Distribution of f(xi) as value -> weight with the weights summing to `total`."""

    mode: str
    counts: dict
    total: int
    n: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def probability(self, value) -> Fraction:
        return Fraction(self.counts.get(value, 0), self.total)

    def check_total(self) -> bool:
        return sum(self.counts.values()) == self.total

    def items(self):
        return sorted(self.counts.items(), key=lambda kv: sort_key(kv[0]))

    def support_arrays(self):
        vals = [v for v, _ in self.items()]
        w = np.array([c for _, c in self.items()], dtype=float)
        return vals, w


def _integer_scaling(f: QuadraticPoly):
    """Common denominator D and integer arrays (off-diagonal, linear, constant) for D*f."""
    if f.field != "rational":
        raise TypeError("exact keying needs the rational backend")
    entries = list(f.matrix.flat) + list(f.lin) + [f.const]
    d = 1
    for x in entries:
        d = d * x.denominator // gcd(d, x.denominator)
    n = f.n
    off = np.zeros((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            if i != j:
                off[i, j] = int(f.matrix[i, j] * d)
    lin = np.array([int(x * d) for x in f.lin], dtype=object)
    const = int((f.const + sum(f.matrix[i, i] for i in range(n))) * d)
    return d, off, lin, const


def _fits_int64(off, lin, const):
    bound = abs(const) + sum(abs(int(x)) for x in lin) + sum(abs(int(x)) for x in off.flat)
    return 4 * bound < _INT_LIMIT


def _enumerate_python(off, lin, const, n):
    """Reference Gray-code walk in Python ints (used when int64 could overflow)."""
    xi = [1] * n
    s = [lin[i] + sum(off[i][j] for j in range(n)) for i in range(n)]
    v = const + sum(lin) + sum(off[i][j] for i in range(n) for j in range(i + 1, n))
    out = Counter({v: 1})
    for t in range(1, 1 << n):
        i = (t & -t).bit_length() - 1
        old = xi[i]
        v -= 2 * old * s[i]
        xi[i] = -old
        for j in range(n):
            s[j] -= 2 * old * off[j][i]
        out[v] += 1
    return out


def _block_histogram(off, lin, const, n, low, hb):
    out = np.empty(1 << low, dtype=off.dtype)
    _kernels.gray_block(off, lin, const, n, low, hb, out)
    vals, cnt = np.unique(out, return_counts=True)
    return vals, cnt


def enumerate_values(off, lin, const, n, workers=1):
    """Histogram {value: count} of const + lin.xi + sum_{i<j} off_ij xi_i xi_j over {+-1}^n.

    The top bits are split into blocks; workers Gray-code blocks independently
    and the histograms merge by key, so the result is independent of `workers`.
    """
    low = min(n, BLOCK_BITS)
    nblocks = 1 << (n - low)
    workers = max(1, int(workers))
    if workers > 1:
        # at least one block per worker: widen the partition over the top bits
        need = ceil(log2(workers))
        if n - low < need:
            low = max(0, n - need)
            nblocks = 1 << (n - low)
    hist = Counter()

    def merge(res):
        vals, cnt = res
        for v, c in zip(vals.tolist(), cnt.tolist()):
            hist[v] += c

    if workers == 1 or nblocks == 1:
        for hb in range(nblocks):
            merge(_block_histogram(off, lin, const, n, low, hb))
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for res in ex.map(lambda hb: _block_histogram(off, lin, const, n, low, hb), range(nblocks)):
                merge(res)
    return hist


def exact_distribution(f: QuadraticPoly, cap: int | None = None, workers: int = 1) -> PointMass:
    """Exact law of f(xi): weight(v) = #{xi in {+-1}^n : f(xi) = v} out of 2^n."""
    cap = enumeration_cap(cap)
    if f.n > cap:
        raise EnumerationCapError(f"n={f.n} exceeds the enumeration cap {cap}")
    if f.field != "rational":
        raise TypeError("exact_distribution needs the rational backend (float equality is meaningless)")
    d, off, lin, const = _integer_scaling(f)
    n = f.n
    if n == 0:
        return PointMass("exact", {f.const: 1}, 1, 0)
    if _fits_int64(off, lin, const):
        hist = enumerate_values(off.astype(np.int64), lin.astype(np.int64), np.int64(const), n, workers)
    else:
        hist = _enumerate_python(off.tolist(), lin.tolist(), const, n)
    counts = {Fraction(int(v), d): int(c) for v, c in hist.items()}
    return PointMass("exact", counts, 1 << n, n)


def all_values_float(f: QuadraticPoly, cap: int | None = None) -> np.ndarray:
    """f over every sign vector (Gray order) in float64; real/rational polys only."""
    cap = enumeration_cap(cap)
    if f.n > cap:
        raise EnumerationCapError(f"n={f.n} exceeds the enumeration cap {cap}")
    if f.field == "complex":
        raise TypeError("real-valued polynomial required")
    n = f.n
    m = f.matrix.astype(float)
    off = m - np.diag(np.diag(m))
    lin = f.lin.astype(float)
    const = float(f.const) + float(np.trace(m))
    out = np.empty(1 << n, dtype=float)
    _kernels.gray_block(off, lin, const, n, n, 0, out)
    return out


def value_support(f: QuadraticPoly, cap: int | None = None):
    """(values, probabilities) of f(xi) as float arrays, via exact enumeration."""
    if f.field == "rational":
        d = exact_distribution(f, cap)
        vals = np.array([float(v) for v, _ in d.items()])
        w = np.array([c for _, c in d.items()], dtype=float) / d.total
        return vals, w
    vals, cnt = np.unique(all_values_float(f, cap), return_counts=True)
    return vals, cnt / cnt.sum()


def sample_signs(rng, N: int, n: int) -> np.ndarray:
    return np.where(rng.random((N, n)) < 0.5, 1, -1).astype(np.int64)


def evaluate_many(f: QuadraticPoly, X: np.ndarray):
    """Values of f on the rows of X; exact (Fraction list) for rational f."""
    X = np.asarray(X)
    n = f.n
    if f.field == "rational":
        d, off, lin, const = _integer_scaling(f)
        if _fits_int64(off, lin, const) and X.shape[0] * n < 2**40:
            off = off.astype(np.int64)
            vals = ((X @ off) * X).sum(axis=1) // 2 + X @ lin.astype(np.int64) + const
            return [Fraction(int(v), d) for v in vals]
        return [evaluate(f, row) for row in X.tolist()]
    m = f.matrix
    off = m - np.diag(np.diag(m))
    Xf = X.astype(m.dtype)
    return ((Xf @ off) * Xf).sum(axis=1) / 2 + Xf @ f.lin + f.const + np.trace(m)


def monte_carlo_distribution(f: QuadraticPoly, N: int, seed=0, chunk: int = 200_000) -> PointMass:
    """N independent uniform sign vectors; reproducible from `seed`."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    hist = Counter()
    done = 0
    while done < N:
        b = min(chunk, N - done)
        vals = evaluate_many(f, sample_signs(rng, b, f.n))
        if isinstance(vals, np.ndarray):
            vals = vals.tolist()
        hist.update(vals)
        done += b
    return PointMass("monte-carlo", dict(hist), N, f.n, {"seed": seed})


def max_point_probability(d: PointMass):
    """(argmax value, probability); ties go to the smallest value in canonical order."""
    if not d.counts:
        raise ValueError("empty distribution")
    best = max(d.counts.values())
    value = min((v for v, c in d.counts.items() if c == best), key=sort_key)
    return value, Fraction(best, d.total)


def small_ball_probability(d: PointMass, x, s) -> Fraction:
    """Pr(|f(xi) - x| <= s)."""
    if s < 0:
        raise ValueError("radius must be non-negative")
    hit = sum(c for v, c in d.counts.items() if abs(v - x) <= s)
    return Fraction(hit, d.total)
