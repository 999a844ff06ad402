"""Characteristic-function magnitudes, the decoupled cosine bound, and Esseen's small-ball bound."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from qlo.poly import (
    EnumerationCapError,
    QuadraticPoly,
    enumeration_cap,
    evaluate_many,
    exact_distribution,
    max_point_probability,
    sample_signs,
    small_ball_probability,
    value_support,
)

TWO_PI = 2.0 * np.pi

# max over the seeded calibration corpus of Pr(|X-x|<=s) / ((s+1/eps) * int |phi|),
# rounded up to one decimal; recomputed by calibrate_esseen_constant (see tests)
C_IMPL = 1.2
CALIBRATION = {"instances": 500, "seed": 20240601, "n_max": 12, "radii": (0.5, 1.0, 2.0)}


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its depth limit; `estimate` and `error` hold the partial result."""

    def __init__(self, msg, estimate, error):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


def _support(f):
    if f.field == "complex":
        raise TypeError("characteristic function needs a real-valued polynomial")
    vals, w = value_support(f)
    return np.asarray(vals, dtype=float), np.asarray(w, dtype=float)


def char_from_support(vals, w, t):
    """|sum_v w_v exp(2 pi i t v)| for scalar or array t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    # chunk over t so the phase matrix stays small
    step = max(1, 2_000_000 // max(1, len(vals)))
    for a in range(0, len(t), step):
        ph = TWO_PI * np.outer(t[a:a + step], vals)
        out[a:a + step] = np.hypot(np.cos(ph) @ w, np.sin(ph) @ w)
    return np.minimum(out, 1.0)


def char_magnitude(f: QuadraticPoly, t, cap: int | None = None):
    """|E exp(2 pi i t f(xi))| by full enumeration. Scalar in, scalar out."""
    if f.n > enumeration_cap(cap):
        raise EnumerationCapError(f"n={f.n} exceeds the enumeration cap")
    vals, w = _support(f)
    out = char_from_support(vals, w, t)
    return float(out[0]) if np.ndim(t) == 0 else out


def char_magnitude_mc(f: QuadraticPoly, t, N: int, seed=0):
    """Monte-Carlo |E exp(2 pi i t f)| with one sample set shared by every t.

    Returns (magnitude, standard_error) arrays.
    """
    rng = np.random.default_rng(seed)
    vals = np.asarray([float(v) for v in evaluate_many(f, sample_signs(rng, N, f.n))])
    t = np.atleast_1d(np.asarray(t, dtype=float))
    mag = np.empty(t.shape)
    se = np.empty(t.shape)
    for k, tk in enumerate(t):
        z = np.exp(1j * TWO_PI * tk * vals)
        m = z.mean()
        mag[k] = abs(m)
        # delta method on |mean|: project the fluctuation onto the mean's direction
        u = m / abs(m) if abs(m) > 0 else 1.0
        proj = (z * np.conj(u)).real
        se[k] = proj.std(ddof=1) / np.sqrt(N) if N > 1 else 0.0
    return mag, se


@dataclass(frozen=True)
class Partition:
    """Disjoint index sets I, J covering range(n) (0-based)."""

    I: tuple
    J: tuple
    n: int

    def __init__(self, I, J, n):
        I, J = tuple(sorted(int(i) for i in I)), tuple(sorted(int(j) for j in J))
        if set(I) & set(J):
            raise ValueError("I and J must be disjoint")
        if set(I) | set(J) != set(range(n)) or len(I) + len(J) != n:
            raise ValueError("I and J must cover range(n)")
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "n", n)

    @classmethod
    def split(cls, n, size_j):
        return cls(range(n - size_j), range(n - size_j, n), n)


@dataclass
class DecoupledLinearForm:
    """f(xi_I, xi_J) - f(xi_I, xi'_J) = sum_{l in I} A_l xi_l + A for a fixed (xi_J, xi'_J)."""

    coeffs: np.ndarray
    const: float

    @classmethod
    def from_outcome(cls, f: QuadraticPoly, P: Partition, xj, xj_prime):
        m = f.matrix
        xj = np.asarray(xj)
        xp = np.asarray(xj_prime)
        d = xj - xp
        J = list(P.J)
        coeffs = np.array([sum(m[l, j] * d[k] for k, j in enumerate(J)) for l in P.I], dtype=object)
        const = 0
        for a, j in enumerate(J):
            const += f.lin[j] * d[a]
            for b in range(a, len(J)):
                const += m[j, J[b]] * (xj[a] * xj[b] - xp[a] * xp[b])
        return cls(coeffs, const)


def cosine_product_bound(form: DecoupledLinearForm | np.ndarray, t) -> float:
    """prod_l |cos(2 pi t A_l)|: the conditional magnitude for one outcome."""
    a = form.coeffs if isinstance(form, DecoupledLinearForm) else form
    a = np.asarray(a, dtype=float)
    return float(np.prod(np.abs(np.cos(TWO_PI * t * a))))


def _difference_law(nj):
    """All d in {-2,0,2}^nj for d = xi - xi' with their probabilities."""
    pts = np.array([-2.0, 0.0, 2.0])
    pw = np.array([0.25, 0.5, 0.25])
    D = np.array(list(itertools.product(range(3), repeat=nj)), dtype=np.int64).reshape(-1, nj)
    return pts[D], np.prod(pw[D], axis=1) if nj else np.ones(1)


def decoupling_check(f: QuadraticPoly, P: Partition, t, mode="exact", N=20_000, seed=0,
                     cap: int | None = None, tol=1e-12):
    """Compare |phi(t)|^2 with E_{xi_J, xi'_J} prod_{l in I} |cos(2 pi t A_l)|.

    Exact mode enumerates xi for the left side and the 3^|J| difference
    vectors for the right side. MC mode samples both.
    """
    if f.field == "complex":
        raise TypeError("decoupling needs a real-valued polynomial")
    if P.n != f.n:
        raise ValueError("partition size does not match the polynomial")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    sub = f.matrix[np.ix_(list(P.I), list(P.J))].astype(float)
    if mode == "exact":
        if len(P.I) + 2 * len(P.J) > enumeration_cap(cap):
            raise EnumerationCapError("|I| + 2|J| exceeds the enumeration cap")
        vals, w = _support(f)
        lhs = char_from_support(vals, w, ts) ** 2
        D, pd = _difference_law(len(P.J))
        A = D @ sub.T  # rows: outcomes, cols: l in I
        rhs = np.array([pd @ np.prod(np.abs(np.cos(TWO_PI * tk * A)), axis=1) for tk in ts])
        lhs_err = rhs_err = np.zeros_like(ts)
    elif mode == "mc":
        rng = np.random.default_rng(seed)
        lhs, lhs_se = char_magnitude_mc(f, ts, N, seed=rng.integers(2**63))
        lhs = lhs ** 2
        lhs_err = 2 * lhs_se
        X = sample_signs(rng, N, len(P.J)) - sample_signs(rng, N, len(P.J))
        A = X @ sub.T
        samples = np.array([np.prod(np.abs(np.cos(TWO_PI * tk * A)), axis=1) for tk in ts])
        rhs = samples.mean(axis=1)
        rhs_err = samples.std(axis=1, ddof=1) / np.sqrt(N)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ok = lhs <= rhs + tol + 3 * (lhs_err + rhs_err)
    rep = {"t": ts, "lhs_sq": lhs, "rhs": rhs, "holds": ok, "mode": mode}
    if mode == "mc":
        rep["lhs_sq_se"] = lhs_err / 2
        rep["rhs_se"] = rhs_err
    if np.ndim(t) == 0:
        rep = {k: (v[0] if isinstance(v, np.ndarray) else v) for k, v in rep.items()}
        rep["holds"] = bool(rep["holds"])
    return rep


def adaptive_simpson(g, a, b, atol=1e-9, max_depth=30, initial_panels=16):
    """Integral of a vectorized g over [a, b] with an error estimate.

    Starts from `initial_panels` equal panels, splits the tolerance between
    them and recurses on each (Richardson-corrected, error |S2 - S1| / 15).
    """
    xs = np.linspace(a, b, 2 * initial_panels + 1)
    ys = g(xs)
    total = 0.0
    err = 0.0
    failed = False
    stack = []
    for p in range(initial_panels):
        x0, x2 = xs[2 * p], xs[2 * p + 2]
        f0, f1, f2 = ys[2 * p], ys[2 * p + 1], ys[2 * p + 2]
        s = (x2 - x0) / 6 * (f0 + 4 * f1 + f2)
        stack.append((x0, x2, f0, f1, f2, s, atol / initial_panels, 0))
    while stack:
        x0, x2, f0, f1, f2, s, tol, depth = stack.pop()
        x1 = 0.5 * (x0 + x2)
        ql, qr = g(np.array([0.5 * (x0 + x1), 0.5 * (x1 + x2)]))
        sl = (x1 - x0) / 6 * (f0 + 4 * ql + f1)
        sr = (x2 - x1) / 6 * (f1 + 4 * qr + f2)
        diff = sl + sr - s
        if abs(diff) <= 15 * tol or depth >= max_depth:
            if abs(diff) > 15 * tol:
                failed = True
            total += sl + sr + diff / 15
            err += abs(diff) / 15
        else:
            stack.append((x1, x2, f1, qr, f2, sr, tol / 2, depth + 1))
            stack.append((x0, x1, f0, ql, f1, sl, tol / 2, depth + 1))
    if failed:
        raise QuadratureError("adaptive Simpson reached max depth", total, err)
    return total, err


@dataclass
class EsseenResult:
    bound: float
    integral: float
    quadrature_error: float
    C_impl: float
    s: float
    eps_freq: float

    def as_dict(self):
        return dict(self.__dict__)


def _integral_abs_phi(vals, w, eps_freq, atol, max_depth):
    # |phi| is even: integrate [0, eps] and double
    g = lambda t: char_from_support(vals, w, t)  # noqa: E731
    half, err = adaptive_simpson(g, 0.0, eps_freq, atol / 2, max_depth)
    return 2 * half, 2 * err


def esseen_bound(f: QuadraticPoly, x, s, eps_freq, C_impl=C_IMPL, atol=1e-9, max_depth=30,
                 support=None) -> EsseenResult:
    """C_impl (s + 1/eps) int_{-eps}^{eps} |E exp(2 pi i t f)| dt.

    The bound does not depend on x; it is accepted for a uniform call shape.
    """
    if s <= 0 or eps_freq <= 0:
        raise ValueError("s and eps_freq must be positive")
    vals, w = support if support is not None else _support(f)
    integral, err = _integral_abs_phi(vals, w, float(eps_freq), atol, max_depth)
    raw = (s + 1.0 / eps_freq) * integral
    return EsseenResult(C_impl * raw, integral, err, C_impl, float(s), float(eps_freq))


def calibration_corpus(instances=None, seed=None, n_max=None):
    cfg = CALIBRATION
    instances = cfg["instances"] if instances is None else instances
    rng = np.random.default_rng(cfg["seed"] if seed is None else seed)
    n_max = cfg["n_max"] if n_max is None else n_max
    for _ in range(instances):
        n = int(rng.integers(1, n_max + 1))
        yield QuadraticPoly.random(n, rng, density=float(rng.uniform(0.2, 1.0)))


def calibrate_esseen_constant(instances=None, seed=None, n_max=None):
    """Max probability/raw-bound ratio over the corpus, and that max rounded up to 0.1."""
    worst = 0.0
    for f in calibration_corpus(instances, seed, n_max):
        d = exact_distribution(f)
        x, _ = max_point_probability(d)
        vals = np.array([float(v) for v, _ in d.items()])
        w = np.array([c for _, c in d.items()], dtype=float) / d.total
        for s in CALIBRATION["radii"]:
            p = float(small_ball_probability(d, x, Fraction(s)))
            raw = esseen_bound(f, x, s, 1.0 / s, C_impl=1.0, support=(vals, w)).bound
            worst = max(worst, p / raw)
    return worst, ceil(worst * 10 - 1e-12) / 10


def sweep(f: QuadraticPoly, ts, mode="exact", N=20_000, seed=0):
    """Rows (t, magnitude, quadrature_error); the error column is the MC standard error or 0."""
    ts = np.asarray(ts, dtype=float)
    if mode == "exact":
        mag = char_magnitude(f, ts)
        mag = np.atleast_1d(mag)
        err = np.zeros_like(ts)
    else:
        mag, err = char_magnitude_mc(f, ts, N, seed)
    return list(zip(ts.tolist(), mag.tolist(), err.tolist()))
