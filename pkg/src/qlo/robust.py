"""Robust linear independence: epsilon-independence verdicts with checkable witnesses,
delta-non-degeneracy through an explicit sphere net, minor search, and span tools.

Conventions: a vector list is a q x n array whose rows are the vectors.
Object arrays of Fractions/ints are handled exactly; float/complex arrays
use LAPACK with a 1e-9 tolerance. Indices in witnesses are 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, sqrt

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog

from qlo.exact import (
    FLOAT_TOL,
    det,
    is_exact,
    rank,
    rationalize,
    solve_left,
    to_fraction_array,
)
from qlo.io import matrix_from_json, matrix_to_json, scalar_from_json, scalar_to_json

EXHAUSTIVE_Q = 6
EXHAUSTIVE_COMBOS = 10**7
NET_MAX_R = 4
# relative safety margin applied to float-derived lower bounds (singular values)
FLOAT_MARGIN = 1e-9


def _prep(V):
    """(working array, float/complex copy, exact flag, complex flag)."""
    V = np.asarray(V)
    if V.ndim == 1:
        V = V.reshape(1, -1)
    if is_exact(V):
        Vx = to_fraction_array(V)
        return Vx, Vx.astype(float), True, False
    cplx = np.iscomplexobj(V) or (V.dtype == object and any(isinstance(x, complex) for x in V.flat))
    Vf = V.astype(complex if cplx else float)
    return Vf, Vf, False, cplx


def entry_bound(V):
    V = np.asarray(V)
    return max((abs(x) for x in V.flat), default=0)


def l1(x):
    return sum((abs(v) for v in np.asarray(x).flat), Fraction(0) if np.asarray(x).dtype == object else 0.0)


def clip_bound(q: int) -> int:
    """Entry bound q+1 that perturbed vectors can always be clipped to."""
    return q + 1


def adjugate_constant(q: int) -> float:
    """K = (q-1)! (q+1)^(q-1): largest cofactor of a q x q matrix with entries <= q+1."""
    return float(factorial(max(q - 1, 0)) * (q + 1) ** max(q - 1, 0))


# ---------------------------------------------------------------- minors

def _combo_dets(Mf, combos):
    sub = Mf[:, combos]  # q x C x q
    return np.abs(np.linalg.det(np.transpose(sub, (1, 0, 2))))


def best_minor(M, q=None, columns=None, exhaustive_q=EXHAUSTIVE_Q, exhaustive_combos=EXHAUSTIVE_COMBOS):
    """Column set I (sorted tuple) maximizing |det M_I|, with that |det| and a mode label.

    Exhaustive when q <= exhaustive_q and C(n, q) <= exhaustive_combos;
    otherwise QR column pivoting followed by single-column swap local search
    (mode "heuristic": the value is only a lower bound on the maximum).
    """
    Mx, Mf, exact, _ = _prep(M)
    qq = Mx.shape[0]
    q = qq if q is None else q
    if q != qq:
        raise ValueError("q must equal the number of rows")
    cols = list(range(Mx.shape[1])) if columns is None else list(columns)
    if q > len(cols):
        raise ValueError(f"q={q} exceeds the number of columns {len(cols)}")
    if q == 0:
        return (), (Fraction(1) if exact else 1.0), "exhaustive"
    if q <= exhaustive_q and comb(len(cols), q) <= exhaustive_combos:
        best_val = -1.0
        best = None
        chunk = max(1, 2_000_000 // (q * q))
        it = itertools.combinations(cols, q)
        cand = []
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                break
            arr = np.array(block, dtype=np.int64)
            d = _combo_dets(Mf, arr)
            top = d.max()
            if top > best_val * (1 + 1e-9) + 1e-300:
                best_val = top
                cand = [tuple(c) for c in arr[d >= top * (1 - 1e-9)].tolist()]
            elif top >= best_val * (1 - 1e-9):
                cand += [tuple(c) for c in arr[d >= best_val * (1 - 1e-9)].tolist()]
        if exact:
            # float ties are resolved by the exact determinant
            scored = [(abs(det(Mx[:, list(c)])), c) for c in cand]
            val, best = max(scored, key=lambda t: (t[0], [-x for x in t[1]]))
            return best, val, "exhaustive"
        best = min(cand)
        return best, float(abs(np.linalg.det(Mf[:, list(best)]))), "exhaustive"
    sub = Mf[:, cols]
    _, _, piv = qr(sub, pivoting=True, mode="economic")
    chosen = [cols[p] for p in piv[:q]]
    cur = abs(np.linalg.det(Mf[:, chosen]))
    improved = True
    while improved:
        improved = False
        for a in range(q):
            for c in cols:
                if c in chosen:
                    continue
                trial = chosen[:a] + [c] + chosen[a + 1:]
                v = abs(np.linalg.det(Mf[:, trial]))
                if v > cur * (1 + 1e-12):
                    chosen, cur, improved = trial, v, True
    chosen = tuple(sorted(chosen))
    val = abs(det(Mx[:, list(chosen)])) if exact else abs(float(np.linalg.det(Mf[:, list(chosen)])))
    return chosen, val, "heuristic"


def greedy_disjoint_minors(M, q=None, threshold=0, **kw):
    """Best-first disjoint column sets with |det| >= threshold (and > 0).

    Each round takes the best minor among unused columns; stops when it
    falls below the threshold or fewer than q columns remain.
    """
    Mx, _, exact, _ = _prep(M)
    q = Mx.shape[0] if q is None else q
    free = list(range(Mx.shape[1]))
    out = []
    if q == 0:
        return out
    while len(free) >= q:
        cols, val, _ = best_minor(Mx, q, free, **kw)
        if val == 0 or val < threshold:
            break
        out.append((cols, val))
        free = [c for c in free if c not in cols]
    return out


def sigma_min(B) -> float:
    B = np.asarray(B)
    if B.size == 0:
        return float("inf")
    return float(np.linalg.svd(B.astype(complex if np.iscomplexobj(B) else float), compute_uv=False)[-1])


# ---------------------------------------------------------------- dependence witnesses

def direction_cost(V, y):
    """Cheapest total L1 change making y a left kernel vector: sum_j |y.v_j| / max|y|."""
    yv = np.asarray(y) @ np.asarray(V)
    m = max(abs(x) for x in np.asarray(y).flat)
    return l1(yv) / m


def witness_from_direction(V, y, epsilon=None):
    """Explicit dependent v' for kernel direction y, clipped to entries <= q+1.

    The row with the largest |y_k| absorbs the change (y is rescaled so
    y_k = 1). Columns whose new entry would exceed q+1 are zeroed instead.
    """
    Vx, _, exact, _ = _prep(V)
    q, n = Vx.shape
    y = np.asarray(y, dtype=object if exact else Vx.dtype)
    if exact:
        y = np.array([rationalize(v) for v in y], dtype=object)
    k = max(range(q), key=lambda i: abs(y[i]))
    if y[k] == 0:
        raise ValueError("kernel direction must be nonzero")
    y = y / y[k]
    bound = clip_bound(q)
    Vp = Vx.copy()
    for j in range(n):
        s = y @ Vx[:, j]
        if s == 0:
            continue
        new = Vx[k, j] - s
        if abs(new) > bound:
            Vp[:, j] = 0
        else:
            Vp[k, j] = new
    return make_dependence_witness(Vx, Vp, y, epsilon)


def make_dependence_witness(V, Vp, kernel, epsilon=None):
    V = np.asarray(V)
    Vp = np.asarray(Vp)
    pert = [[int(i), int(j), Vp[i, j] - V[i, j]] for i, j in zip(*np.nonzero(Vp != V))]
    cost = sum((abs(d) for _, _, d in pert), Fraction(0) if V.dtype == object else 0.0)
    return {
        "kind": "dependence",
        "epsilon": epsilon,
        "n": int(V.shape[1]),
        "q": int(V.shape[0]),
        "vectors": V,
        "perturbation": pert,
        "kernel": np.asarray(kernel),
        "cost": cost,
    }


def witness_to_json(w):
    out = dict(w)
    out["vectors"] = matrix_to_json(w["vectors"])
    out["kernel"] = matrix_to_json(np.asarray(w["kernel"]))
    out["perturbation"] = [[i, j, scalar_to_json(d)] for i, j, d in w["perturbation"]]
    out["cost"] = scalar_to_json(w["cost"])
    out["epsilon"] = None if w["epsilon"] is None else scalar_to_json(w["epsilon"])
    return out


def witness_from_json(obj):
    w = dict(obj)
    w["vectors"] = matrix_from_json(obj["vectors"])
    exact = w["vectors"].dtype == object
    k = obj["kernel"]
    w["kernel"] = matrix_from_json(k)
    w["perturbation"] = [[int(i), int(j), scalar_from_json(d, exact)] for i, j, d in obj["perturbation"]]
    if obj.get("epsilon") is not None:
        w["epsilon"] = scalar_from_json(obj["epsilon"], exact)
    if obj.get("cost") is not None:
        w["cost"] = scalar_from_json(obj["cost"], exact)
    return w


def verify_dependence_witness(w, tol=FLOAT_TOL):
    """Recompute cost, clipping bound and kernel from raw data. Returns (ok, failures)."""
    V = np.asarray(w["vectors"])
    exact = is_exact(V)
    if exact:
        V = to_fraction_array(V)
    q, n = V.shape
    Vp = V.copy()
    for i, j, d in w["perturbation"]:
        Vp[i, j] = Vp[i, j] + d
    fails = []
    cost = l1(Vp - V)
    eps = w.get("epsilon")
    if eps is not None and cost > eps * n + (0 if exact else tol):
        fails.append(f"cost {cost} exceeds epsilon*n = {eps * n}")
    if entry_bound(Vp) > clip_bound(q) + (0 if exact else tol):
        fails.append("perturbed entries exceed q+1")
    y = np.asarray(w["kernel"])
    if exact and not is_exact(y):
        fails.append("kernel must be exact for rational vectors")
        return False, fails
    if exact:
        y = to_fraction_array(y)
    if all(v == 0 for v in y.flat):
        fails.append("kernel vector is zero")
    res = y @ Vp
    if exact:
        if any(v != 0 for v in res):
            fails.append("kernel does not annihilate the perturbed vectors")
    elif np.max(np.abs(res.astype(complex))) > tol * max(1.0, float(np.max(np.abs(y)))):
        fails.append("kernel residual above tolerance")
    rc = w.get("cost")
    if rc is not None and (rc != cost if exact else abs(rc - cost) > tol):
        fails.append("recorded cost does not match")
    return not fails, fails


# ---------------------------------------------------------------- exact singularization cost (real fields)

def _weighted_median_min(a, b):
    """min over y in [-1, 1] of sum_j |a_j + y b_j|, returning (value, y). Exact for Fractions."""
    pts = [(-aj / bj, abs(bj)) for aj, bj in zip(a, b) if bj != 0]
    if not pts:
        return l1(a), 0 * (a[0] if len(a) else 0)
    pts.sort(key=lambda t: t[0])
    total = sum(w for _, w in pts)
    acc = 0
    y = pts[-1][0]
    for p, w in pts:
        acc += w
        if 2 * acc >= total:
            y = p
            break
    one = type(y)(1)
    y = max(-one, min(one, y))
    return l1(np.asarray(a) + y * np.asarray(b)), y


def _lp_direction(Vf, k):
    """LP: min sum_j |v_kj + sum_{i!=k} y_i v_ij| over |y_i| <= 1. Returns (value, y)."""
    q, n = Vf.shape
    others = [i for i in range(q) if i != k]
    m = len(others)
    c = np.concatenate([np.zeros(m), np.ones(n)])
    Vo = Vf[others].T  # n x m
    A = np.block([[Vo, -np.eye(n)], [-Vo, -np.eye(n)]])
    b = np.concatenate([-Vf[k], Vf[k]])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(-1, 1)] * m + [(0, None)] * n, method="highs")
    y = np.zeros(q)
    y[k] = 1.0
    y[others] = res.x[:m]
    return res.fun, y


def _lp_dual(Vf, k):
    """Dual LP: max over u in [-1,1]^n of (Vu)_k - sum_{i!=k} |(Vu)_i|. Returns u."""
    q, n = Vf.shape
    others = [i for i in range(q) if i != k]
    m = len(others)
    # variables (u, s): maximize V_k.u - sum s  s.t. |V_i.u| <= s_i
    c = np.concatenate([-Vf[k], np.ones(m)])
    Vo = Vf[others]
    A = np.block([[Vo, -np.eye(m)], [-Vo, -np.eye(m)]])
    res = linprog(c, A_ub=A, b_ub=np.zeros(2 * m), bounds=[(-1, 1)] * n + [(0, None)] * m, method="highs")
    return res.x[:n]


def dual_lower_bound(V, k, u):
    """(Vu)_k - sum_{i!=k} |(Vu)_i| for u in [-1,1]^n: lower bound on every dependence with y_k = max."""
    Vu = np.asarray(V) @ np.asarray(u)
    return Vu[k] - sum((abs(Vu[i]) for i in range(len(Vu)) if i != k), 0 * Vu[k])


def real_singularization(V):
    """Exact point/bracket for min over dependent v' of sum ||v_i - v'_i||_1 (real/rational V).

    Returns (upper witness, lower bound, certificate dict). For q <= 2 the two
    coincide; for q >= 3 they come from an LP and its dual, both re-evaluated
    exactly on rationalized vectors.
    """
    Vx, Vf, exact, cplx = _prep(V)
    if cplx:
        raise TypeError("real_singularization needs real input")
    q, n = Vx.shape
    if q == 1:
        w = witness_from_direction(Vx, np.array([1], dtype=object if exact else float))
        return w, l1(Vx[0]), {"method": "exact-min", "q": 1}
    if q == 2:
        best = None
        for k in (0, 1):
            val, y = _weighted_median_min(list(Vx[k]), list(Vx[1 - k]))
            yy = np.empty(2, dtype=Vx.dtype)
            yy[k], yy[1 - k] = (Fraction(1) if exact else 1.0), y
            if best is None or val < best[0]:
                best = (val, yy)
        w = witness_from_direction(Vx, best[1])
        return w, best[0], {"method": "exact-min", "q": 2}
    best_w, lower, us = None, None, []
    for k in range(q):
        _, y = _lp_direction(Vf, k)
        w = witness_from_direction(Vx, y)
        if best_w is None or w["cost"] < best_w["cost"]:
            best_w = w
        u = np.clip(_lp_dual(Vf, k), -1, 1)
        if exact:
            u = np.array([max(Fraction(-1), min(Fraction(1), rationalize(x, 10**6))) for x in u], dtype=object)
        lb = dual_lower_bound(Vx, k, u)
        us.append(u)
        lower = lb if lower is None else min(lower, lb)
    return best_w, max(lower, 0 * lower), {"method": "lp-dual", "q": q, "duals": us}


# ---------------------------------------------------------------- verdicts

@dataclass
class IndependenceVerdict:
    kind: str  # "certified" | "refuted" | "unknown"
    epsilon: object
    n: int
    q: int
    witness: dict | None = None
    certificate: dict | None = None
    upper: object = None  # cheapest dependence found
    lower: object = None  # proven lower bound on any dependence

    @property
    def certified(self):
        return self.kind == "certified"

    @property
    def refuted(self):
        return self.kind == "refuted"


def minors_certificate(V):
    """Disjoint nonsingular minors and the two lower bounds they give on any dependence cost.

    sigma bound: sum_k sigma_min(V_{I_k}) (a singular matrix is at spectral
    distance >= sigma_min, and entrywise L1 dominates spectral norm).
    adjugate bound: sum_k |det V_{I_k}| / K with K = (q-1)!(q+1)^(q-1),
    valid after clipping perturbed entries to q+1 (needs entries <= 1).
    """
    Vx, Vf, exact, _ = _prep(V)
    q = Vx.shape[0]
    minors = greedy_disjoint_minors(Vx, q, threshold=0)
    sig = [sigma_min(Vf[:, list(c)]) for c, _ in minors]
    dets = [d for _, d in minors]
    sigma_bound = sum(sig) * (1 - FLOAT_MARGIN)
    K = adjugate_constant(q)
    adj = sum(float(d) for d in dets) / K if entry_bound(Vx) <= 1 else 0.0
    return {
        "method": "minors",
        "columns": [list(c) for c, _ in minors],
        "dets": dets,
        "sigma_min": sig,
        "sigma_bound": sigma_bound,
        "adjugate_bound": adj,
        "K": K,
        "bound": max(sigma_bound, adj),
    }


def singularization_bounds(V, seed=0, attacks=64, with_minors=None):
    """(best witness found, certified lower bound, certificate) with no reference to epsilon.

    Real input is decided exactly, so the minors certificate is only attached
    there when with_minors is set; complex input always needs it.
    """
    Vx, Vf, exact, cplx = _prep(V)
    q, n = Vx.shape
    if q == 0:
        return None, float("inf"), {"method": "empty"}
    best = None

    def consider(w):
        nonlocal best
        if w is not None and (best is None or w["cost"] < best["cost"]):
            best = w

    # zero-row attacks
    for i in range(q):
        y = np.zeros(q, dtype=Vx.dtype)
        y[i] = 1
        consider(witness_from_direction(Vx, y))
    # smallest left singular vector
    if q <= n:
        u, s, _ = np.linalg.svd(Vf, full_matrices=True)
        consider(witness_from_direction(Vx, np.conj(u[:, -1]) if not exact else u[:, -1].real))
    if with_minors is None:
        with_minors = cplx
    cert = minors_certificate(Vx) if with_minors else {"method": "none", "bound": 0.0}
    lower = cert["bound"]
    if not cplx:
        w, lb, c2 = real_singularization(Vx)
        consider(w)
        if float(lb) > lower or cert["method"] == "none":
            lower, cert = lb, ({**c2, "bound": lb, "minors": cert} if with_minors else {**c2, "bound": lb})
    else:
        rng = np.random.default_rng(seed)
        for _ in range(attacks):
            y = _irls_direction(Vf, rng)
            consider(witness_from_direction(Vx, y))
    return best, lower, cert


def _irls_direction(Vf, rng, iters=30):
    """Local search for a cheap complex kernel direction (reweighted least squares)."""
    q, n = Vf.shape
    y = rng.normal(size=q) + 1j * rng.normal(size=q)
    for _ in range(iters):
        r = np.abs(y @ Vf)
        w = 1.0 / np.maximum(r, 1e-9)
        G = (Vf * w) @ Vf.conj().T
        vals, vecs = np.linalg.eigh((G + G.conj().T) / 2)
        y = vecs[:, 0].conj()
    return y


def check_eps_independence(V, epsilon, seed=0, with_minors=None):
    """Three-way verdict: certified (lower bound > eps n), refuted (witness with cost <= eps n), unknown."""
    Vx, _, exact, _ = _prep(V) if np.asarray(V).size else (np.zeros((0, 0)), None, True, False)
    if not (0 <= epsilon <= 1):
        raise ValueError("epsilon must lie in [0, 1]")
    q = Vx.shape[0]
    if q == 0:
        return IndependenceVerdict("certified", epsilon, 0, 0, certificate={"method": "empty"}, lower=float("inf"))
    n = Vx.shape[1]
    w, lower, cert = singularization_bounds(Vx, seed, with_minors=with_minors)
    budget = epsilon * n
    if w is not None and (w["cost"] <= budget if exact else w["cost"] <= budget + FLOAT_TOL):
        w = dict(w, epsilon=epsilon)
        return IndependenceVerdict("refuted", epsilon, n, q, witness=w, upper=w["cost"], lower=lower)
    up = None if w is None else w["cost"]
    if lower > budget:
        return IndependenceVerdict("certified", epsilon, n, q, certificate=cert, upper=up, lower=lower)
    return IndependenceVerdict("unknown", epsilon, n, q, certificate=cert, upper=up, lower=lower)


def verify_certificate(V, epsilon, cert):
    """Recompute a certified verdict's lower bound from V. Returns (ok, failures)."""
    Vx, Vf, exact, _ = _prep(V)
    q, n = Vx.shape
    fails = []
    m = cert.get("method")
    if m == "empty":
        return q == 0, ([] if q == 0 else ["empty certificate for nonempty list"])
    if m == "minors":
        used = set()
        total_sig = 0.0
        total_det = 0.0
        for cols in cert["columns"]:
            if used & set(cols):
                fails.append("minor column sets overlap")
            used |= set(cols)
            total_sig += sigma_min(Vf[:, cols])
            total_det += float(abs(det(Vx[:, cols])))
        adj = total_det / adjugate_constant(q) if entry_bound(Vx) <= 1 else 0.0
        bound = max(total_sig * (1 - FLOAT_MARGIN), adj)
    else:
        if m == "exact-min":
            _, bound, _ = real_singularization(Vx)
        elif m == "lp-dual":
            us = cert["duals"]
            for u in us:
                if any(abs(x) > 1 for x in np.asarray(u).flat):
                    fails.append("dual vector leaves [-1, 1]")
            bound = min(dual_lower_bound(Vx, k, np.asarray(us[k])) for k in range(q))
        else:
            return False, [f"unknown certificate method {m!r}"]
    if not bound > epsilon * n:
        fails.append(f"recomputed bound {float(bound):.6g} does not exceed epsilon*n = {float(epsilon * n):.6g}")
    return not fails, fails


def attack_certified(V, epsilon, attempts, rng):
    """Seeded attacks of total cost <= eps n; returns the first breaking dependence or None.

    Mixes random kernel directions (cheapest completion), zero-row, zero-column
    and random sparse perturbations; any dependence at cost <= eps n breaks the verdict.
    """
    Vx, Vf, exact, cplx = _prep(V)
    q, n = Vx.shape
    budget = float(epsilon) * n
    for t in range(attempts):
        kind = t % 4
        if kind == 0:
            y = rng.normal(size=q) + (1j * rng.normal(size=q) if cplx else 0)
            y[rng.integers(q)] = 1.0
            w = witness_from_direction(Vx, y)
            if float(w["cost"]) <= budget - FLOAT_TOL and verify_dependence_witness(w)[0]:
                return w
        elif kind == 1:
            i = rng.integers(q)
            if float(l1(Vx[i])) <= budget:
                return {"row": int(i)}
        elif kind == 2:
            cols = rng.permutation(n)
            spent = 0.0
            keep = np.ones(n, dtype=bool)
            for c in cols:
                c_cost = float(l1(Vx[:, c]))
                if spent + c_cost > budget:
                    break
                spent += c_cost
                keep[c] = False
            if keep.sum() < q or np.linalg.matrix_rank(Vf[:, keep], tol=FLOAT_TOL) < q:
                return {"zeroed_columns": np.nonzero(~keep)[0].tolist()}
        else:
            P = Vf.copy()
            k = int(rng.integers(1, n + 1))
            idx = rng.integers(0, q, size=k), rng.integers(0, n, size=k)
            d = rng.normal(size=k)
            d *= budget / max(np.abs(d).sum(), 1e-300) * rng.uniform()
            P[idx] += d
            if np.linalg.svd(P, compute_uv=False)[-1] <= FLOAT_TOL:
                return {"random": True}
    return None


# ---------------------------------------------------------------- non-degeneracy

def sphere_net(r: int, eps: float):
    """Points on the unit sphere of R^r, one per antipodal pair, within eps of every unit vector.

    Grid on the cube faces x_k = +1 (spacing h = 2 eps / sqrt(r-1)),
    radially projected; the projection is 1-Lipschitz outside the unit ball.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if r == 1:
        return np.ones((1, 1)), {"spacing": 0.0, "eps": eps, "points": 1}
    h = 2 * eps / sqrt(r - 1)
    m = int(np.ceil(2 / h))
    g = -1 + (np.arange(m) + 0.5) * (2 / m)  # cell centres: |x - g| <= 1/m <= h/2
    pts = []
    for k in range(r):
        grids = np.meshgrid(*([g] * (r - 1)), indexing="ij")
        face = np.stack([x.ravel() for x in grids], axis=1)
        P = np.insert(face, k, 1.0, axis=1)
        pts.append(P)
    P = np.concatenate(pts)
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    return P, {"spacing": 2 / m, "eps": eps, "points": len(P)}


@dataclass
class NonDegeneracyVerdict:
    kind: str  # "certified" | "refuted" | "unknown"
    delta: float
    delta_cert: float | None = None
    witness: np.ndarray | None = None
    count: int | None = None
    level: float | None = None
    net: dict = field(default_factory=dict)
    min_count: int | None = None


def column_counts(M, E, level):
    """For each row e of E: #{columns w of M : |<w, e>| >= level}."""
    Mf = np.asarray(M, dtype=float)
    out = np.empty(len(E), dtype=np.int64)
    step = max(1, 4_000_000 // max(1, Mf.shape[1]))
    for a in range(0, len(E), step):
        out[a:a + step] = (np.abs(E[a:a + step] @ Mf) >= level - 1e-12).sum(axis=1)
    return out


def check_non_degenerate(M, delta, delta_refute=None, max_r=NET_MAX_R, refine=1):
    """Net test for delta-non-degeneracy of an r x n real matrix.

    Every net point of a delta/(2r)-net sees >= delta n columns at level
    delta  =>  Certified(delta/3) (entries bounded by 1). A net point seeing
    fewer than delta' n columns at level delta' (delta' = delta_refute, default
    delta) is a direct counterexample to delta'-non-degeneracy.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    r, n = M.shape
    if r > max_r:
        raise ValueError(f"r={r} exceeds the net cap {max_r}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    E, meta = sphere_net(r, delta / (2 * r) / refine)
    cnt = column_counts(M, E, delta)
    need = delta * n
    dref = delta if delta_refute is None else delta_refute
    cref = cnt if dref == delta else column_counts(M, E, dref)
    bad = np.nonzero(cref < dref * n)[0]
    if len(bad):
        i = bad[np.argmin(cref[bad])]
        return NonDegeneracyVerdict("refuted", delta, None, E[i], int(cref[i]), dref, meta, int(cnt.min()))
    if (cnt >= need).all() and np.abs(M).max(initial=0) <= 1:
        return NonDegeneracyVerdict("certified", delta, delta / 3, None, None, delta, meta, int(cnt.min()))
    return NonDegeneracyVerdict("unknown", delta, None, None, None, delta, meta, int(cnt.min()))


def verify_non_degeneracy_refutation(M, e, level):
    """A unit e with fewer than level*n columns at |<w,e>| >= level falsifies level-non-degeneracy."""
    M = np.asarray(M, dtype=float)
    e = np.asarray(e, dtype=float)
    unit = abs(np.linalg.norm(e) - 1) <= 1e-9
    c = int((np.abs(e @ M) >= level - 1e-12).sum())
    return unit and c < level * M.shape[1], c


def phase_non_degeneracy(V, delta, phases=64, seed=0):
    """Fraction of sampled phases theta with Re(e^{i theta} V) certified delta-non-degenerate."""
    V = np.asarray(V, dtype=complex)
    rng = np.random.default_rng(seed)
    th = rng.uniform(-np.pi, np.pi, size=phases)
    kinds = [check_non_degenerate((np.exp(1j * t) * V).real, delta).kind for t in th]
    return float(np.mean([k == "certified" for k in kinds])), th, kinds


# ---------------------------------------------------------------- span tools

def extend_in_span(W, I, prescribed):
    """The unique v in rowspan(W) with v_I = prescribed (solves a M_I = prescribed)."""
    Wx, _, exact, _ = _prep(W) if np.asarray(W).size else (np.zeros((0, 0), dtype=object), None, True, False)
    q = Wx.shape[0]
    I = list(I)
    if len(I) != q:
        raise ValueError("|I| must equal the number of rows")
    if q == 0:
        return np.zeros(np.asarray(W).shape[1] if np.asarray(W).ndim == 2 else 0, dtype=object)
    MI = Wx[:, I]
    p = np.asarray(prescribed)
    if exact and is_exact(p):
        if det(MI) == 0:
            raise np.linalg.LinAlgError("M_I is singular")
        a = solve_left(MI, to_fraction_array(p))
    else:
        if abs(np.linalg.det(MI.astype(complex if np.iscomplexobj(MI) else float))) <= FLOAT_TOL:
            raise np.linalg.LinAlgError("M_I is singular")
        a = solve_left(MI.astype(float) if not np.iscomplexobj(MI) else MI, p)
    return a @ Wx


def least_l1_image(B, samples=10_000, seed=0):
    """min over sampled unit e of ||B e||_1 against the floor |det B| / q!."""
    B = np.asarray(B)
    Bf = B.astype(complex if np.iscomplexobj(B) else float)
    q = Bf.shape[0]
    rng = np.random.default_rng(seed)
    E = rng.normal(size=(samples, q))
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    _, _, vt = np.linalg.svd(Bf)
    E = np.vstack([E, vt.conj()[-1:].real if not np.iscomplexobj(Bf) else vt[-1:].real])
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    vals = np.abs(E @ Bf.T).sum(axis=1)
    floor = float(abs(det(B))) / factorial(q)
    m = float(vals.min())
    return {"min": m, "floor": floor, "violation": m < floor - 1e-12, "argmin": E[int(vals.argmin())]}


# ---------------------------------------------------------------- basis selection

def l1_fit(v, W):
    """Coefficients a minimizing ||v - a W||_1 and the fitted vector (exact when inputs are)."""
    Wx, Wf, exact, cplx = _prep(W) if np.asarray(W).size else (None, None, True, False)
    v = np.asarray(v)
    if Wx is None or Wx.shape[0] == 0:
        z = np.zeros_like(v) if not exact else np.array([Fraction(0)] * len(v), dtype=object)
        return np.zeros(0, dtype=object), z
    q, n = Wx.shape
    exact = exact and is_exact(v)
    vx = to_fraction_array(v) if exact else v.astype(Wf.dtype)
    if q == 1:
        pts = [(vx[j] / Wx[0, j], abs(Wx[0, j])) for j in range(n) if Wx[0, j] != 0]
        if not pts or cplx:
            a0 = (0 if not pts else np.vdot(Wf[0], vx) / np.vdot(Wf[0], Wf[0]))
        else:
            pts.sort(key=lambda t: t[0])
            tot = sum(w for _, w in pts)
            acc = 0
            a0 = pts[-1][0]
            for p, w in pts:
                acc += w
                if 2 * acc >= tot:
                    a0 = p
                    break
        a = np.array([a0], dtype=object if exact else Wf.dtype)
        return a, a @ Wx
    if cplx:
        a = np.linalg.lstsq(Wf.T, vx, rcond=None)[0]
        for _ in range(50):
            r = np.abs(vx - a @ Wf)
            w = 1.0 / np.maximum(r, 1e-9)
            a = np.linalg.lstsq((Wf * np.sqrt(w)).T, vx * np.sqrt(w), rcond=None)[0]
        return a, a @ Wx
    vf = vx.astype(float)
    c = np.concatenate([np.zeros(q), np.ones(n)])
    A = np.block([[Wf.T, -np.eye(n)], [-Wf.T, -np.eye(n)]])
    b = np.concatenate([vf, -vf])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * q + [(0, None)] * n, method="highs")
    a = res.x[:q]
    if not exact:
        return a, a @ Wf
    # exact vertex re-solve: an L1 optimum interpolates q columns
    resid = np.abs(vf - a @ Wf)
    cand = [rationalize(x, 10**6) for x in a]
    best_a = np.array(cand, dtype=object)
    best = l1(vx - best_a @ Wx)
    order = list(np.argsort(resid, kind="stable"))
    S = []
    for j in order:
        T = S + [int(j)]
        if rank(Wx[:, T]) == len(T):
            S = T
        if len(S) == q:
            break
    if len(S) == q:
        try:
            a2 = solve_left(Wx[:, S], vx[S])
            c2 = l1(vx - a2 @ Wx)
            if c2 <= best:
                best_a, best = a2, c2
        except np.linalg.LinAlgError:
            pass
    return best_a, best_a @ Wx


@dataclass
class BasisSelection:
    q: int
    chosen: list
    approximations: np.ndarray
    residuals: list
    levels: list
    verdicts: list
    hypothesis_ok: bool


def select_basis_rows(V, eps, r, level_base=None, candidates=None):
    """Greedy basis w_1..w_q with w_1..w_j certified eps^(b^j)-independent (b = level_base, default 6r).

    Rows are tried in index order. Every row then gets its best L1
    approximation inside span(w); chosen rows approximate themselves.
    q == r means the no-independent-r-subset hypothesis failed.
    """
    Vx, _, exact, _ = _prep(V)
    k, n = Vx.shape
    b = 6 * r if level_base is None else level_base
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    cand = list(range(k)) if candidates is None else list(candidates)
    chosen, levels, verdicts = [], [], []
    while len(chosen) < r:
        lvl = eps ** (b ** (len(chosen) + 1))
        pick = None
        for i in cand:
            if i in chosen or all(x == 0 for x in Vx[i]):
                continue
            ver = check_eps_independence(Vx[chosen + [i]], lvl)
            if ver.certified:
                pick = (i, ver)
                break
        if pick is None:
            break
        chosen.append(pick[0])
        levels.append(lvl)
        verdicts.append(pick[1])
    q = len(chosen)
    W = Vx[chosen]
    approx = np.empty_like(Vx)
    res = []
    for i in range(k):
        if i in chosen:
            approx[i] = Vx[i]
        else:
            _, approx[i] = l1_fit(Vx[i], W) if q else (None, np.zeros(n, dtype=Vx.dtype) * Vx[i])
        res.append(l1(Vx[i] - approx[i]))
    return BasisSelection(q, chosen, approx, res, levels, verdicts, q < r)
