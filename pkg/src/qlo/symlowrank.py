"""Symmetric rank-< r approximation in entrywise L1 via the staged construction
A -> A* -> (w, B*) -> (A', B', w') -> I -> H, with a self-certifying trace.

Threshold schedule (all explicit, see PipelineParams):
  basis level for j vectors   eps^(b^j) with eps = alpha^(b^-r), so level(r) = alpha
  tilde-alpha                 alpha^(b^(q-r))
  column cut                  tilde-alpha^c * n
  discrepancy-graph cut       tilde-alpha^g
  index-set determinant       (tilde-alpha / 4)^q
The classical schedule is b = 6r, c = 3r, g = 2r.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from qlo.closure import ClosureTooLarge, coefficient_set_closure
from qlo.exact import det, is_exact, rank, solve_left, to_fraction_array
from qlo.io import matrix_from_json, matrix_to_json
from qlo.robust import (
    best_minor,
    check_eps_independence,
    extend_in_span,
    l1,
    select_basis_rows,
)


class HypothesisFailure(RuntimeError):
    """A has too many disjoint alpha-independent r-tuples (the collection is attached)."""

    def __init__(self, msg, tuples, stage="A*"):
        super().__init__(msg)
        self.tuples = tuples
        self.stage = stage


class NoIndexSet(RuntimeError):
    """No q-set is independent in the discrepancy graph with a large enough minor."""

    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


class InvariantViolation(AssertionError):
    pass


@dataclass
class PipelineParams:
    r: int
    alpha: float
    delta: float | None = None
    level_base: float | None = None
    column_cut_exponent: float | None = None
    graph_cut_exponent: float | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        b = 6 * self.r if self.level_base is None else self.level_base
        self.level_base = b
        if self.column_cut_exponent is None:
            self.column_cut_exponent = 3 * self.r
        if self.graph_cut_exponent is None:
            self.graph_cut_exponent = 2 * self.r

    @property
    def basis_eps(self):
        return float(self.alpha) ** (self.level_base ** (-self.r))

    def tilde_alpha(self, q):
        return float(self.alpha) ** (self.level_base ** (q - self.r))

    def as_dict(self):
        return dict(self.__dict__)


# acceptance-corpus profile: the classical exponents make every cut exceed n at n <= 40
DESK_PROFILE = {"level_base": 1.5, "column_cut_exponent": 1.0, "graph_cut_exponent": 1.0}


def _exact(A):
    A = np.asarray(A)
    return to_fraction_array(A) if is_exact(A) else A.astype(complex if np.iscomplexobj(A) else float)


def _is_symmetric(A):
    if A.dtype == object:
        n = A.shape[0]
        return all(A[i, j] == A[j, i] for i in range(n) for j in range(i))
    return bool(np.allclose(A, A.T, atol=1e-9, rtol=0))


def _zero_rows_cols(A, J):
    A = A.copy()
    J = sorted(J)
    if J:
        A[J, :] = 0
        A[:, J] = 0
    return A


# ---------------------------------------------------------------- stage A*

def _tuple_screen(Af, tuples, budget):
    """Upper bounds on the dependence cost of each row tuple (zero row, smallest singular direction)."""
    T = Af[np.asarray(tuples)]  # m x r x n
    zero_row = np.abs(T).sum(axis=2).min(axis=1)
    if T.shape[1] == 1:
        return zero_row
    u, _, _ = np.linalg.svd(T, full_matrices=True)
    y = u[:, :, -1]
    cost = np.abs(np.einsum("mr,mrn->mn", y.conj() if np.iscomplexobj(y) else y, T)).sum(axis=1)
    cost /= np.abs(y).max(axis=1)
    return np.minimum(zero_row, cost)


def disjoint_independent_tuples(A, r, alpha, budget=None, rows=None):
    """Greedy maximal disjoint r-tuples of rows certified alpha-independent (lexicographic order).

    A float screen discards tuples with an explicit cheap dependence; the
    survivors get the full three-way check and only certified ones count.
    """
    Ax = _exact(A)
    n = Ax.shape[0]
    Af = Ax.astype(float) if Ax.dtype == object else Ax
    rows = [i for i in (range(n) if rows is None else rows) if np.any(Af[i] != 0)]
    thresh = alpha * Ax.shape[1]
    used = set()
    out = []
    checks = 0
    it = itertools.combinations(rows, r)
    while True:
        block = [t for t in itertools.islice(it, 50_000)]
        if not block:
            break
        block = [t for t in block if not used.intersection(t)]
        if not block:
            continue
        screen = _tuple_screen(Af, block, thresh)
        for t, s in zip(block, screen):
            if used.intersection(t) or s <= thresh * (1 - 1e-9):
                continue
            if budget is not None and checks >= budget:
                return out
            checks += 1
            if check_eps_independence(Ax[list(t)], alpha).certified:
                out.append(t)
                used.update(t)
    return out


def build_A_star(A, r, alpha, delta=None):
    """Zero the rows/columns of a maximal disjoint alpha-independent r-tuple collection, repeated to a fixpoint.

    Returns (A*, J, rounds) where rounds lists the collection found in each pass.
    """
    Ax = _exact(A)
    n = Ax.shape[0]
    J = set()
    rounds = []
    cur = Ax
    while True:
        tup = disjoint_independent_tuples(cur, r, alpha)
        if not tup:
            break
        if not rounds and delta is not None and len(tup) >= delta * n:
            raise HypothesisFailure(f"{len(tup)} >= delta*n disjoint {r}-tuples are {alpha}-independent", tup)
        rounds.append(tup)
        for t in tup:
            J.update(t)
        cur = _zero_rows_cols(Ax, J)
    return cur, sorted(J), rounds


# ---------------------------------------------------------------- stage B*

def reanchor_in_tau(v, W, eta_tilde, tilde_alpha):
    """Replace an approximation of v in span(W) by one whose entries lie in tau_q(S).

    Columns where the approximation is off by >= 2q eta / tilde_alpha are
    avoided; on the best minor I of the rest, v* is the unique span vector with v*_I = v_I.
    """
    W = np.asarray(W)
    q, n = W.shape
    if q == 0:
        return np.zeros(n, dtype=object) * 0, ()
    v = np.asarray(v)
    eta = l1(v - eta_tilde) / n
    gap = np.array([abs(a - b) for a, b in zip(v, eta_tilde)], dtype=object)
    bad_cut = 2 * q * eta / tilde_alpha
    cols = [j for j in range(n) if gap[j] < bad_cut] if eta > 0 else list(range(n))
    if len(cols) < q:
        cols = list(range(n))
    I, d, _ = best_minor(W, q, cols)
    if d == 0:
        I, d, _ = best_minor(W, q)
    return extend_in_span(W, I, v[list(I)]), I


def build_B_star(A_star, params: PipelineParams, S=None):
    """Basis rows w of A* and B* with every row in span(w) (set mode: entries in tau_q(S))."""
    Ax = _exact(A_star)
    n = Ax.shape[0]
    sel = select_basis_rows(Ax, params.basis_eps, params.r, level_base=params.level_base)
    if not sel.hypothesis_ok:
        raise HypothesisFailure("found r basis rows: A* still has an independent r-tuple", [tuple(sel.chosen)], "B*")
    q = sel.q
    W = Ax[sel.chosen]
    B = sel.approximations.copy()
    anchors = None
    if S is not None:
        ta = params.tilde_alpha(q)
        anchors = []
        for i in range(n):
            if i in sel.chosen:
                anchors.append(None)
                continue
            B[i], I = reanchor_in_tau(Ax[i], W, sel.approximations[i], ta)
            anchors.append(list(I))
    coeffs = _span_coefficients(B, W)
    return q, list(sel.chosen), B, coeffs, {"levels": sel.levels, "residuals": [l1(Ax[i] - B[i]) for i in range(n)],
                                            "anchors": anchors}


def _span_coefficients(B, W):
    """C with B = C W exactly (W has independent rows)."""
    q = W.shape[0]
    n = B.shape[0]
    if q == 0:
        return np.zeros((n, 0), dtype=object)
    I, d, _ = best_minor(W, q)
    WI = W[:, list(I)]
    C = np.empty((n, q), dtype=W.dtype)
    for i in range(n):
        C[i] = solve_left(WI, B[i, list(I)])
    if W.dtype == object and any(v != 0 for v in (C @ W - B).flat):
        raise InvariantViolation("B* row outside span(w)")
    return C


# ---------------------------------------------------------------- stage A', B'

def zero_bad_columns(A_star, B_star, W, tilde_alpha, exponent):
    """Zero rows/columns j with ||col_j(A*) - col_j(B*)||_1 >= tilde_alpha^exponent * n."""
    n = A_star.shape[0]
    cut = tilde_alpha ** exponent * n
    D = A_star - B_star
    col = [l1(D[:, j]) for j in range(n)]
    J2 = [j for j in range(n) if col[j] >= cut]
    A1 = _zero_rows_cols(A_star, J2)
    B1 = _zero_rows_cols(B_star, J2)
    W1 = W.copy()
    if J2 and W1.size:
        W1[:, J2] = 0
    return A1, B1, W1, J2, cut


# ---------------------------------------------------------------- stage I

def discrepancy_graph(A1, B1, cut):
    D = np.abs((A1 - B1).astype(float) if A1.dtype == object else A1 - B1)
    E = (D >= cut) | (D.T >= cut)
    np.fill_diagonal(E, False)
    if A1.dtype == object:
        # exact recheck near the cut
        for i, j in zip(*np.nonzero(np.abs(D - cut) <= 1e-9)):
            if i != j:
                e = abs(A1[i, j] - B1[i, j]) >= cut or abs(A1[j, i] - B1[j, i]) >= cut
                E[i, j] = E[j, i] = e or E[i, j]
    return E


def select_index_set(A1, B1, W1, tilde_alpha, graph_exponent, det_threshold=None):
    """q columns, pairwise non-adjacent in the discrepancy graph, maximizing |det W1_I| (>= threshold)."""
    q = W1.shape[0]
    if q == 0:
        return (), Fraction(1), {"edges": 0, "threshold": 1}
    cut = tilde_alpha ** graph_exponent
    thr = (tilde_alpha / 4) ** q if det_threshold is None else det_threshold
    E = discrepancy_graph(A1, B1, cut)
    n = W1.shape[1]
    Wf = W1.astype(float) if W1.dtype == object else W1
    best, best_val = None, -1.0
    nz = [j for j in range(n) if np.any(Wf[:, j] != 0)]
    for I in itertools.combinations(nz, q):
        if any(E[a, b] for a, b in itertools.combinations(I, 2)):
            continue
        v = abs(np.linalg.det(Wf[:, list(I)]))
        if v > best_val * (1 + 1e-12):
            best, best_val = I, v
    info = {"edges": int(E.sum() // 2), "threshold": thr, "cut": cut, "max_degree": int(E.sum(axis=1).max(initial=0))}
    if best is None or best_val < float(thr):
        fallback, d, _ = best_minor(W1, q)
        raise NoIndexSet(f"no independent {q}-set with |det| >= {float(thr):.3g} (best {best_val:.3g})",
                         {"I": fallback, "det": d, "graph_best": best, "graph_best_det": best_val, **info})
    d = det(W1[:, list(best)])
    return best, d, info


# ---------------------------------------------------------------- stage H

def build_H(A1, B1, W1, I):
    """Symmetric H with rows in span(w'): h_ii = b'_ii, h_ij = a'_ij on I, mirrored, then extended."""
    n = A1.shape[0]
    q = len(I)
    I = list(I)
    dtype = A1.dtype
    H = np.zeros((n, n), dtype=dtype)
    if dtype == object:
        H[:] = Fraction(0)
    if q == 0:
        return H
    for i in I:
        p = np.array([B1[i, i] if j == i else A1[i, j] for j in I], dtype=dtype)
        H[i] = extend_in_span(W1, I, p)
    for i in range(n):
        if i in I:
            continue
        p = np.array([H[j, i] for j in I], dtype=dtype)
        H[i] = extend_in_span(W1, I, p)
    if not _is_symmetric(H):
        raise InvariantViolation("H is not symmetric")
    return H


# ---------------------------------------------------------------- pipeline

@dataclass
class PipelineTrace:
    params: dict
    A: np.ndarray
    A_star: np.ndarray
    J: list
    rounds: list
    q: int
    basis: list
    B_star: np.ndarray
    coeffs: np.ndarray
    tilde_alpha: float
    A1: np.ndarray
    B1: np.ndarray
    W1: np.ndarray
    J2: list
    I: list
    det_I: object
    H: np.ndarray
    distances: dict
    premise_failures: list = field(default_factory=list)
    set_mode: dict | None = None
    anchors: list | None = None

    def to_json(self):
        d = dict(self.__dict__)
        for k in ("A", "A_star", "B_star", "coeffs", "A1", "B1", "W1", "H"):
            d[k] = matrix_to_json(d[k])
        d["rounds"] = [[list(t) for t in rd] for rd in self.rounds]
        d["det_I"] = str(self.det_I) if isinstance(self.det_I, Fraction) else float(self.det_I)
        d["distances"] = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.distances.items()}
        d["I"] = list(self.I)
        d["kind"] = "pipeline-trace"
        if self.set_mode is not None:
            d["set_mode"] = {"S": [str(s) for s in sorted(self.set_mode["S"])], "r": self.set_mode["r"],
                             "verified": self.set_mode.get("verified")}
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        d.pop("kind", None)
        for k in ("A", "A_star", "B_star", "coeffs", "A1", "B1", "W1", "H"):
            d[k] = matrix_from_json(d[k]) if d[k] != [] else np.zeros((0, 0), dtype=object)
        exact = d["A"].dtype == object
        d["rounds"] = [[tuple(t) for t in rd] for rd in d["rounds"]]
        d["det_I"] = Fraction(d["det_I"]) if isinstance(d["det_I"], str) else d["det_I"]
        d["distances"] = {k: (Fraction(v) if isinstance(v, str) else v) for k, v in d["distances"].items()}
        if d.get("set_mode") is not None:
            d["set_mode"] = {"S": {Fraction(s) for s in d["set_mode"]["S"]}, "r": d["set_mode"]["r"],
                             "verified": d["set_mode"].get("verified")}
        n = d["A"].shape[0]
        for k in ("W1",):
            if d[k].size == 0:
                d[k] = np.zeros((0, n), dtype=object if exact else float)
        if d["coeffs"].size == 0:
            d["coeffs"] = np.zeros((n, 0), dtype=object if exact else float)
        return cls(**d)


@dataclass
class LowRankResult:
    H: np.ndarray
    q: int
    distance: object
    trace: PipelineTrace
    set_mode: dict | None = None


def symmetric_low_rank_approx(A, r, alpha, delta=None, S=None, **schedule) -> LowRankResult:
    """Run every stage and return H (symmetric, rank <= q <= r-1) with its trace.

    Numeric premises that fail at small n are recorded in
    trace.premise_failures instead of aborting; a true hypothesis failure
    (too many independent tuples, or r basis rows) raises HypothesisFailure.
    """
    params = PipelineParams(r, alpha, delta, **schedule)
    Ax = _exact(A)
    n = Ax.shape[0]
    if Ax.shape != (n, n) or not _is_symmetric(Ax):
        raise ValueError("A must be square and symmetric")
    if S is not None:
        Sset = {Fraction(s) for s in S} | {Fraction(0)}
        if any(x not in Sset for x in Ax.flat):
            raise ValueError("entries of A must lie in S")
    failures = []
    if max((abs(x) for x in Ax.flat), default=0) > 1:
        failures.append("entries exceed 1 in absolute value")
    A_star, J, rounds = build_A_star(Ax, r, alpha, delta)
    q, basis, B_star, coeffs, binfo = build_B_star(A_star, params, S)
    ta = params.tilde_alpha(q)
    W = A_star[basis] if q else np.zeros((0, n), dtype=Ax.dtype)
    A1, B1, W1, J2, cut = zero_bad_columns(A_star, B_star, W, ta, params.column_cut_exponent)
    if q and not check_eps_independence(W1, ta / 2).certified:
        failures.append("w' not certified (tilde_alpha/2)-independent")
    try:
        I, dI, iinfo = select_index_set(A1, B1, W1, ta, params.graph_cut_exponent)
    except NoIndexSet as e:
        failures.append(f"index set: {e}")
        I, dI = e.best["I"], e.best["det"]
        if dI == 0:
            raise InvariantViolation("w' lost full rank after column zeroing") from e
    H = build_H(A1, B1, W1, I)
    dist = {
        "A_Astar": l1(Ax - A_star),
        "Astar_Bstar": l1(A_star - B_star),
        "Astar_A1": l1(A_star - A1),
        "A1_B1": l1(A1 - B1),
        "H_B1": l1(H - B1),
        "A_H": l1(Ax - H),
    }
    set_info = None
    if S is not None:
        set_info = {"S": Sset, "r": r}
        try:
            cl = coefficient_set_closure(Sset, r, strict=True)
            set_info["verified"] = all(cl.contains(x, 1) for x in B_star.flat) and all(cl.contains(x, 3) for x in H.flat)
        except ClosureTooLarge:
            set_info["verified"] = None
            failures.append("S' too large to enumerate; membership not verified")
    trace = PipelineTrace(params.as_dict(), Ax, A_star, J, rounds, q, basis, B_star, coeffs, ta,
                          A1, B1, W1, J2, list(I), dI, H, dist, failures, set_info, binfo.get("anchors"))
    return LowRankResult(H, q, dist["A_H"], trace, set_info)


def symmetric_close(A, A_low, r, **schedule) -> LowRankResult:
    """Given a rank-< r matrix A_low near A, run the pipeline with alpha = delta = sqrt(||A - A_low||_1 / n^2)."""
    Ax = _exact(A)
    n = Ax.shape[0]
    if rank(A_low) >= r:
        raise ValueError("A_low must have rank < r")
    a = float(l1(Ax - _exact(A_low))) / n ** 2
    t = max(a, 1e-12) ** 0.5
    return symmetric_low_rank_approx(Ax, r, min(t, 1.0), min(t, 1.0), **schedule)


# ---------------------------------------------------------------- verification

def verify_trace(tr: PipelineTrace):
    """Recompute every stage from the stored matrices. Returns (ok, failures)."""
    fails = []
    p = PipelineParams(**tr.params)
    A = tr.A
    n = A.shape[0]
    exact = A.dtype == object

    def eq(X, Y):
        if X.shape != Y.shape:
            return False
        if exact:
            return all(a == b for a, b in zip(X.flat, Y.flat))
        return bool(np.allclose(X, Y, atol=1e-9))

    if not _is_symmetric(A):
        fails.append("A not symmetric")
    # A*: replay the rounds; every tuple is certified in the matrix of its round
    J = set()
    cur = A
    for rd in tr.rounds:
        for t in rd:
            if J.intersection(t):
                fails.append(f"tuple {t} reuses a zeroed row")
            if not check_eps_independence(cur[list(t)], p.alpha).certified:
                fails.append(f"tuple {t} not certified {p.alpha}-independent")
        for t in rd:
            J.update(t)
        cur = _zero_rows_cols(A, J)
    if sorted(J) != sorted(tr.J):
        fails.append("J does not match the rounds")
    if not eq(cur, tr.A_star):
        fails.append("A* does not match A with J zeroed")
    if l1(A - tr.A_star) > 2 * len(tr.J) * n:
        fails.append("||A* - A||_1 > 2|J|n")
    if disjoint_independent_tuples(tr.A_star, p.r, p.alpha):
        fails.append("A* still has a certified alpha-independent r-tuple")
    # B*
    q = tr.q
    if q != len(tr.basis) or q >= p.r:
        fails.append("q inconsistent")
    W = tr.A_star[tr.basis] if q else np.zeros((0, n), dtype=A.dtype)
    for j in range(1, q + 1):
        lvl = p.basis_eps ** (p.level_base ** j)
        if not check_eps_independence(W[:j], lvl).certified:
            fails.append(f"first {j} basis rows not certified at level {lvl:.4g}")
    if q and not eq(tr.coeffs @ W, tr.B_star):
        fails.append("B* rows not in span(w) with the stored coefficients")
    if not q and any(x != 0 for x in tr.B_star.flat):
        fails.append("q = 0 but B* != 0")
    ta = p.tilde_alpha(q)
    if abs(ta - tr.tilde_alpha) > 1e-12:
        fails.append("tilde_alpha mismatch")
    # A', B'
    A1, B1, W1, J2, cut = zero_bad_columns(tr.A_star, tr.B_star, W, ta, p.column_cut_exponent)
    if sorted(J2) != sorted(tr.J2) or not eq(A1, tr.A1) or not eq(B1, tr.B1) or (q and not eq(W1, tr.W1)):
        fails.append("column-zeroing stage does not recompute")
    if len(J2) * cut > l1(tr.A_star - tr.B_star) + 1e-9:
        fails.append("|J2| bound violated")
    if l1(tr.A1 - tr.A_star) > 2 * len(J2) * n:
        fails.append("||A' - A*||_1 > 2|J2|n")
    for i in range(n):
        if any(i == j for j in J2):
            continue
        if l1(tr.A1[:, i] - tr.B1[:, i]) >= cut:
            fails.append(f"column {i} of A' - B' not below the cut")
            break
        if l1(tr.A1[i] - tr.B1[i]) > l1(tr.A_star[i] - tr.B_star[i]):
            fails.append(f"row {i} distance grew")
            break
    if not _is_symmetric(tr.A1):
        fails.append("A' not symmetric")
    # I
    I = list(tr.I)
    if len(I) != q:
        fails.append("|I| != q")
    dI = det(tr.W1[:, I]) if q else Fraction(1)
    if (dI != tr.det_I) if exact else abs(dI - tr.det_I) > 1e-9:
        fails.append("det M_I mismatch")
    if dI == 0:
        fails.append("M_I singular")
    graph_ok = True
    for a, b in itertools.combinations(I, 2):
        cutg = ta ** p.graph_cut_exponent
        if abs(tr.A1[a, b] - tr.B1[a, b]) >= cutg or abs(tr.A1[b, a] - tr.B1[b, a]) >= cutg:
            graph_ok = False
    thr = (ta / 4) ** q
    if (not graph_ok or abs(dI) < thr) and not any(f.startswith("index set") for f in tr.premise_failures):
        fails.append("index set predicates fail without a recorded premise failure")
    # H
    if dI != 0:
        H = build_H(tr.A1, tr.B1, tr.W1, I)
        if not eq(H, tr.H):
            fails.append("H does not recompute")
    if not _is_symmetric(tr.H):
        fails.append("H not symmetric")
    if rank(tr.H) > q:
        fails.append("rank(H) > q")
    if (l1(A - tr.H) != tr.distances["A_H"]) if exact else abs(l1(A - tr.H) - tr.distances["A_H"]) > 1e-9:
        fails.append("distance mismatch")
    if tr.set_mode is not None and tr.set_mode.get("verified") is not None:
        cl = coefficient_set_closure(tr.set_mode["S"], tr.set_mode["r"])
        ok = all(cl.contains(x, 1) for x in tr.B_star.flat) and all(cl.contains(x, 3) for x in tr.H.flat)
        if ok != tr.set_mode["verified"]:
            fails.append("set-mode membership does not recompute")
    return not fails, fails


# ---------------------------------------------------------------- planted instances

def planted_instance(n, rank_, rate, rng, mode="zero"):
    """Symmetric +-1 matrix of rank 1 (u u^T) or 2 (class sign pattern) with a fraction of
    symmetric off-diagonal pairs corrupted (zeroed or sign-flipped).

    Returns (A, planted, corruption mass).
    """
    u = rng.choice([-1, 1], size=n)
    if rank_ == 1:
        P = np.outer(u, u)
    elif rank_ == 2:
        cls = rng.permutation(np.arange(n) % 2)
        Sg = np.array([[1, -1], [-1, -1]])
        P = Sg[np.ix_(cls, cls)] * np.outer(u, u)
    else:
        raise ValueError("planted rank must be 1 or 2")
    A = P.copy()
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = max(1, int(round(rate * len(pairs))))
    for idx in rng.choice(len(pairs), size=k, replace=False):
        i, j = pairs[idx]
        A[i, j] = A[j, i] = 0 if mode == "zero" else -A[i, j]
    Ax = to_fraction_array(A)
    return Ax, to_fraction_array(P), l1(Ax - to_fraction_array(P))
