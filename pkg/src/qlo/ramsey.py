"""Graphs on bitsets, homogeneous sets, the random-subset coupling U_{pi,xi} and the
quadratic polynomial f_pi with e(U_{pi,xi}) = f_pi(xi).

Vertices are 0-based internally and 1-based in the edge-list text format.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from qlo.exact import det, rank, to_fraction_array
from qlo.poly import PointMass, QuadraticPoly, evaluate_many, max_point_probability

EXACT_HOM_MAX_N = 64
EXACT_SUBSETS_MAX = 10**7
QUARTERS = {Fraction(k, 4) for k in (-2, -1, 0, 1, 2)}


class CouplingIdentityError(AssertionError):
    """e(U_{pi,xi}) != f_pi(xi) for some xi."""


# ---------------------------------------------------------------- graphs

class Graph:
    __slots__ = ("n", "adj")

    def __init__(self, n, edges=()):
        self.n = int(n)
        self.adj = [0] * self.n
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u, v):
        u, v = int(u), int(v)
        if u == v:
            raise ValueError("loops are not allowed")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"edge ({u}, {v}) out of range")
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u

    def has_edge(self, u, v) -> bool:
        return bool(self.adj[u] >> v & 1)

    def e(self, u, v) -> int:
        return self.adj[u] >> v & 1

    def edges(self):
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n) if self.adj[u] >> v & 1]

    @property
    def m(self):
        return sum(bin(a).count("1") for a in self.adj) // 2

    def complement(self) -> "Graph":
        G = Graph(self.n)
        full = (1 << self.n) - 1
        G.adj = [(full ^ a) & ~(1 << u) for u, a in enumerate(self.adj)]
        return G

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges():
            A[u, v] = A[v, u] = 1
        return A

    @classmethod
    def from_adjacency(cls, A):
        A = np.asarray(A)
        if A.shape[0] != A.shape[1] or np.any(A != A.T) or np.any(np.diag(A) != 0):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency entries must be 0/1")
        n = A.shape[0]
        return cls(n, [(u, v) for u in range(n) for v in range(u + 1, n) if A[u, v]])

    def edges_in(self, vertices) -> int:
        mask = 0
        for v in vertices:
            mask |= 1 << v
        return sum(bin(self.adj[v] & mask).count("1") for v in vertices) // 2

    def to_edge_list(self) -> str:
        es = self.edges()
        return f"{self.n} {len(es)}\n" + "".join(f"{u + 1} {v + 1}\n" for u, v in es)

    @classmethod
    def from_edge_list(cls, text: str):
        lines = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or len(lines[0]) != 2:
            raise ValueError("edge list must start with 'n m'")
        n, m = int(lines[0][0]), int(lines[0][1])
        es = [(int(a) - 1, int(b) - 1) for a, b in lines[1:]]
        if len(es) != m:
            raise ValueError(f"header says {m} edges, found {len(es)}")
        return cls(n, es)

    def to_csv(self) -> str:
        return "".join(",".join(str(x) for x in row) + "\n" for row in self.adjacency().tolist())

    @classmethod
    def from_csv(cls, text: str):
        return cls.from_adjacency(np.array([[int(x) for x in ln.split(",")] for ln in text.strip().splitlines()]))

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.adj == other.adj

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def gnp(n, p, rng) -> Graph:
    A = np.triu(rng.random((n, n)) < p, 1)
    return Graph(n, list(zip(*np.nonzero(A))))


def complete_graph(n):
    return Graph(n, itertools.combinations(range(n), 2))


def cycle_graph(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


# ---------------------------------------------------------------- cliques

def _bits(x):
    while x:
        b = x & -x
        yield b.bit_length() - 1
        x ^= b


def _color_order(adj, P):
    """Greedy sequential colouring of P; returns vertices and colour numbers in non-decreasing colour order."""
    order, colors = [], []
    k = 0
    U = P
    while U:
        k += 1
        Q = U
        while Q:
            b = Q & -Q
            v = b.bit_length() - 1
            Q &= ~adj[v] & ~b
            U &= ~b
            order.append(v)
            colors.append(k)
    return order, colors


def max_clique(G: Graph):
    """Maximum clique by bitset branch and bound with a greedy colouring bound."""
    adj = G.adj
    best = []

    def expand(R, P):
        nonlocal best
        order, colors = _color_order(adj, P)
        for idx in range(len(order) - 1, -1, -1):
            if len(R) + colors[idx] <= len(best):
                return
            v = order[idx]
            R2 = R + [v]
            P2 = P & adj[v]
            if P2:
                expand(R2, P2)
            elif len(R2) > len(best):
                best = R2
            P &= ~(1 << v)

    if G.n:
        expand([], (1 << G.n) - 1)
    return sorted(best)


def _greedy_clique(G: Graph):
    best = []
    for s in range(G.n):
        R, P = [s], G.adj[s]
        while P:
            v = max(_bits(P), key=lambda u: bin(G.adj[u] & P).count("1"))
            R.append(v)
            P &= G.adj[v]
        if len(R) > len(best):
            best = R
    return sorted(best)


def homogeneity(G: Graph):
    """Largest homogeneous set; exact up to 64 vertices, otherwise a greedy lower bound."""
    exact = G.n <= EXACT_HOM_MAX_N
    f = max_clique if exact else _greedy_clique
    cl = f(G)
    ind = f(G.complement())
    return {"size": max(len(cl), len(ind)), "clique": cl, "independent": ind, "exact": exact,
            "method": "branch-and-bound" if exact else "greedy-lower-bound"}


def is_c_ramsey(G: Graph, C) -> bool:
    """hom(G) < C log2 n."""
    h = homogeneity(G)
    return h["size"] < C * math.log2(G.n) if G.n > 1 else False


# ---------------------------------------------------------------- coupling

def coupling_set(pi, xi, k):
    """U_{pi,xi}: pi(i) or pi(i+m) for i < m by the sign of xi_i, plus pi(i) for 2m <= i < m+k."""
    n = len(pi)
    m = min(k, n - k)
    if len(xi) != m:
        raise ValueError(f"xi must have length m = {m}")
    U = [pi[i] if xi[i] == 1 else pi[i + m] for i in range(m)]
    U.extend(pi[i] for i in range(2 * m, m + k))
    return sorted(int(u) for u in U)


def sample_coupling(G: Graph, k, seed):
    if not (0 <= k <= G.n):
        raise ValueError("need 0 <= k <= n")
    rng = np.random.default_rng(seed)
    pi = rng.permutation(G.n)
    m = min(k, G.n - k)
    xi = np.where(rng.random(m) < 0.5, 1, -1)
    return coefficient_poly(G, pi, k, verify=False), xi, coupling_set(pi, xi, k)


@dataclass
class CouplingInstance:
    pi: np.ndarray
    k: int
    m: int
    poly: QuadraticPoly
    verified: str = ""

    def a(self, i, j):
        return self.poly.coefficient(i, j)

    def pair_matrix(self):
        """m x m matrix with a_ij above and below the diagonal, zero diagonal."""
        M = np.empty((self.m, self.m), dtype=object)
        M[:] = Fraction(0)
        for i, j, c in self.poly.terms():
            if i != j:
                M[i, j] = M[j, i] = c
        return M


def _edge_counts(A, X):
    """e(U) for each indicator row of X."""
    return ((X @ A) * X).sum(axis=1) // 2


def coefficient_poly(G: Graph, pi, k, verify=True, samples=100, exhaustive_max=20, seed=0) -> CouplingInstance:
    """f_pi: pair coefficients by the four-term formula, a_i and a_0 solved from m+1 exact evaluations."""
    n = G.n
    pi = np.asarray(pi)
    if sorted(pi.tolist()) != list(range(n)):
        raise ValueError("pi must be a permutation of range(n)")
    m = min(k, n - k)
    e = G.e
    q = Fraction(1, 4)
    terms = []
    for i in range(m):
        for j in range(i + 1, m):
            c = q * (e(pi[i], pi[j]) - e(pi[i], pi[j + m]) - e(pi[i + m], pi[j]) + e(pi[i + m], pi[j + m]))
            if c:
                terms.append((i, j, c))
    quad = QuadraticPoly.from_terms(m, terms, [0] * m, 0)

    def residual(xi):
        return G.edges_in(coupling_set(pi, xi, k)) - quad(xi)

    # L(xi) = sum a_i xi_i + a_0: L(1) = sum a_i + a_0 and L(1 - 2e_i) = L(1) - 2 a_i
    ones = [1] * m
    base = Fraction(residual(ones))
    lin = []
    for i in range(m):
        x = list(ones)
        x[i] = -1
        lin.append((base - residual(x)) / 2)
    a0 = base - sum(lin, Fraction(0))
    f = QuadraticPoly.from_terms(m, terms, lin, a0)
    inst = CouplingInstance(pi, k, m, f)
    if verify:
        inst.verified = verify_coupling_identity(G, inst, samples, exhaustive_max, seed)
    return inst


def verify_coupling_identity(G, inst: CouplingInstance, samples=100, exhaustive_max=20, seed=0):
    """Checks e(U_{pi,xi}) = f_pi(xi) on all xi (m <= exhaustive_max) or on random xi; raises on mismatch."""
    m = inst.m
    if m <= exhaustive_max:
        X = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1) * -2 + 1
        how = "exhaustive"
    else:
        X = np.where(np.random.default_rng(seed).random((samples, m)) < 0.5, 1, -1)
        how = f"sampled({samples})"
    A = G.adjacency()
    pi = inst.pi
    k = inst.k
    ind = np.zeros((X.shape[0], G.n), dtype=np.int64)
    for i in range(m):
        ind[np.arange(X.shape[0]), np.where(X[:, i] == 1, pi[i], pi[i + m])] = 1
    for i in range(2 * m, m + k):
        ind[:, pi[i]] = 1
    lhs = _edge_counts(A, ind)
    rhs = evaluate_many(inst.poly, X)
    bad = [t for t in range(len(lhs)) if Fraction(int(lhs[t])) != rhs[t]]
    if bad:
        raise CouplingIdentityError(f"identity fails at xi = {X[bad[0]].tolist()}")
    return how


def coupling_distribution(n, k):
    """Exact law of U_{pi,xi} over all pi and xi, as subset -> count (for uniformity checks, n <= 6)."""
    m = min(k, n - k)
    out = {}
    for pi in itertools.permutations(range(n)):
        for xi in itertools.product((1, -1), repeat=m):
            U = tuple(coupling_set(pi, xi, k))
            out[U] = out.get(U, 0) + 1
    return out


# ---------------------------------------------------------------- strong tuples

def is_strong(M, tup, r):
    I, J = tup[:r], tup[r:]
    if list(tup) != sorted(tup) or len(set(tup)) != 2 * r:
        return False
    for l in range(r):
        for q_ in range(r):
            if M[I[l], J[q_]] != (Fraction(1, 2) if l == q_ else 0):
                return False
    return True


@dataclass
class StrongTupleReport:
    r: int
    mode: str
    count: int
    trials: int
    budget: int
    density: float
    ci: tuple
    tuples: list = field(default_factory=list)

    def verify(self, inst: CouplingInstance):
        M = inst.pair_matrix()
        return all(is_strong(M, t, self.r) for t in self.tuples)


def _wilson(k, N, z=1.96):
    if N == 0:
        return (0.0, 1.0)
    p = k / N
    d = 1 + z * z / N
    c = (p + z * z / (2 * N)) / d
    h = z * math.sqrt(p * (1 - p) / N + z * z / (4 * N * N)) / d
    return (max(0.0, c - h), min(1.0, c + h))


def count_strong_tuples(inst: CouplingInstance, r, budget=10**6, seed=0, keep=1000) -> StrongTupleReport:
    """Strong 2r-tuples i_1 < .. < i_r < j_1 < .. < j_r of [m]; exhaustive when C(m, 2r) <= budget."""
    if r < 1:
        raise ValueError("r must be >= 1")
    M = inst.pair_matrix()
    m = inst.m
    total = math.comb(m, 2 * r)
    found = []
    if total <= budget:
        cnt = 0
        for t in itertools.combinations(range(m), 2 * r):
            if is_strong(M, t, r):
                cnt += 1
                if len(found) < keep:
                    found.append(t)
        dens = cnt / total if total else 0.0
        return StrongTupleReport(r, "exhaustive", cnt, total, budget, dens, (dens, dens), found)
    rng = np.random.default_rng(seed)
    cnt = 0
    for _ in range(budget):
        t = tuple(sorted(rng.choice(m, 2 * r, replace=False).tolist()))
        if is_strong(M, t, r):
            cnt += 1
            if len(found) < keep:
                found.append(t)
    return StrongTupleReport(r, "sampled", cnt, budget, budget, cnt / budget, _wilson(cnt, budget), found)


def planted_matching_instance(m, r, extra=0):
    """Graph and identity pi where (0..r-1, r..2r-1) is strong: edges pi(i_l) pi(j_l) and pi(i_l+m) pi(j_l+m)."""
    n = 2 * m + extra
    G = Graph(n)
    for l in range(r):
        i, j = l, r + l
        G.add_edge(i, j)
        G.add_edge(i + m, j + m)
    return G, np.arange(n), m


# ---------------------------------------------------------------- full-rank submatrices

def _is_integer(M):
    return np.asarray(M).dtype != object and np.issubdtype(np.asarray(M).dtype, np.integer)


def _nonzero_dets(M, pairs):
    M = np.asarray(M)
    if _is_integer(M) and np.abs(M).max(initial=0) <= 2**10:
        sub = np.stack([M[np.ix_(R, C)] for R, C in pairs]).astype(float)
        return np.rint(np.linalg.det(sub)) != 0  # |det| < r! 2^(10 r) stays exact in doubles for r <= 4
    Mx = to_fraction_array(M)
    return np.array([det(Mx[np.ix_(R, C)]) != 0 for R, C in pairs])


def count_full_rank_submatrices(M, r, budget=10**6, seed=0):
    """Number of (row r-set, column r-set) pairs with a nonsingular submatrix; sampled above budget."""
    M = np.asarray(M)
    a, b = M.shape
    total = math.comb(a, r) * math.comb(b, r)
    if total <= budget:
        rows = list(itertools.combinations(range(a), r))
        cols = list(itertools.combinations(range(b), r))
        cnt = 0
        for R in rows:
            pairs = [(list(R), list(C)) for C in cols]
            cnt += int(_nonzero_dets(M, pairs).sum()) if pairs else 0
        return {"mode": "exhaustive", "count": cnt, "total": total}
    rng = np.random.default_rng(seed)
    pairs = [(sorted(rng.choice(a, r, replace=False).tolist()), sorted(rng.choice(b, r, replace=False).tolist()))
             for _ in range(budget)]
    hits = int(_nonzero_dets(M, pairs).sum())
    lo, hi = _wilson(hits, budget)
    return {"mode": "sampled", "count": hits / budget * total, "total": total, "ci": (lo * total, hi * total)}


def rank_after_edits(M, edits):
    """Exact rank after setting M[i, j] = v for each (i, j, v)."""
    Mx = to_fraction_array(M)
    for i, j, v in edits:
        Mx[i, j] = Fraction(v)
    return rank(Mx)


def safe_edit_budget(count, m, r):
    """Largest e with e * m^(2r-2) < count: any e edits leave a nonsingular r x r submatrix."""
    if count <= 0:
        return -1
    return (count - 1) // m ** (2 * r - 2)


# ---------------------------------------------------------------- induced copies

def count_induced_copies(G: Graph, H: Graph, budget=10**7, seed=0, samples=10**5):
    """Ordered sequences (v_1..v_h) of distinct vertices with e(v_a, v_b) = e_H(a, b) for all a < b."""
    h = H.n
    if h > 6:
        raise ValueError("h <= 6 required")
    n = G.n
    if n ** h <= budget:
        cnt = 0

        def extend(seq):
            nonlocal cnt
            t = len(seq)
            if t == h:
                cnt += 1
                return
            for v in range(n):
                if v in seq:
                    continue
                if all(G.e(seq[a], v) == H.e(a, t) for a in range(t)):
                    extend(seq + [v])

        extend([])
        return {"mode": "exhaustive", "count": cnt, "sequences": math.perm(n, h)}
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(samples):
        s = rng.choice(n, h, replace=False)
        hits += all(G.e(s[a], s[b]) == H.e(a, b) for a in range(h) for b in range(a + 1, h))
    tot = math.perm(n, h)
    lo, hi = _wilson(hits, samples)
    return {"mode": "sampled", "count": hits / samples * tot, "sequences": tot, "ci": (lo * tot, hi * tot)}


# ---------------------------------------------------------------- edge statistic

def _pointmass_from_values(vals, mode, n, meta):
    u, c = np.unique(np.asarray(vals, dtype=np.int64), return_counts=True)
    return PointMass(mode, {int(a): int(b) for a, b in zip(u, c)}, int(c.sum()), n, meta)


def _random_subsets(rng, N, n, k, chunk):
    for s in range(0, N, chunk):
        c = min(chunk, N - s)
        idx = np.argsort(rng.random((c, n)), axis=1)[:, :k]
        X = np.zeros((c, n), dtype=np.int64)
        np.put_along_axis(X, idx, 1, axis=1)
        yield X


def _coupling_subsets(rng, N, n, k, chunk):
    m = min(k, n - k)
    for s in range(0, N, chunk):
        c = min(chunk, N - s)
        P = np.argsort(rng.random((c, n)), axis=1)
        xi = rng.random((c, m)) < 0.5
        X = np.zeros((c, n), dtype=np.int64)
        rows = np.arange(c)
        for i in range(m):
            X[rows, np.where(xi[:, i], P[:, i], P[:, i + m])] = 1
        for i in range(2 * m, m + k):
            X[rows, P[:, i]] = 1
        yield X


def edge_statistic_distribution(G: Graph, k, mode="exact", seed=0, N=10**6, chunk=50_000):
    """Law of X = e(U) for a uniform k-subset U: exact enumeration, direct MC ('mc') or coupling MC ('coupling')."""
    n = G.n
    A = G.adjacency()
    meta = {"k": k, "graph_n": n}
    if mode == "exact":
        tot = math.comb(n, k)
        if tot > EXACT_SUBSETS_MAX:
            raise ValueError(f"C({n},{k}) = {tot} exceeds {EXACT_SUBSETS_MAX}")
        vals = [np.zeros(1, dtype=np.int64)] if k == 0 else []
        it = itertools.combinations(range(n), k) if k else iter(())
        while True:
            blk = np.array(list(itertools.islice(it, chunk)), dtype=np.int64).reshape(-1, max(k, 1))
            if not len(blk):
                break
            s = np.zeros(len(blk), dtype=np.int64)
            for a in range(k):
                for b in range(a + 1, k):
                    s += A[blk[:, a], blk[:, b]]
            vals.append(s)
        d = _pointmass_from_values(np.concatenate(vals) if vals else [0], "exact", n, {**meta, "method": "subsets"})
    elif mode in ("mc", "coupling"):
        rng = np.random.default_rng(seed)
        gen = _random_subsets if mode == "mc" else _coupling_subsets
        vals = np.concatenate([_edge_counts(A, X) for X in gen(rng, N, n, k, chunk)])
        d = _pointmass_from_values(vals, "monte-carlo", n, {**meta, "method": "direct" if mode == "mc" else "coupling",
                                                            "seed": seed, "samples": N})
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return d


def distribution_summary(d: PointMass):
    v, p = max_point_probability(d)
    vals = np.array(list(d.counts.keys()), dtype=float)
    w = np.array(list(d.counts.values()), dtype=float) / d.total
    mean = float((vals * w).sum())
    var = float(((vals - mean) ** 2 * w).sum())
    out = {"argmax": v, "max_point_probability": p if d.mode == "exact" else float(p), "mean": mean, "variance": var}
    if d.mode != "exact":
        pf = float(p)
        out["se"] = math.sqrt(pf * (1 - pf) / d.total)
    return out
