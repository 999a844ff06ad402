"""Config-driven experiment runners. Each returns (report, csv_text, artifacts)."""
from __future__ import annotations

import hashlib
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from qlo import charfn, closure, phase, ramsey, robust, symlowrank
from qlo.exact import rank, to_fraction_array
from qlo.io import (
    dumps,
    matrix_from_json,
    matrix_to_json,
    pointmass_csv,
    poly_from_json,
    read_matrix_csv,
    rows_csv,
    scalar_to_json,
)
from qlo.poly import (
    QuadraticPoly,
    exact_distribution,
    max_point_probability,
    monte_carlo_distribution,
    small_ball_probability,
)

SCHEMA_VERSION = 1
VERSION = "0.1.0"


class SchemaError(ValueError):
    """Config violates the experiment schema."""


class ParseError(ValueError):
    """An input file could not be parsed."""


# ---------------------------------------------------------------- schema

_POLY_SRC = {"poly": (dict, None), "poly_file": (str, None), "generator": (dict, None)}
_MAT_SRC = {"matrix": ((list, dict), None), "matrix_file": (str, None), "generator": (dict, None)}
_GRAPH_SRC = {"graph": (dict, {"kind": "gnp", "n": 16, "p": 0.5})}
_SCHED = {"level_base": ((int, float), None), "column_cut_exponent": ((int, float), None),
          "graph_cut_exponent": ((int, float), None)}

SCHEMAS = {
    "dist": {**_POLY_SRC, "mode": (str, "exact"), "samples": (int, 10**6), "points": (list, []),
             "expect": (dict, {})},
    "charfn": {**_POLY_SRC, "t": (list, None), "t_range": (list, [0.0, 1.0, 101]), "mode": (str, "exact"),
               "samples": (int, 20_000)},
    "esseen": {**_POLY_SRC, "x": ((int, float, str), 0), "s": ((int, float), 1.0), "eps_freq": ((int, float), None),
               "C_impl": ((int, float), charfn.C_IMPL)},
    "decoupling": {"instances": (int, 100), "n": (int, 8), "t_count": (int, 20), "t_max": ((int, float), 1.0),
                   "mode": (str, "exact"), "samples": (int, 20_000), "density": ((int, float), 1.0)},
    "eps-indep": {**_MAT_SRC, "epsilon": ((int, float, str), 0.5), "expect": (str, None)},
    "nondegen": {**_MAT_SRC, "delta": ((int, float), 0.1), "delta_refute": ((int, float), None),
                 "refine": (int, 1)},
    "lowrank": {**_MAT_SRC, "r": (int, 2), "alpha": ((int, float), 0.3), "delta": ((int, float), None),
                "S": (list, None), "distance_factor": ((int, float), 10), **_SCHED},
    "closure-set": {"S": (list, ["0", "1/2", "1"]), "r": (int, 2), "guard": (int, closure.ENUM_GUARD)},
    "phase-sweep": {**_MAT_SRC, "points": (int, 360), "levels": (list, [0.1, 0.25, 0.5])},
    "ramsey": {**_GRAPH_SRC, "k": (int, None), "mode": (str, "exact"), "samples": (int, 10**6),
               "C": ((int, float), 2.0), "coupling_checks": (int, 5)},
    "strong-tuples": {**_GRAPH_SRC, "k": (int, None), "r": (int, 1), "budget": (int, 10**6),
                      "permutations": (int, 1)},
    "inverse-check": {"n": (int, 32), "k": (int, None), "r": (int, 2), "alpha": ((int, float), 0.2),
                      "samples": (int, 10**6),
                      **{k: ((int, float), v) for k, v in symlowrank.DESK_PROFILE.items()}},
}
COMMON = {"seed": (int, 0), "workers": (int, 1), "cap": (int, None), "schema": (int, SCHEMA_VERSION),
          "experiment": (str, None)}
ALIASES = {"charfn-sweep": "charfn", "ramsey-coupling": "ramsey", "ramsey-dist": "ramsey"}


def validate(name, cfg):
    name = ALIASES.get(name, name)
    if name not in SCHEMAS:
        raise SchemaError(f"unknown experiment {name!r}")
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    fields = {**COMMON, **SCHEMAS[name]}
    out = {}
    for key, val in cfg.items():
        if key not in fields:
            raise SchemaError(f"unknown key {key!r} for {name}")
        types = fields[key][0]
        if (val is not None and not isinstance(val, types)) or isinstance(val, bool):
            raise SchemaError(f"key {key!r} has the wrong type")
        out[key] = val
    for key, (_, default) in fields.items():
        out.setdefault(key, default)
    if out["schema"] != SCHEMA_VERSION:
        raise SchemaError(f"schema version {out['schema']} is not supported (expected {SCHEMA_VERSION})")
    if out.get("experiment") not in (None, name) and ALIASES.get(out["experiment"]) != name:
        raise SchemaError(f"config is for {out['experiment']!r}, not {name!r}")
    out["experiment"] = name
    return name, out


# ---------------------------------------------------------------- sources

def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e


def load_poly(cfg) -> QuadraticPoly:
    try:
        if cfg.get("poly") is not None:
            return poly_from_json(cfg["poly"])
        if cfg.get("poly_file"):
            return poly_from_json(_read_json(cfg["poly_file"]))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"bad polynomial: {e}") from e
    g = cfg.get("generator") or {"kind": "square_of_sum", "n": 10}
    kind, n = g.get("kind"), int(g.get("n", 8))
    if kind == "square_of_sum":
        return QuadraticPoly.square_of_sum(n)
    if kind == "random":
        return QuadraticPoly.random(n, np.random.default_rng(cfg["seed"]), density=g.get("density", 1.0))
    raise SchemaError(f"unknown polynomial generator {kind!r}")


def load_matrix(cfg, default):
    if cfg.get("matrix") is not None:
        try:
            return matrix_from_json(cfg["matrix"])
        except (TypeError, ValueError, KeyError) as e:
            raise SchemaError(f"bad matrix: {e}") from e
    if cfg.get("matrix_file"):
        p = cfg["matrix_file"]
        if p.endswith(".csv"):
            try:
                return read_matrix_csv(Path(p).read_text())
            except (OSError, ValueError) as e:
                raise ParseError(f"{p}: {e}") from e
        return matrix_from_json(_read_json(p))
    return default(cfg.get("generator") or {}, np.random.default_rng(cfg["seed"]))


def load_graph(cfg, rng):
    g = cfg["graph"]
    kind = g.get("kind")
    try:
        if kind == "gnp":
            return ramsey.gnp(int(g["n"]), float(g.get("p", 0.5)), rng)
        if kind == "edge_list":
            return ramsey.Graph.from_edge_list(Path(g["path"]).read_text())
        if kind == "csv":
            return ramsey.Graph.from_csv(Path(g["path"]).read_text())
        if kind == "complete":
            return ramsey.complete_graph(int(g["n"]))
        if kind == "cycle":
            return ramsey.cycle_graph(int(g["n"]))
        if kind == "path":
            return ramsey.path_graph(int(g["n"]))
        if kind == "two_cliques":
            return two_cliques(int(g["n"]))
    except OSError as e:
        raise ParseError(str(e)) from e
    except (KeyError, ValueError) as e:
        raise SchemaError(f"bad graph source: {e}") from e
    raise SchemaError(f"unknown graph kind {kind!r}")


def two_cliques(n):
    h = n // 2
    return ramsey.Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if (u < h) == (v < h)])


def _random_vectors(g, rng):
    q, n = int(g.get("q", 2)), int(g.get("n", 10))
    vals = [Fraction(k, 4) for k in range(-4, 5)]
    return to_fraction_array(rng.choice(np.array(vals, dtype=object), size=(q, n)))


# ---------------------------------------------------------------- report

def _check(name, passed, invariant):
    return {"name": name, "passed": bool(passed), "invariant": invariant}


def _report(name, cfg, results, checks, t0):
    cfg_echo = json.loads(dumps(cfg))
    h = hashlib.sha256((VERSION + dumps(cfg_echo)).encode()).hexdigest()[:16]
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "config": cfg_echo,
        "results": results,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "wall_clock_s": round(time.perf_counter() - t0, 3),
        "version": VERSION,
        "config_hash": h,
    }


# ---------------------------------------------------------------- runners

def run_dist(cfg):
    t0 = time.perf_counter()
    f = load_poly(cfg)
    if cfg["mode"] == "exact":
        d = exact_distribution(f, cfg["cap"], cfg["workers"])
    elif cfg["mode"] == "mc":
        d = monte_carlo_distribution(f, cfg["samples"], cfg["seed"])
    else:
        raise SchemaError("mode must be exact or mc")
    v, p = max_point_probability(d)
    pts = {str(x): d.probability(Fraction(x) if f.field == "rational" else float(x)) for x in cfg["points"]}
    if f.field == "rational" and d.mode == "exact" and "0" not in pts:
        pts["0"] = d.probability(Fraction(0))
    results = {"n": f.n, "mode": d.mode, "support_size": len(d.counts), "total": d.total,
               "argmax": v, "max_point_probability": p, "point_probabilities": pts}
    checks = [_check("weights sum to total", d.check_total(), "sum of counts equals 2^n (or N samples)")]
    exp = cfg["expect"]
    if "max_point_probability" in exp:
        checks.append(_check("max point probability matches expectation",
                             Fraction(str(exp["max_point_probability"])) == p, "configured expectation"))
    if "argmax" in exp:
        checks.append(_check("argmax matches expectation", Fraction(str(exp["argmax"])) == v, "configured expectation"))
    return _report("dist", cfg, results, checks, t0), pointmass_csv(d), {}


def _tgrid(cfg):
    if cfg["t"] is not None:
        return np.asarray(cfg["t"], dtype=float)
    a, b, k = cfg["t_range"]
    return np.linspace(float(a), float(b), int(k))


def run_charfn(cfg):
    t0 = time.perf_counter()
    f = load_poly(cfg)
    ts = _tgrid(cfg)
    if cfg["mode"] == "exact" and f.n > (cfg["cap"] or charfn.enumeration_cap()):
        raise charfn.EnumerationCapError(f"n={f.n} exceeds the enumeration cap")
    rows = charfn.sweep(f, ts, cfg["mode"], cfg["samples"], cfg["seed"])
    mags = np.array([r[1] for r in rows])
    checks = [_check("|phi(t)| <= 1", bool((mags <= 1 + 1e-12).all()), "characteristic function magnitude")]
    if 0.0 in ts.tolist():
        checks.append(_check("|phi(0)| = 1", abs(mags[ts.tolist().index(0.0)] - 1) <= 1e-12, "phi(0) = 1"))
    results = {"n": f.n, "mode": cfg["mode"], "points": len(ts), "max_magnitude": float(mags.max(initial=0)),
               "min_magnitude": float(mags.min(initial=0))}
    return _report("charfn", cfg, results, checks, t0), rows_csv(["t", "magnitude", "err"], rows), {}


def run_esseen(cfg):
    t0 = time.perf_counter()
    f = load_poly(cfg)
    if f.n > (cfg["cap"] or charfn.enumeration_cap()):
        raise charfn.EnumerationCapError(f"n={f.n} exceeds the enumeration cap")
    s = float(cfg["s"])
    eps = float(cfg["eps_freq"]) if cfg["eps_freq"] is not None else 1.0 / s
    res = charfn.esseen_bound(f, cfg["x"], s, eps, C_impl=float(cfg["C_impl"]))
    x = Fraction(str(cfg["x"])) if f.field == "rational" else float(cfg["x"])
    d = exact_distribution(f, cfg["cap"], cfg["workers"]) if f.field == "rational" else None
    prob = small_ball_probability(d, x, Fraction(str(s))) if d is not None else None
    results = {"bound": res.bound, "integral": res.integral, "quadrature_error": res.quadrature_error,
               "C_impl": res.C_impl, "s": s, "eps_freq": eps, "small_ball_probability": prob}
    checks = []
    if prob is not None:
        checks.append(_check("Pr(|f - x| <= s) <= bound", float(prob) <= res.bound,
                             "small-ball probability below the Esseen bound with C_impl"))
    row = [s, eps, res.integral, res.bound, "" if prob is None else str(prob)]
    return (_report("esseen", cfg, results, checks, t0),
            rows_csv(["s", "eps_freq", "integral", "bound", "probability"], [row]), {})


def decoupling_corpus(instances, n, seed, density=1.0):
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        f = QuadraticPoly.random(n, rng, density=density)
        size = int(rng.integers(1, n))
        I = sorted(rng.choice(n, size, replace=False).tolist())
        yield i, f, charfn.Partition(I, [j for j in range(n) if j not in I], n), rng


def run_decoupling(cfg):
    t0 = time.perf_counter()
    rows, holds = [], 0
    total = 0
    for i, f, P, rng in decoupling_corpus(cfg["instances"], cfg["n"], cfg["seed"], cfg["density"]):
        ts = np.sort(rng.uniform(0, float(cfg["t_max"]), cfg["t_count"]))
        out = charfn.decoupling_check(f, P, ts, cfg["mode"], cfg["samples"], cfg["seed"], cfg["cap"])
        for t, l, r, h in zip(out["t"], out["lhs_sq"], out["rhs"], out["holds"]):
            rows.append([i, float(t), float(l), float(r), int(bool(h))])
            holds += bool(h)
            total += 1
    results = {"instances": cfg["instances"], "cases": total, "holding": holds}
    checks = [_check("lhs^2 <= rhs + 1e-12 in every case", holds == total,
                     "|phi(t)|^2 <= E prod |cos(2 pi t A_l)| (decoupling)")]
    return (_report("decoupling", cfg, results, checks, t0),
            rows_csv(["instance", "t", "lhs_sq", "rhs", "holds"], rows), {})


def certificate_to_json(V, epsilon, cert):
    return json.loads(dumps({"kind": "independence-certificate", "vectors": matrix_to_json(V),
                             "epsilon": scalar_to_json(epsilon), "certificate": cert}))


def _epsilon(x):
    return Fraction(x) if isinstance(x, str) else float(x)


def run_eps_indep(cfg):
    t0 = time.perf_counter()
    V = load_matrix(cfg, _random_vectors)
    eps = _epsilon(cfg["epsilon"])
    if V.dtype != object and isinstance(eps, Fraction):
        eps = float(eps)
    ver = robust.check_eps_independence(V, eps, cfg["seed"])
    art = {}
    checks = []
    if ver.refuted:
        art["witness"] = robust.witness_to_json(ver.witness)
        ok, fails = robust.verify_dependence_witness(robust.witness_from_json(json.loads(dumps(art["witness"]))))
        checks.append(_check("witness re-verifies", ok, "cost <= eps n, entries <= q+1, exact kernel"))
    elif ver.certified:
        art["witness"] = certificate_to_json(V, eps, ver.certificate)
        ok, fails = verify_artifact(art["witness"])
        checks.append(_check("certificate re-verifies", ok, "recomputed lower bound exceeds eps n"))
    if cfg["expect"]:
        checks.append(_check("verdict matches expectation", ver.kind == cfg["expect"], "configured expectation"))
    results = {"kind": ver.kind, "epsilon": eps, "q": ver.q, "n": ver.n, "lower": ver.lower, "upper": ver.upper,
               "method": (ver.certificate or {}).get("method")}
    row = [ver.kind, str(eps), ver.n, ver.q, str(ver.lower), str(ver.upper)]
    return (_report("eps-indep", cfg, results, checks, t0),
            rows_csv(["kind", "epsilon", "n", "q", "lower", "upper"], [row]), art)


def _random_real_matrix(g, rng):
    r, n = int(g.get("r", 2)), int(g.get("n", 40))
    return rng.uniform(-1, 1, size=(r, n))


def run_nondegen(cfg):
    t0 = time.perf_counter()
    M = np.asarray(load_matrix(cfg, _random_real_matrix), dtype=float)
    ver = robust.check_non_degenerate(M, cfg["delta"], cfg["delta_refute"], refine=cfg["refine"])
    checks, art = [], {}
    if ver.kind == "refuted":
        art["witness"] = {"kind": "nondegen-refutation", "matrix": M.tolist(), "e": ver.witness.tolist(),
                          "level": ver.level}
        ok, _ = verify_artifact(art["witness"])
        checks.append(_check("refuting direction re-verifies", ok, "unit e sees < level n columns at level"))
    results = {"kind": ver.kind, "delta": ver.delta, "delta_cert": ver.delta_cert, "min_count": ver.min_count,
               "net_points": ver.net.get("points"), "net_spacing": ver.net.get("spacing")}
    row = [ver.kind, ver.delta, "" if ver.delta_cert is None else ver.delta_cert, ver.min_count, ver.net.get("points")]
    return (_report("nondegen", cfg, results, checks, t0),
            rows_csv(["kind", "delta", "delta_cert", "min_count", "net_points"], [row]), art)


def _no_generator(g, rng):
    raise SchemaError(f"unknown matrix generator {g!r}")


def _schedule(cfg):
    return {k: cfg[k] for k in _SCHED if cfg.get(k) is not None}


def run_lowrank(cfg):
    t0 = time.perf_counter()
    planted = None
    g = cfg.get("generator") or {}
    if cfg.get("matrix") is None and not cfg.get("matrix_file") and g.get("kind", "planted") == "planted":
        rng = np.random.default_rng(cfg["seed"])
        A, P, mass = symlowrank.planted_instance(int(g.get("n", 30)), int(g.get("rank", 1)),
                                                 float(g.get("rate", 0.03)), rng, g.get("mode", "zero"))
        planted = mass
    else:
        A = load_matrix(cfg, _no_generator)
    S = None if cfg["S"] is None else [Fraction(str(s)) for s in cfg["S"]]
    try:
        res = symlowrank.symmetric_low_rank_approx(A, cfg["r"], float(cfg["alpha"]), cfg["delta"], S=S,
                                                   **_schedule(cfg))
    except symlowrank.HypothesisFailure as e:
        results = {"hypothesis_failure": str(e), "stage": e.stage, "tuples": [list(t) for t in e.tuples]}
        checks = [_check("no hypothesis failure", False, "no delta n disjoint alpha-independent r-tuples")]
        return _report("lowrank", cfg, results, checks, t0), rows_csv(["stage", "value"], []), {}
    tr = res.trace
    ok, fails = symlowrank.verify_trace(tr)
    checks = [
        _check("H symmetric", symlowrank._is_symmetric(res.H), "H = H^T exactly"),
        _check("rank(H) < r", rank(res.H) < cfg["r"], "rank(H) <= q < r"),
        _check("trace re-verifies", ok, "every pipeline stage recomputes from raw data"),
    ]
    if planted is not None:
        checks.append(_check(f"||A - H||_1 <= {cfg['distance_factor']} x corruption mass",
                             res.distance <= cfg["distance_factor"] * planted, "planted-corpus distance bound"))
    if S is not None and res.set_mode.get("verified") is not None:
        checks.append(_check("entries in S'", res.set_mode["verified"], "B* in sigma(S), H in S'"))
    results = {"q": res.q, "rank_H": rank(res.H), "distance": res.distance, "corruption_mass": planted,
               "J": tr.J, "J2": tr.J2, "I": tr.I, "premise_failures": tr.premise_failures, "verify_failures": fails}
    rows = [[k, str(v)] for k, v in tr.distances.items()] + [["q", res.q], ["rank_H", rank(res.H)]]
    return _report("lowrank", cfg, results, checks, t0), rows_csv(["stage", "value"], rows), {"trace": tr.to_json()}


def run_closure(cfg):
    t0 = time.perf_counter()
    S = [Fraction(str(s)) for s in cfg["S"]]
    cl = closure.coefficient_set_closure(S, cfg["r"], cfg["guard"])
    fmt = lambda X: [str(x) for x in sorted(X)]
    results = {"sizes": cl.sizes(), "tau": {str(q): fmt(v) for q, v in cl.tau.items()}, "sigma": fmt(cl.sigma),
               "S_prime": None if cl.S_prime is None else fmt(cl.S_prime)}
    rows = [[lvl, len(s)] for lvl, s in enumerate(cl.levels)]
    checks = [_check("S subset of every level", all(set(cl.S) <= set(s) for s in cl.levels), "S in sigma_r(S)")]
    return _report("closure-set", cfg, results, checks, t0), rows_csv(["level", "size"], rows), {}


def _random_phase_matrix(g, rng):
    return phase.random_complex_matrix(int(g.get("r", 2)), rng)


def run_phase(cfg):
    t0 = time.perf_counter()
    A = np.asarray(load_matrix(cfg, _random_phase_matrix), dtype=complex)
    sw = phase.phase_sweep(A, cfg["points"], tuple(cfg["levels"]))
    co = phase.det_polynomial(A)
    gap = float(np.abs(phase.poly_phase_det(co, sw.thetas) - sw.dets).max(initial=0))
    ex = phase.expected_abs_det(A)
    r = A.shape[0]
    checks = [
        _check("polynomial identity", gap <= 1e-9, "e^{-ir theta} p(e^{i theta}) / 2^r = det Re(e^{i theta} A)"),
        _check("E|det| >= 2^-r |det A|", not ex["flag"], "quadrature mean + error >= 2^-r |det A|"),
    ]
    if np.abs(A).max(initial=0) <= 1:
        checks.append(_check("|det| <= r!", bool((np.abs(sw.dets) <= math.factorial(r) + 1e-12).all()),
                             "|det Re(e^{i theta} A)| <= r!"))
    c, p = phase.markov_success_bound(A) if np.abs(A).max(initial=0) <= 1 else (None, None)
    results = {"r": r, "mean_abs_grid": sw.mean_abs, "expected_abs_det": ex, "fraction_ge": sw.fraction_ge,
               "identity_gap": gap, "markov": {"c": c, "p_lower": p}}
    return _report("phase-sweep", cfg, results, checks, t0), rows_csv(["theta", "det", "abs_det"], sw.rows()), {}


def run_ramsey(cfg):
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg["seed"])
    G = load_graph(cfg, rng)
    k = cfg["k"] if cfg["k"] is not None else G.n // 2
    hom = ramsey.homogeneity(G)
    checks = []
    for c in range(cfg["coupling_checks"]):
        pi = np.random.default_rng([cfg["seed"], c]).permutation(G.n)
        inst = ramsey.coefficient_poly(G, pi, k, seed=cfg["seed"])
        checks.append(_check(f"coupling identity ({inst.verified}) #{c}", True, "e(U_{pi,xi}) = f_pi(xi)"))
        checks.append(_check(f"pair coefficients in quarters #{c}", set(inst.pair_matrix().flat) <= ramsey.QUARTERS,
                             "a_ij in {-1/2,-1/4,0,1/4,1/2}"))
    d = ramsey.edge_statistic_distribution(G, k, cfg["mode"], cfg["seed"], cfg["samples"])
    summ = ramsey.distribution_summary(d)
    results = {"n": G.n, "k": k, "edges": G.m, "homogeneity": hom["size"], "homogeneity_exact": hom["exact"],
               "c_ramsey": hom["size"] < cfg["C"] * math.log2(G.n) if G.n > 1 else False, "distribution": summ}
    return _report("ramsey", cfg, results, checks, t0), pointmass_csv(d), {}


def run_strong_tuples(cfg):
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg["seed"])
    G = load_graph(cfg, rng)
    k = cfg["k"] if cfg["k"] is not None else G.n // 2
    rows, checks, reps = [], [], []
    for c in range(cfg["permutations"]):
        pi = np.random.default_rng([cfg["seed"], c]).permutation(G.n)
        inst = ramsey.coefficient_poly(G, pi, k, verify=False)
        rep = ramsey.count_strong_tuples(inst, cfg["r"], cfg["budget"], cfg["seed"])
        checks.append(_check(f"reported tuples re-verify #{c}", rep.verify(inst), "a_{i_l j_l} = 1/2, cross terms 0"))
        rows.append([c, rep.mode, rep.count, rep.trials, rep.density, rep.ci[0], rep.ci[1]])
        reps.append({"mode": rep.mode, "count": rep.count, "trials": rep.trials, "density": rep.density})
    results = {"n": G.n, "k": k, "r": cfg["r"], "reports": reps}
    return (_report("strong-tuples", cfg, results, checks, t0),
            rows_csv(["permutation", "mode", "count", "trials", "density", "ci_lo", "ci_hi"], rows), {})


def run_inverse_check(cfg):
    """Two-cliques graph (f_pi close to rank 1) against a G(n, 1/2) baseline."""
    t0 = time.perf_counter()
    n = cfg["n"]
    k = cfg["k"] if cfg["k"] is not None else n // 2
    G = two_cliques(n)
    base = ramsey.gnp(n, 0.5, np.random.default_rng(cfg["seed"]))
    pi = np.random.default_rng([cfg["seed"], 1]).permutation(n)
    inst = ramsey.coefficient_poly(G, pi, k, seed=cfg["seed"])
    M = inst.pair_matrix()
    scale = max((abs(x) for x in M.flat), default=Fraction(0)) or Fraction(1)
    A = M / scale
    m = inst.m
    h = n // 2
    s = np.array([1 if v < h else -1 for v in range(n)])
    dd = np.array([Fraction(int(s[pi[i]] - s[pi[i + m]])) for i in range(m)], dtype=object)
    planted = np.outer(dd, dd) / 8 / scale  # a_ij = (s_i - s_{i+m})(s_j - s_{j+m}) / 8 off the diagonal
    defect = sum(abs(a - b) for a, b in zip(A.flat, planted.flat))
    res = symlowrank.symmetric_low_rank_approx(A, cfg["r"], float(cfg["alpha"]), **_schedule(cfg))
    ok, _ = symlowrank.verify_trace(res.trace)
    mode = "exact" if math.comb(n, k) <= ramsey.EXACT_SUBSETS_MAX else "mc"
    dp = ramsey.distribution_summary(ramsey.edge_statistic_distribution(G, k, mode, cfg["seed"], cfg["samples"]))
    db = ramsey.distribution_summary(ramsey.edge_statistic_distribution(base, k, mode, cfg["seed"], cfg["samples"]))
    checks = [
        _check("lowrank trace re-verifies", ok, "pipeline stages recompute"),
        _check("lowrank H nontrivial and within 10x the planted defect",
               res.q >= 1 and rank(res.H) < cfg["r"] and res.distance <= 10 * max(defect, Fraction(1, 10**9)),
               "||A - H||_1 <= 10 ||A - planted||_1"),
        _check("planted max point probability exceeds the baseline",
               float(dp["max_point_probability"]) > float(db["max_point_probability"]),
               "structured f_pi concentrates more than a random graph"),
    ]
    results = {"n": n, "k": k, "m": m, "q": res.q, "distance": res.distance, "planted_defect": defect,
               "planted": dp, "baseline": db, "dist_mode": mode}
    rows = [["two_cliques", float(dp["max_point_probability"]), dp["variance"], res.q, str(res.distance)],
            ["gnp_baseline", float(db["max_point_probability"]), db["variance"], "", ""]]
    return (_report("inverse-check", cfg, results, checks, t0),
            rows_csv(["graph", "max_point_probability", "variance", "q", "distance"], rows), {"trace": res.trace.to_json()})


RUNNERS = {
    "dist": run_dist,
    "charfn": run_charfn,
    "esseen": run_esseen,
    "decoupling": run_decoupling,
    "eps-indep": run_eps_indep,
    "nondegen": run_nondegen,
    "lowrank": run_lowrank,
    "closure-set": run_closure,
    "phase-sweep": run_phase,
    "ramsey": run_ramsey,
    "strong-tuples": run_strong_tuples,
    "inverse-check": run_inverse_check,
}


def run(name, cfg):
    name, cfg = validate(name, cfg)
    return RUNNERS[name](cfg)


# ---------------------------------------------------------------- verification of emitted artifacts

def _cert_from_json(cert, exact):
    c = dict(cert)
    if "duals" in c:
        c["duals"] = [matrix_from_json(u) if exact else np.asarray(u, dtype=float) for u in c["duals"]]
    return c


def verify_artifact(obj):
    """Recompute a dependence witness, independence certificate, non-degeneracy refutation or pipeline trace."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError("artifact must be a JSON object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "dependence":
            return robust.verify_dependence_witness(robust.witness_from_json(obj))
        if kind == "independence-certificate":
            V = matrix_from_json(obj["vectors"])
            exact = V.dtype == object
            eps = Fraction(obj["epsilon"]) if isinstance(obj["epsilon"], str) else obj["epsilon"]
            if not exact:
                eps = float(eps)
            return robust.verify_certificate(V, eps, _cert_from_json(obj["certificate"], exact))
        if kind == "nondegen-refutation":
            ok, c = robust.verify_non_degeneracy_refutation(obj["matrix"], obj["e"], obj["level"])
            return ok, ([] if ok else [f"direction sees {c} columns"])
        if kind == "pipeline-trace":
            return symlowrank.verify_trace(symlowrank.PipelineTrace.from_json(obj))
    except (KeyError, TypeError, IndexError) as e:
        raise ParseError(f"malformed {kind} artifact: {e!r}") from e
    raise ParseError(f"unknown artifact kind {kind!r}")
