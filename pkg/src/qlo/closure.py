"""Finite coefficient-set closures T_q, tau_q, sigma_r and S' = sigma_r^3(S) over the rationals."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from qlo.exact import det, solve

ENUM_GUARD = 10**7


class ClosureTooLarge(ValueError):
    """|S|^(q^2+q) exceeds the enumeration guard."""


def _as_set(S):
    out = {Fraction(s) for s in S}
    out.add(Fraction(0))
    return frozenset(out)


def T_q(S, q, guard=ENUM_GUARD):
    """All v with M v = z for invertible M in S^{q x q}, z in S^q."""
    S = sorted(_as_set(S))
    if q == 0:
        return {()}
    if len(S) ** (q * q + q) > guard:
        raise ClosureTooLarge(f"|S|^{q * q + q} = {len(S) ** (q * q + q)} exceeds {guard}")
    if q == 1:
        return {(z / m,) for m in S if m != 0 for z in S}
    out = set()
    for entries in itertools.product(S, repeat=q * q):
        M = np.array(entries, dtype=object).reshape(q, q)
        if det(M) == 0:
            continue
        for z in itertools.product(S, repeat=q):
            out.add(tuple(solve(M, np.array(z, dtype=object))))
    return out


def tau_q(S, q, guard=ENUM_GUARD, T=None):
    """{v . w : v in T_q(S), w in S^q}."""
    S = sorted(_as_set(S))
    if q == 0:
        return {Fraction(0)}
    T = T_q(S, q, guard) if T is None else T
    if q == 1:
        ts = {t[0] for t in T}
        return {t * w for t in ts for w in S}
    out = set()
    for v in T:
        for w in itertools.product(S, repeat=q):
            out.add(sum((a * b for a, b in zip(v, w)), Fraction(0)))
    return out


def sigma_r(S, r, guard=ENUM_GUARD):
    """S union tau_1(S) union ... union tau_{r-1}(S)."""
    out = set(_as_set(S))
    for q in range(1, r):
        out |= tau_q(S, q, guard)
    return frozenset(out)


@dataclass
class CoefficientSetClosure:
    S: frozenset
    r: int
    T: dict = field(default_factory=dict)
    tau: dict = field(default_factory=dict)
    sigma: frozenset = frozenset()
    S_prime: frozenset | None = None
    levels: list = field(default_factory=list)  # [S, sigma(S), sigma^2(S), sigma^3(S)]

    def sizes(self):
        return {
            "S": len(self.S),
            "T": {q: len(v) for q, v in self.T.items()},
            "tau": {q: len(v) for q, v in self.tau.items()},
            "sigma": len(self.sigma),
            "S_prime": None if self.S_prime is None else len(self.S_prime),
        }

    def contains(self, x, level=3) -> bool:
        if level >= len(self.levels):
            raise ClosureTooLarge(f"closure level {level} was not enumerable under the guard")
        return Fraction(x) in self.levels[level]


def coefficient_set_closure(S, r, guard=ENUM_GUARD, strict=False) -> CoefficientSetClosure:
    """Enumerate T_q, tau_q (q < r), sigma_r and S'. S' is None if an outer level hits the guard
    (unless strict, which re-raises)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    S0 = _as_set(S)
    T = {q: T_q(S0, q, guard) for q in range(1, r)}
    tau = {q: tau_q(S0, q, guard, T[q]) for q in range(1, r)}
    sig = frozenset(set(S0).union(*tau.values()) if tau else S0)
    levels = [S0, sig]
    try:
        cur = sig
        for _ in range(2):
            cur = sigma_r(cur, r, guard)
            levels.append(cur)
    except ClosureTooLarge:
        if strict:
            raise
    sp = levels[3] if len(levels) == 4 else None
    return CoefficientSetClosure(S0, r, T, tau, sig, sp, levels)
