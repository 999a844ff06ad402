"""JSON/CSV encodings shared by the library and the CLI.

Scalars: Fraction -> "p/q" string, float -> float, complex -> [re, im].
Polynomial JSON uses 1-based indices in ``deg2``.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import numpy as np

from qlo.poly import PointMass, QuadraticPoly, coerce_scalar


def scalar_to_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return float(x)


def scalar_from_json(x, exact=True):
    if isinstance(x, list):
        return complex(x[0], x[1])
    if isinstance(x, str):
        return Fraction(x) if exact else float(Fraction(x))
    if isinstance(x, int) and exact:
        return Fraction(x)
    return x


def matrix_to_json(a):
    """Nested lists; complex arrays become {"re": ..., "im": ...}."""
    a = np.asarray(a)
    if np.iscomplexobj(a) or (a.dtype == object and any(isinstance(x, complex) for x in a.flat)):
        a = a.astype(complex)
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return _nested(a)


def _nested(a):
    if a.ndim == 1:
        return [scalar_to_json(x) for x in a.tolist()]
    return [_nested(row) for row in a]


def matrix_from_json(obj):
    """Inverse of matrix_to_json; all-string/int data comes back as exact Fractions."""
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    raw = np.asarray(obj, dtype=object)
    if all(isinstance(x, (str, int)) for x in raw.flat):
        out = np.empty(raw.shape, dtype=object)
        for idx, x in np.ndenumerate(raw):
            out[idx] = Fraction(x)
        return out
    return np.vectorize(lambda x: float(Fraction(x)) if isinstance(x, str) else float(x), otypes=[float])(raw)


def poly_to_json(f: QuadraticPoly) -> dict:
    return {
        "n": f.n,
        "field": f.field,
        "deg2": [[i + 1, j + 1, scalar_to_json(c)] for i, j, c in f.terms()],
        "lin": [scalar_to_json(x) for x in f.lin],
        "const": scalar_to_json(f.const),
    }


def poly_from_json(obj: dict) -> QuadraticPoly:
    n = int(obj["n"])
    fld = obj.get("field")
    vals = [c for _, _, c in obj.get("deg2", [])] + list(obj.get("lin", [])) + [obj.get("const", 0)]
    if fld is None:
        if any(isinstance(v, list) for v in vals):
            fld = "complex"
        elif any(isinstance(v, float) for v in vals):
            fld = "real"
        else:
            fld = "rational"

    def conv(v):
        return complex(v[0], v[1]) if isinstance(v, list) else coerce_scalar(v, fld)

    terms = []
    for i, j, c in obj.get("deg2", []):
        if not (1 <= int(i) <= n and 1 <= int(j) <= n):
            raise ValueError(f"deg2 index ({i}, {j}) out of range 1..{n}")
        terms.append((int(i) - 1, int(j) - 1, conv(c)))
    lin = [conv(v) for v in obj.get("lin", [0] * n)]
    if len(lin) != n:
        raise ValueError("lin must have n entries")
    return QuadraticPoly.from_terms(n, terms, lin, conv(obj.get("const", 0)), fld)


def pointmass_csv(d: PointMass) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "count", "total"])
    for v, c in d.items():
        w.writerow([_csv_scalar(v), c, d.total])
    return buf.getvalue()


def _csv_scalar(v):
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_csv(header, rows) -> str:
    """CSV text with floats in repr form so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_scalar(x) if isinstance(x, (float, np.floating, complex)) else x for x in r])
    return buf.getvalue()


def matrix_csv(a) -> str:
    return "".join(",".join(_csv_scalar(x) for x in row) + "\n" for row in np.asarray(a).tolist())


def read_matrix_csv(text: str):
    rows = [ln.split(",") for ln in text.strip().splitlines() if ln.strip()]
    if all(("." not in x and "e" not in x.lower() and "j" not in x) for r in rows for x in r):
        return np.array([[Fraction(x.strip()) for x in r] for r in rows], dtype=object)
    return np.array([[float(x) for x in r] for r in rows])


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, Fraction):
            return str(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, (complex, np.complexfloating)):
            return [float(o.real), float(o.imag)]
        if isinstance(o, np.ndarray):
            return matrix_to_json(o) if o.dtype == object or np.iscomplexobj(o) else o.tolist()
        if isinstance(o, (set, frozenset)):
            return sorted(o, key=lambda z: (float(z) if not isinstance(z, complex) else z.real))
        if isinstance(o, tuple):
            return list(o)
        return super().default(o)


def dumps(obj, **kw) -> str:
    return json.dumps(obj, cls=_Encoder, sort_keys=True, **kw)
