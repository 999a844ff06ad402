import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")


def brute_counts(terms, lin, const, n):
    """Value histogram of sum c x_i x_j + sum a_i x_i + a_0 over {+-1}^n, straight from the term list."""
    out = Counter()
    for x in itertools.product((1, -1), repeat=n):
        v = Fraction(const)
        for i, j, c in terms:
            v += Fraction(c) * x[i] * x[j]
        for i, a in enumerate(lin):
            v += Fraction(a) * x[i]
        out[v] += 1
    return dict(out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


@pytest.fixture
def accept(request):
    """Record one PASS/FAIL line for an acceptance criterion; printed at the end of the run."""

    def record(tag, passed, detail):
        line = f"[{tag}] {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s[1:s.index("]")].split(".")[0].rstrip("abc"))):
            terminalreporter.write_line(line)
