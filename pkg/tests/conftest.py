"""Shared independent oracles: exact rational arithmetic, no package code."""

from fractions import Fraction

import numpy as np
import pytest


def fraction_pade(c, L, M):
    """[L|M] of the series ``c`` by exact Gaussian elimination over Q.

    Returns (a, b) with b[0] = 1, or None when the Toeplitz system is singular.
    """
    c = [Fraction(x) for x in c]

    def cc(k):
        return c[k] if 0 <= k < len(c) else Fraction(0)

    A = [[cc(L + 1 + i - j) for j in range(1, M + 1)] + [-cc(L + 1 + i)] for i in range(M)]
    for col in range(M):
        piv = next((r for r in range(col, M) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        for r in range(M):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    b = [Fraction(1)] + [A[i][M] / A[i][i] for i in range(M)]
    a = [sum(b[j] * cc(k - j) for j in range(min(k, M) + 1)) for k in range(L + 1)]
    return a, b


def series_quotient(p, q, n):
    """First ``n`` Taylor coefficients of p(z)/q(z), q[0] != 0, exactly."""
    p = [Fraction(x) for x in p]
    q = [Fraction(x) for x in q]
    out = []
    for k in range(n):
        s = (p[k] if k < len(p) else 0) - sum(q[j] * out[k - j] for j in range(1, min(k, len(q) - 1) + 1))
        out.append(s / q[0])
    return out


def rel_err(x, y):
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return float(np.abs(x - y).max() / max(np.abs(y).max(), 1e-300))


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path / "out"


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
