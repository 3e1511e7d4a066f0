import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padelab.pade_engine import exact_pade_oracle, solve_pade
from padelab.polyroots import (
    FLAG_CLUSTER,
    Polynomial,
    backward_error,
    refine_root,
    roots,
    write_rootset,
)
from padelab.series_corpus import Family, SeriesSpec, taylor_coefficients

PHI = (1 + 5**0.5) / 2


def test_quadratic():
    rs = roots([-1, 0, 1])
    np.testing.assert_allclose(np.sort(rs.roots.real), [-1, 1], atol=1e-15)
    assert np.all(rs.certified)


def test_fibonacci_denominator_roots():
    rs = roots([1, -1, -1])
    np.testing.assert_allclose(np.sort(rs.roots.real), [-PHI, 1 / PHI], atol=1e-14)


def test_fibonacci_approximant_poles():
    # φ+ = 1.618... and φ- = -0.618... from the generating function's Padé table
    r = solve_pade(taylor_coefficients(SeriesSpec(Family.FIB_GENERATING), 6), 3, 3)
    rs = roots(r.denominator)
    got = np.sort(rs.roots.real)
    np.testing.assert_allclose(got, [-PHI, 1 / PHI], atol=1e-10)
    assert rs.infinite_count == 1


def test_jacobi_quartic_backward_error():
    c = np.array([1, 1, 1, 0, -1], dtype=float)
    rs = roots(c)
    assert len(rs) == 4
    # independent check: evaluate the quartic at the returned roots directly
    for z in rs.roots:
        val = abs(1 + z + z**2 - z**4)
        scale = 1 + abs(z) + abs(z) ** 2 + abs(z) ** 4
        assert val / scale <= 1e-12


def test_refine_quadratic():
    r = refine_root(Polynomial([-1, 0, 1]), 0.9 + 0.1j)
    assert abs(r.value - 1) < 1e-14


def test_refine_golden_ratio_literal():
    # 1 - z - z^2 has roots 0.618... and -1.618...; Newton from 1.6 cannot reach 1.618
    r = refine_root(Polynomial([1, -1, -1]), 1.6)
    assert abs(r.value - PHI) < 1e-14


def test_refine_golden_ratio_reciprocal_polynomial():
    r = refine_root(Polynomial([-1, -1, 1]), 1.6)
    assert abs(r.value - PHI) < 1e-14
    r = refine_root(Polynomial([1, -1, -1]), 1.6)
    assert abs(r.value - 1 / PHI) < 1e-14


def test_refine_never_worse_on_jacobi_64():
    q = exact_pade_oracle("JACOBI", N=7).denominator
    p = Polynomial(q)
    rs = roots(p)
    for z in rs.roots[:16]:
        z0 = z + 1e-6
        before = backward_error(q, np.array([z0]))[0]
        after = refine_root(p, z0).backward_error
        assert after <= before


def test_refine_flags_zero_derivative():
    r = refine_root(Polynomial([1, 0, 1]), 0.0)
    assert r.flagged
    assert r.value == 0


def test_zero_polynomial_rejected():
    with pytest.raises(ValueError):
        roots([0, 0, 0])


def test_deflation_counts():
    rs = roots([0, 0, 2, 3, 1e-20])
    assert rs.zero_count == 2
    assert rs.infinite_count == 1
    assert len(rs) == 1
    assert rs.all_roots.size == 3


def test_cluster_flag():
    c = np.poly([1.0, 1.0 + 1e-9, 3.0])[::-1]
    rs = roots(c)
    assert sum(FLAG_CLUSTER in f for f in rs.multiplicity_flags) >= 2


def test_spread_moduli_converge():
    z = np.array([1e-3, 0.1, 10, 1e3, -5, 2j])
    rs = roots(np.poly(z)[::-1])
    assert np.all(rs.certified)
    np.testing.assert_allclose(np.sort_complex(rs.roots), np.sort_complex(z), rtol=1e-9)


def test_high_degree_unit_circle():
    n = 200
    c = np.zeros(n + 1)
    c[0], c[-1] = -1, 1
    rs = roots(c)
    assert len(rs) == n
    np.testing.assert_allclose(np.abs(rs.roots), 1, atol=1e-12)
    assert rs.method == "aberth"


def test_write_rootset(tmp_path):
    rs = roots([0, -1, 0, 1])
    p = write_rootset(rs, tmp_path / "r.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "re,im,backward_error,flags"
    assert len(lines) == 4


# --- properties --------------------------------------------------------------


def _expand(lead, z):
    # extended precision so the check measures the roots, not this product
    p = np.array([lead], dtype=np.clongdouble)
    for r in np.asarray(z, dtype=np.clongdouble):
        p = np.convolve(p, np.array([-r, 1], dtype=np.clongdouble))
    return p


def _polish_extended(c, z, steps=6):
    """Newton in long double, then rounded: near-correctly-rounded roots."""
    c = np.asarray(c, dtype=np.clongdouble)
    z = np.asarray(z, dtype=np.clongdouble)
    for _ in range(steps):
        p = np.zeros_like(z)
        dp = np.zeros_like(z)
        for x in c[::-1]:
            dp = dp * z + p
            p = p * z + x
        z = z - p / dp
    return z.astype(complex)


def _random_poly(seed, d):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, d + 1) + 1j * rng.uniform(-1, 1, d + 1)
    c *= 10.0 ** rng.uniform(-3, 3, d + 1)  # dynamic range <= 1e6
    c[-1] = rng.uniform(0.5, 1) * 10 ** rng.uniform(-3, 3)
    return c


@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
@settings(max_examples=60, deadline=None)
def test_reconstruction(seed, d):
    c = _random_poly(seed, d)
    rs = roots(c)
    rec = _expand(c[-1], rs.all_roots)
    assert float(np.abs(rec - c).max() / np.abs(c).max()) <= 1e-8


@pytest.mark.parametrize("seed", range(40))
def test_reconstruction_at_rounding_floor(seed):
    # near-correctly-rounded double roots set the attainable floor
    d = 1 + seed % 64 if seed % 2 else 40 + seed % 25
    c = _random_poly(seed, d)
    rs = roots(c)
    err = float(np.abs(_expand(c[-1], rs.all_roots) - c).max() / np.abs(c).max())
    floor = float(np.abs(_expand(c[-1], _polish_extended(c, rs.all_roots)) - c).max() / np.abs(c).max())
    assert err <= 100 * max(floor, 1e-14)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=40))
@settings(max_examples=60, deadline=None)
def test_conjugate_symmetry(vals):
    c = np.array(vals)
    c[-1] = 1.0
    rs = roots(c)
    z = rs.roots
    for r in z:
        assert np.abs(z - np.conj(r)).min() <= 1e-10 * max(1, abs(r))


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=30), st.integers(0, 4), st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_degree_accounting(vals, lo, hi):
    c = np.concatenate([np.zeros(lo), vals, np.zeros(hi)])
    p = Polynomial(c)
    if p.effective_degree < 0:
        with pytest.raises(ValueError):
            roots(p)
        return
    rs = roots(p)
    assert len(rs) + rs.zero_count + rs.infinite_count == p.degree
