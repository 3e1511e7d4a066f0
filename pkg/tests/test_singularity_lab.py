import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from padelab.pade_engine import DegeneratePolicy, RationalApproximant, SolveError, SolveOptions, evaluate, exact_pade_oracle, solve_pade
from padelab.polyroots import Polynomial
from padelab.series_corpus import Family, NoiseSpec, SeriesSpec, carleman_series, taylor_coefficients
from padelab.singularity_lab import (
    EmptyModelError,
    Mode,
    PoleClass,
    StatisticsError,
    Verdict,
    beta_stability_test,
    boundary_statistics,
    classify_doublets,
    denoise_signal,
    fit_beta,
    poles_zeros,
    residues,
    synthesize_signal,
    write_report_csv,
    write_spectrum_csv,
)

PHI = (1 + 5**0.5) / 2
DENOISE_ORDER = 10  # [10|10] throughout, fixed before looking at results
RAW = SeriesSpec(Family.RECURSION, {"source": "test"})


def series(family, N, params=None, noise=None):
    return taylor_coefficients(SeriesSpec(family, params or {}, noise), N)


def report_for(approx, thresholds=None):
    pzs = poles_zeros(approx)
    return classify_doublets(pzs, residues(approx, pzs), thresholds)


def sym_noise(n, eps, seed):
    return eps * (2 * np.random.Generator(np.random.PCG64(seed)).random(n) - 1)


# --- poles and zeros ---------------------------------------------------------


def test_exp_oracle_half_planes():
    pzs = poles_zeros(exact_pade_oracle("EXP", M=1))
    assert abs(pzs.pole_locations[0] + 2) < 1e-14
    assert abs(pzs.zero_locations[0] - 2) < 1e-14
    for M in (4, 8):
        pzs = poles_zeros(exact_pade_oracle("EXP", M=M))
        assert np.all(pzs.pole_locations.real < 0)
        assert np.all(pzs.zero_locations.real > 0)


def test_fibonacci_poles():
    # the roots of 1 - z - z^2 are 1/φ and -φ
    a = solve_pade(series(Family.FIB_GENERATING, 10), 5, 5)
    got = np.sort(poles_zeros(a).pole_locations.real)
    np.testing.assert_allclose(got, [-PHI, 1 / PHI], atol=1e-10)


def test_tan_eight_directions():
    a = solve_pade(series(Family.F5_TAN4, 100), 50, 50)
    p = poles_zeros(a).pole_locations
    inner = p[np.argsort(np.abs(p))[:8]]
    np.testing.assert_allclose(np.abs(inner), (math.pi / 2) ** 0.25, rtol=1e-8)
    arg = np.mod(np.angle(inner), math.pi / 4)
    assert np.all(np.minimum(arg, math.pi / 4 - arg) < 1e-8)
    z = poles_zeros(a).zero_locations
    z = z[np.abs(z) > 0.5]
    arg = np.mod(np.angle(z), math.pi / 4)
    assert np.all(np.minimum(arg, math.pi / 4 - arg) < 1e-6)


def test_scaled_approximant_poles_in_original_variable():
    a = solve_pade(series(Family.POLE2, 20), 10, 10, SolveOptions(scaling="AUTO"))
    assert abs(poles_zeros(a).pole_locations[0] - 2) < 1e-12


# --- residues ----------------------------------------------------------------


def test_geometric_residue():
    a = RationalApproximant([1], [1, -1], 0, 1)
    sp = residues(a)
    assert abs(sp.poles[0] - 1) < 1e-15 and abs(sp.residues[0] + 1) < 1e-15


def test_pole2_residue():
    a = solve_pade(series(Family.POLE2, 4), 1, 1)
    sp = residues(a)
    assert abs(sp.poles[0] - 2) < 1e-12 and abs(sp.residues[0] + 2) < 1e-12


def test_carleman_partial_fractions():
    # sum_k e^{-k} (1/(1 - e^{2 pi i X_k} z) + c.c.) has |A| = e^{-k}, each twice
    cv = carleman_series(100, 1.0, 0, 90)
    sp = residues(solve_pade(cv, 45, 45))
    want = np.repeat(np.exp(-np.arange(1, 5)), 2)
    np.testing.assert_allclose(np.abs(sp.residues[:8]), want, rtol=1e-3)
    X = np.array(cv.metadata["phases"][:2])
    for k, x in enumerate(X, start=1):
        p = np.exp(-2j * np.pi * x)
        A = sp.residue_at(p)
        assert abs(A - (-math.exp(-k) * p)) < 1e-3 * math.exp(-k)


def test_fit_beta_exact_geometric():
    mags = np.exp(-0.7 * np.arange(1, 30))
    beta, rng, r2 = fit_beta(mags)
    assert beta == pytest.approx(0.7, rel=1e-12)
    assert r2 == pytest.approx(1.0)
    assert rng == (2, 29)


def test_cluster_marks_unreliable():
    q = np.poly([2.0, 2.0 + 1e-9, -3.0])[::-1]
    q = q / q[0]
    sp = residues(RationalApproximant([1, 0, 0], q, 2, 3))
    assert (~sp.reliable).sum() >= 2


def test_spectrum_csv(tmp_path):
    sp = residues(solve_pade(series(Family.F5_TAN4, 40), 20, 20))
    p = write_spectrum_csv(sp, tmp_path / "s.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "rank,pole_re,pole_im,residue_re,residue_im,residue_abs,reliable"
    assert len(lines) == len(sp) + 1


# --- classification ----------------------------------------------------------


def test_pole2_clean_single_stable():
    rep = report_for(solve_pade(series(Family.POLE2, 20), 10, 10))
    stable = rep.poles(PoleClass.STABLE)
    assert stable.size == 1 and abs(stable[0] - 2) < 1e-12
    assert rep.counts["GHOST_PAIR"] + rep.counts["FROISSART"] == len(rep.entries) - 1


def test_pole2_clean_full_degree_ghosts():
    # at full degree the other nine poles cancel against zeros
    a = solve_pade(series(Family.POLE2, 20), 10, 10, SolveOptions(degenerate=DegeneratePolicy.MIN_NORM))
    rep = report_for(a)
    assert rep.counts == {"STABLE": 1, "GHOST_PAIR": 9, "FROISSART": 0}
    assert abs(rep.poles(PoleClass.STABLE)[0] - 2) < 1e-10


def test_pole2_noisy_stable_and_froissart():
    rep = report_for(solve_pade(series(Family.POLE2, 20, noise=NoiseSpec(0.01, 0)), 10, 10))
    stable = rep.poles(PoleClass.STABLE)
    assert np.abs(stable - 2).min() < 0.2
    assert rep.counts["FROISSART"] > 1


def test_fibonacci_no_froissart():
    rep = report_for(solve_pade(series(Family.FIB_GENERATING, 20), 10, 10))
    assert rep.counts["FROISSART"] == 0


def test_report_csv(tmp_path):
    rep = report_for(solve_pade(series(Family.POLE2, 20, noise=NoiseSpec(0.01, 0)), 10, 10))
    p = write_report_csv(rep, tmp_path / "r.csv")
    head = p.read_text().splitlines()[0]
    assert head == "index,pole_re,pole_im,class,pairing_distance,paired_zero,shell_distance,residue_abs"


# --- boundary statistics -----------------------------------------------------


@pytest.mark.parametrize("n", [8, 32, 128])
def test_roots_of_unity(n):
    bs = boundary_statistics(np.exp(2j * np.pi * np.arange(n) / n))
    assert bs.shell_fraction == 1.0
    assert bs.angular_discrepancy == pytest.approx(1 / n, rel=1e-9)


def test_random_polynomial_concentration():
    c = np.random.Generator(np.random.PCG64(0)).random(101)
    bs = boundary_statistics(Polynomial(c))
    assert bs.size_functional < 0.1 * 100
    assert bs.shell_fraction >= 0.8


def test_jacobi_shell_fraction():
    a = solve_pade(series(Family.JACOBI_LACUNARY, 128), 64, 64)
    assert boundary_statistics(poles_zeros(a)).shell_fraction >= 0.8


def test_too_few_poles():
    with pytest.raises(StatisticsError):
        boundary_statistics(poles_zeros(solve_pade(series(Family.POLE2, 20), 10, 10)))


# --- denoising ---------------------------------------------------------------


def _mode_error(got, want):
    return max(abs(got.amplitude - want.amplitude), abs(got.frequency - want.frequency), abs(got.damping - want.damping))


def _match(modes, target):
    return min(modes, key=lambda m: _mode_error(m, target))


def test_single_mode_clean():
    m0 = Mode(1.0, 0.1, 0.2)
    model = denoise_signal(synthesize_signal([m0], 64), DENOISE_ORDER, DENOISE_ORDER)
    assert len(model.modes) == 1
    assert _mode_error(model.modes[0], m0) < 1e-6
    assert model.reconstruction_rms < 1e-8


def test_single_mode_noisy():
    m0 = Mode(1.0, 0.1, 0.2)
    s = synthesize_signal([m0], 64)
    errs, froissart = [], []
    for seed in range(10):
        model = denoise_signal(s + sym_noise(64, 0.01, seed), DENOISE_ORDER, DENOISE_ORDER)
        errs.append(_mode_error(_match(model.modes, m0), m0))
        froissart.append(model.report.counts["FROISSART"])
    assert np.median(errs) <= 1e-2
    assert max(froissart) > 0


def test_pure_noise():
    s = sym_noise(64, 0.01, 1)
    try:
        model = denoise_signal(s, DENOISE_ORDER, DENOISE_ORDER)
    except EmptyModelError as exc:
        assert "counts" in exc.diagnostics
        return
    assert model.report.counts["FROISSART"] == len(model.report.entries)


def test_denoise_needs_samples():
    with pytest.raises(ValueError):
        denoise_signal(np.ones(5), 3, 3)


def test_duration_scaling():
    m0 = Mode(0.5 + 0.5j, 0.02, 0.01)
    s = synthesize_signal([m0], 40, duration=200.0)
    model = denoise_signal(s, 4, 4, duration=200.0)
    assert _mode_error(model.modes[0], m0) < 1e-8


# --- beta stability ----------------------------------------------------------


def test_random_series_drifts():
    cv = taylor_coefficients(SeriesSpec(Family.RANDOM_UNIFORM, {"epsilon": 1.0, "seed": 0}), 90)
    v = beta_stability_test(cv, [15, 25, 45])
    assert v.verdict is Verdict.DRIFTING
    assert v.monotone_decreasing


def test_single_mode_rational_verdict():
    v = beta_stability_test(series(Family.POLE2, 40), [5, 10, 20])
    assert v.verdict in (Verdict.UNRELIABLE, Verdict.STABLE)


def test_beta_needs_coefficients():
    with pytest.raises(ValueError):
        beta_stability_test(series(Family.POLE2, 20), [15])


# --- properties --------------------------------------------------------------


def _rational(seed, M, L):
    rng = np.random.default_rng(seed)
    while True:
        z = rng.uniform(1.5, 3, M) * np.exp(1j * rng.uniform(-np.pi, np.pi, M))
        if M == 1 or np.abs(z[:, None] - z[None, :])[~np.eye(M, dtype=bool)].min() > 0.3:
            break
    q = np.poly(z)[::-1]
    q /= q[0]
    p = rng.uniform(-1, 1, L + 1) + 1j * rng.uniform(-1, 1, L + 1)
    return RationalApproximant(p, q, L, M)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.data())
@settings(max_examples=60, deadline=None)
def test_residue_reconstruction(seed, M, data):
    L = data.draw(st.integers(0, M))
    a = _rational(seed, M, L)
    sp = residues(a)
    assume(sp.constant is not None)
    rng = np.random.default_rng(seed + 1)
    z = rng.uniform(-1.2, 1.2, 20) + 1j * rng.uniform(-1.2, 1.2, 20)
    recon = sp.constant + (sp.residues[None, :] / (z[:, None] - sp.poles[None, :])).sum(axis=1)
    want = evaluate(a, z)
    assert np.abs(recon - want).max() / np.abs(want).max() < 1e-6


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_residue_matches_product_form(seed, M):
    # A_k = P(z_k) / (b_M prod_{j != k} (z_k - z_j))
    a = _rational(seed, M, M - 1)
    sp = residues(a)
    z = sp.poles
    for k in range(M):
        others = np.delete(z, k)
        want = np.polyval(a.numerator[::-1], z[k]) / (a.denominator[-1] * np.prod(z[k] - others))
        assert abs(sp.residues[k] - want) <= 1e-8 * max(1.0, abs(want))


@given(st.sampled_from([Family.F5_TAN4, Family.BRANCH2, Family.JACOBI_LACUNARY, Family.POLE2]),
       st.integers(4, 30), st.floats(0, 0.05), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_classification_exhaustive_and_sorted(family, M, eps, seed):
    noise = NoiseSpec(eps, seed) if eps > 0 else None
    # entries inside a block of the exact sparse tables have no approximant
    try:
        a = solve_pade(series(family, 2 * M, noise=noise), M, M)
    except SolveError:
        assume(False)
    pzs = poles_zeros(a)
    sp = residues(a, pzs)
    rep = classify_doublets(pzs, sp)
    assert sum(rep.counts.values()) == pzs.pole_locations.size == len(sp)
    mags = np.nan_to_num(np.abs(sp.residues), nan=-1.0)
    assert np.all(np.diff(mags) <= 0)
    again = residues(a, pzs)
    assert np.array_equal(again.poles, sp.poles)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_denoise_round_trip(seed, n_modes):
    rng = np.random.default_rng(seed)
    freqs = rng.choice(np.linspace(-0.4, 0.4, 17), n_modes, replace=False)
    modes = [
        Mode(complex(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)), float(f), float(rng.uniform(0.05, 0.3)))
        for f in freqs
    ]
    s = synthesize_signal(modes, 64)
    model = denoise_signal(s, DENOISE_ORDER, DENOISE_ORDER)
    assert len(model.modes) == n_modes
    for m in modes:
        assert _mode_error(_match(model.modes, m), m) < 1e-6
    assert model.reconstruction_rms <= 1e-8


def _stable_poles(family, seed):
    return report_for(solve_pade(series(family, 20, noise=NoiseSpec(0.01, seed)), 10, 10)).poles(PoleClass.STABLE)


def _hausdorff(points, targets):
    d = np.abs(points[:, None] - targets[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_noise_sensitivity_ordering():
    cut = np.linspace(-3, -1, 401) + 0j  # branch cut of sqrt((3+z)/(1+z))
    pole = np.array([2.0 + 0j])
    h_pole = np.median([_hausdorff(_stable_poles(Family.POLE2, s), pole) for s in range(10)])
    h_cut = np.median([_hausdorff(_stable_poles(Family.BRANCH1, s), cut) for s in range(10)])
    assert h_pole < h_cut


def test_noise_sensitivity_ordering_coverage():
    # one-sided: how well the STABLE poles cover the true singular set
    cut = np.linspace(-3, -1, 401) + 0j
    d_pole = np.median([np.abs(_stable_poles(Family.POLE2, s) - 2).min() for s in range(10)])
    d_cut = np.median(
        [np.abs(_stable_poles(Family.BRANCH1, s)[:, None] - cut[None, :]).min(axis=0).max() for s in range(10)]
    )
    assert d_pole < d_cut
