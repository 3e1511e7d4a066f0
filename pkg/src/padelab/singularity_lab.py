"""Pole/zero analysis of Padé approximants.

Residues, ghost-pair and Froissart-doublet classification, clustering
statistics near the unit circle, residue-decay fits and Z-transform
denoising of damped-oscillator signals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._numeric import dumps_json, fmt_real, num
from .pade_engine import RationalApproximant, SolveOptions, solve_pade
from .polyroots import FLAG_CLUSTER, Polynomial, RootSet, roots
from .series_corpus import CoefficientVector, Family, SeriesSpec

__all__ = [
    "PoleZeroSet",
    "ResidueSpectrum",
    "PoleClass",
    "DoubletThresholds",
    "PoleEntry",
    "DoubletReport",
    "BoundaryStats",
    "Mode",
    "SignalModel",
    "Verdict",
    "StabilityVerdict",
    "EmptyModelError",
    "StatisticsError",
    "poles_zeros",
    "residues",
    "fit_beta",
    "classify_doublets",
    "boundary_statistics",
    "size_functional",
    "synthesize_signal",
    "denoise_signal",
    "beta_stability_test",
    "write_spectrum_csv",
    "write_report_csv",
    "spectrum_to_dict",
    "report_to_dict",
]

EPS = np.finfo(float).eps
SEPARATION_TOL = 1e-12


class EmptyModelError(RuntimeError):
    """Denoising found no stable poles."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class StatisticsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# poles and zeros


def _scaled(rs: RootSet, rho: float) -> RootSet:
    if rho == 1:
        return rs
    return RootSet(
        rs.roots * rho,
        rs.backward_errors,
        rs.multiplicity_flags,
        rs.zero_count,
        rs.infinite_count,
        rs.iterations,
        rs.method,
        rs.cert_tol,
    )


def _empty_rootset(degree: int) -> RootSet:
    return RootSet(np.zeros(0, dtype=complex), np.zeros(0), (), 0, degree, 0, "none")


@dataclass(frozen=True, eq=False)
class PoleZeroSet:
    """Poles (roots of Q) and zeros (roots of P) in the original variable."""

    poles: RootSet
    zeros: RootSet
    source: Optional[RationalApproximant] = None

    @property
    def pole_locations(self) -> np.ndarray:
        return self.poles.all_roots

    @property
    def zero_locations(self) -> np.ndarray:
        return self.zeros.all_roots


def poles_zeros(approximant: RationalApproximant) -> PoleZeroSet:
    rho = approximant.scale
    den = Polynomial(approximant.denominator.astype(np.complex128))
    num_ = Polynomial(approximant.numerator.astype(np.complex128))
    p = roots(den) if den.effective_degree >= 1 else _empty_rootset(den.degree)
    z = roots(num_) if num_.effective_degree >= 1 else _empty_rootset(num_.degree)
    return PoleZeroSet(_scaled(p, rho), _scaled(z, rho), approximant)


# ---------------------------------------------------------------------------
# residues


def _horner(c, z):
    acc = np.zeros(np.shape(z), dtype=np.complex128)
    for x in c[::-1]:
        acc = acc * z + x
    return acc


def _horner_d(c, z):
    p = np.zeros(np.shape(z), dtype=np.complex128)
    dp = np.zeros_like(p)
    for x in c[::-1]:
        dp = dp * z + p
        p = p * z + x
    return p, dp


def _residues_scaled(P: np.ndarray, Q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """P(w)/Q'(w) in the approximant's own variable."""
    L, M = P.size - 1, Q.size - 1
    out = np.empty(w.shape, dtype=np.complex128)
    big = np.abs(w) > 1
    with np.errstate(all="ignore"):
        if (~big).any():
            ws = w[~big]
            _, dq = _horner_d(Q, ws)
            out[~big] = _horner(P, ws) / dq
        if big.any():
            wb = w[big]
            u = 1 / wb
            # Q'(w) = w^{M-1} (M Qr(u) - u Qr'(u)),  P(w) = w^L Pr(u)
            qr, dqr = _horner_d(Q[::-1], u)
            out[big] = _horner(P[::-1], u) / (M * qr - u * dqr) * wb ** (L - M + 1)
    return out


@dataclass(frozen=True, eq=False)
class ResidueSpectrum:
    """Residues A_k sorted by descending |A_k|.

    Ties are broken by ascending pole argument, then ascending |pole|.
    ``beta`` is the slope of -log|A_k| against the rank k (1-based) over
    ``fit_range`` (half-open, 0-based indices into the sorted arrays).
    """

    poles: np.ndarray
    residues: np.ndarray
    reliable: np.ndarray
    beta: float
    fit_range: tuple
    fit_quality: float
    constant: Optional[complex] = None

    def __post_init__(self):
        for name in ("poles", "residues", "reliable"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.poles.size

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.residues)

    def residue_at(self, pole: complex) -> complex:
        i = int(np.argmin(np.abs(self.poles - pole)))
        return complex(self.residues[i])


def fit_beta(magnitudes: np.ndarray, mask: Optional[np.ndarray] = None, drop_top: int = 2):
    """Least-squares fit of log|A_k| = c - beta k.

    Drops the ``drop_top`` dominant residues and the trailing plateau below
    1e3 eps |A_1|.  Returns (beta, (start, stop), r_squared); beta is NaN
    when fewer than three points remain.
    """
    mags = np.asarray(magnitudes, dtype=float)
    n = mags.size
    if mask is None:
        mask = np.ones(n, dtype=bool)
    if n == 0 or mags[0] == 0:
        return math.nan, (0, 0), 0.0
    floor = 1e3 * EPS * mags[0]
    stop = n
    while stop > 0 and mags[stop - 1] < floor:
        stop -= 1
    start = min(drop_top, stop)
    k = np.arange(n) + 1
    sel = np.zeros(n, dtype=bool)
    sel[start:stop] = True
    sel &= mask & (mags > 0)
    if sel.sum() < 3:
        return math.nan, (start, stop), 0.0
    x, y = k[sel].astype(float), np.log(mags[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / sst if sst > 0 else 0.0
    return float(-slope), (start, stop), r2


def residues(approximant: RationalApproximant, pole_set: Optional[PoleZeroSet] = None) -> ResidueSpectrum:
    """A_k = P(z_k)/Q'(z_k) at every finite pole (original variable)."""
    pzs = pole_set if pole_set is not None else poles_zeros(approximant)
    rho = approximant.scale
    poles = pzs.pole_locations
    P = approximant.numerator.astype(np.complex128)
    Q = approximant.denominator.astype(np.complex128)
    A = _residues_scaled(P, Q, poles / rho) * rho
    reliable = np.isfinite(A)
    flags = pzs.poles.all_flags
    for i in range(poles.size):
        if FLAG_CLUSTER in flags[i]:
            reliable[i] = False
    if poles.size > 1:
        d = np.abs(poles[:, None] - poles[None, :])
        np.fill_diagonal(d, np.inf)
        reliable &= d.min(axis=1) >= SEPARATION_TOL
    A = np.where(np.isfinite(A), A, np.nan)
    mag = np.where(np.isfinite(np.abs(A)), np.abs(A), -np.inf)
    order = np.lexsort((np.abs(poles), np.mod(np.angle(poles), 2 * np.pi), -mag))
    poles, A, reliable = poles[order], A[order], reliable[order]
    beta, rng, r2 = fit_beta(np.nan_to_num(np.abs(A)), reliable)
    return ResidueSpectrum(poles, A, reliable, beta, rng, r2, _constant_term(P, Q))


def _constant_term(P, Q) -> Optional[complex]:
    """Limit of P/Q at infinity when it is finite."""
    lp = Polynomial(P).effective_degree
    lq = Polynomial(Q).effective_degree
    if lp < 0 or lp < lq:
        return 0j
    if lp == lq:
        return complex(P[lp] / Q[lq])
    return None


# ---------------------------------------------------------------------------
# doublets


class PoleClass(str, enum.Enum):
    STABLE = "STABLE"
    GHOST_PAIR = "GHOST_PAIR"
    FROISSART = "FROISSART"


@dataclass(frozen=True)
class DoubletThresholds:
    """delta_pair: pole-zero distance; tau_rel: residue cut relative to
    max|A|; delta_shell: half-width of the unit-circle shell."""

    delta_pair: float = 1e-3
    tau_rel: float = 1e-6
    delta_shell: float = 0.05


@dataclass(frozen=True)
class PoleEntry:
    index: int
    pole: complex
    classification: PoleClass
    pairing_distance: float
    paired_zero: Optional[int]
    zero: Optional[complex]
    shell_distance: float
    residue_magnitude: float


@dataclass(frozen=True)
class DoubletReport:
    entries: tuple
    thresholds: DoubletThresholds = DoubletThresholds()

    @property
    def counts(self) -> dict:
        out = {c.value: 0 for c in PoleClass}
        for e in self.entries:
            out[e.classification.value] += 1
        return out

    def of(self, cls: PoleClass) -> list:
        return [e for e in self.entries if e.classification is PoleClass(cls)]

    def poles(self, cls: PoleClass) -> np.ndarray:
        return np.array([e.pole for e in self.of(cls)], dtype=complex)


def classify_doublets(
    pzs: PoleZeroSet, spectrum: ResidueSpectrum, params: Optional[DoubletThresholds] = None
) -> DoubletReport:
    """Label every finite pole STABLE, GHOST_PAIR or FROISSART.

    A pole is a ghost pair when a zero lies within ``delta_pair`` and its
    residue is below ``tau_rel * max|A|``; a ghost pair within
    ``delta_shell`` of the unit circle is a Froissart doublet.
    """
    params = params or DoubletThresholds()
    zeros = pzs.zero_locations
    mags = np.abs(spectrum.residues)
    finite = mags[np.isfinite(mags)]
    tau = params.tau_rel * (finite.max() if finite.size else 0.0)
    entries = []
    for i, (p, a) in enumerate(zip(spectrum.poles, mags)):
        if zeros.size:
            d = np.abs(zeros - p)
            j = int(np.argmin(d))
            dist, zj = float(d[j]), complex(zeros[j])
        else:
            j, dist, zj = None, math.inf, None
        shell = abs(abs(p) - 1.0)
        ghost = dist < params.delta_pair and (a < tau or not np.isfinite(a))
        if ghost and shell < params.delta_shell:
            cls = PoleClass.FROISSART
        elif ghost:
            cls = PoleClass.GHOST_PAIR
        else:
            cls = PoleClass.STABLE
        entries.append(
            PoleEntry(i, complex(p), cls, dist, None if cls is PoleClass.STABLE else j, zj, shell, float(a))
        )
    return DoubletReport(tuple(entries), params)


# ---------------------------------------------------------------------------
# boundary statistics


@dataclass(frozen=True)
class BoundaryStats:
    count: int
    shell_width: float
    shell_fraction: float
    angular_discrepancy: float
    size_functional: Optional[float]


def size_functional(coeffs) -> float:
    """log(sum |a_n| / sqrt|a_0 a_N|) over the trimmed coefficient range."""
    p = Polynomial(coeffs)
    lo, hi = p.low_order, p.effective_degree
    a = np.abs(p.coeffs[lo : hi + 1])
    if a.size == 0:
        raise StatisticsError("zero polynomial")
    return float(np.log(a.sum() / np.sqrt(a[0] * a[-1])))


def _angular_discrepancy(z: np.ndarray) -> float:
    n = z.size
    th = np.sort(np.mod(np.angle(z), 2 * np.pi))
    i, j = np.triu_indices(n, k=1)
    length = (th[j] - th[i]) / (2 * np.pi)
    inside_closed = (j - i + 1) / n
    inside_open = (j - i - 1) / n
    # the complementary (wrapping) arcs
    wrap_len = 1 - length
    wrap_closed = (n - (j - i) + 1) / n
    wrap_open = (n - (j - i) - 1) / n
    return float(
        max(
            np.abs(inside_closed - length).max(),
            np.abs(inside_open - length).max(),
            np.abs(wrap_closed - wrap_len).max(),
            np.abs(wrap_open - wrap_len).max(),
        )
    )


def boundary_statistics(
    pzs: Union[PoleZeroSet, Polynomial, np.ndarray, Sequence[complex]], shell_width: float = 0.05
) -> BoundaryStats:
    """Clustering of poles around |z| = 1.

    ``pzs`` may be a :class:`PoleZeroSet` (size functional of its
    denominator), a :class:`Polynomial` (its roots; size functional of the
    polynomial) or a bare array of points (no size functional).
    """
    if isinstance(pzs, PoleZeroSet):
        z = pzs.pole_locations
        src = pzs.source
        L = size_functional(src.denominator.astype(np.complex128)) if src is not None else None
    elif isinstance(pzs, Polynomial):
        z = roots(pzs).all_roots
        L = size_functional(pzs.coeffs)
    else:
        z = np.asarray(pzs, dtype=complex).ravel()
        L = None
    if z.size < 2:
        raise StatisticsError(f"boundary statistics need at least 2 poles, got {z.size}")
    frac = float(np.mean(np.abs(np.abs(z) - 1) < shell_width))
    return BoundaryStats(int(z.size), float(shell_width), frac, _angular_discrepancy(z), L)


# ---------------------------------------------------------------------------
# Z-transform denoising


@dataclass(frozen=True)
class Mode:
    """A e^{i omega t}, omega = 2 pi frequency + i damping."""

    amplitude: complex
    frequency: float
    damping: float

    @property
    def omega(self) -> complex:
        return 2 * np.pi * self.frequency + 1j * self.damping


@dataclass(frozen=True, eq=False)
class SignalModel:
    modes: tuple
    sample_count: int
    duration: float
    reconstruction_rms: float = math.nan
    report: Optional[DoubletReport] = None
    approximant: Optional[RationalApproximant] = None

    def samples(self, n: Optional[int] = None) -> np.ndarray:
        return synthesize_signal(self.modes, self.sample_count if n is None else n, self.duration, self.sample_count)


def synthesize_signal(modes: Sequence[Mode], n: int, duration: Optional[float] = None, N: Optional[int] = None) -> np.ndarray:
    """s_k = sum_l A_l exp(i omega_l k T/N) for k = 0..n-1."""
    N = n if N is None else N
    T = float(N if duration is None else duration)
    k = np.arange(n)
    s = np.zeros(n, dtype=complex)
    for m in modes:
        s += m.amplitude * np.exp(1j * m.omega * k * T / N)
    return s


def denoise_signal(
    samples,
    L: int,
    M: int,
    thresholds: Optional[DoubletThresholds] = None,
    *,
    duration: Optional[float] = None,
    opts: Optional[SolveOptions] = None,
) -> SignalModel:
    """Recover damped modes from the [L|M] approximant of Z(z) = sum s_n z^n.

    Spurious (ghost/Froissart) poles and poles inside the closed unit disk
    are discarded.  A remaining pole p = exp(-i omega T/N) with residue R
    of sum A/(1 - z/p) gives omega = (iN/T) log p and A = -R/p.
    ``duration`` defaults to the sample count (unit sampling interval).
    """
    s = np.asarray(samples, dtype=complex)
    N = s.size
    if N < L + M + 1:
        raise ValueError(f"need at least {L + M + 1} samples, have {N}")
    T = float(N if duration is None else duration)
    cv = CoefficientVector(s, SeriesSpec(Family.RECURSION, {"source": "samples"}))
    approx = solve_pade(cv, L, M, opts)
    pzs = poles_zeros(approx)
    spec = residues(approx, pzs)
    report = classify_doublets(pzs, spec, thresholds)
    modes = []
    for e in report.entries:
        if e.classification is not PoleClass.STABLE or not abs(e.pole) > 1:
            continue
        p = e.pole
        R = spec.residues[e.index]
        omega = 1j * N / T * np.log(p)
        modes.append(Mode(complex(-R / p), float(omega.real / (2 * np.pi)), float(omega.imag)))
    if not modes:
        raise EmptyModelError(
            "no stable poles outside the unit circle",
            {"counts": report.counts, "poles": len(report.entries)},
        )
    modes.sort(key=lambda m: (-abs(m.amplitude), m.frequency))
    recon = synthesize_signal(modes, N, T, N)
    rms = float(np.sqrt(np.mean(np.abs(recon - s) ** 2)))
    return SignalModel(tuple(modes), N, T, rms, report, approx)


# ---------------------------------------------------------------------------
# beta stability


class Verdict(str, enum.Enum):
    STABLE = "STABLE"
    DRIFTING = "DRIFTING"
    UNRELIABLE = "UNRELIABLE"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    orders: tuple
    betas: tuple
    fit_qualities: tuple
    spread: float
    monotone_decreasing: bool


def beta_stability_test(
    coeffs: CoefficientVector,
    orders: Sequence[int],
    opts: Optional[SolveOptions] = None,
    max_spread: float = 0.25,
    min_quality: float = 0.5,
    thresholds: Optional[DoubletThresholds] = None,
    exclude_spurious: bool = True,
) -> StabilityVerdict:
    """Fit the residue decay exponent beta of [M|M] for each M in ``orders``.

    STABLE when (max beta - min beta) / max |beta| <= ``max_spread``,
    DRIFTING otherwise, UNRELIABLE if any fit has R^2 < ``min_quality``.
    With ``exclude_spurious`` the residues of ghost-pair and Froissart poles
    are left out of each fit; at low order they sit in the tail of the
    sorted spectrum and bend the slope.
    """
    orders = tuple(int(m) for m in orders)
    if not orders:
        raise ValueError("at least one order is required")
    if 2 * max(orders) > coeffs.order:
        raise ValueError(f"order {max(orders)} needs {2 * max(orders) + 1} coefficients, have {len(coeffs)}")
    betas, quals = [], []
    for M in orders:
        approx = solve_pade(coeffs, M, M, opts)
        pzs = poles_zeros(approx)
        spec = residues(approx, pzs)
        beta, quality = spec.beta, spec.fit_quality
        if exclude_spurious:
            report = classify_doublets(pzs, spec, thresholds)
            stable = np.array([e.classification is PoleClass.STABLE for e in report.entries], dtype=bool)
            beta, _, quality = fit_beta(np.nan_to_num(np.abs(spec.residues)), spec.reliable & stable)
        betas.append(beta)
        quals.append(quality)
    b = np.array(betas, dtype=float)
    if np.all(np.isfinite(b)) and np.abs(b).max() > 0:
        spread = float((b.max() - b.min()) / np.abs(b).max())
    else:
        spread = math.inf
    ordered = [b for _, b in sorted(zip(orders, betas))]
    mono = all(x > y for x, y in zip(ordered, ordered[1:]))
    if any(not (q >= min_quality) for q in quals) or not np.all(np.isfinite(b)):
        verdict = Verdict.UNRELIABLE
    elif spread <= max_spread:
        verdict = Verdict.STABLE
    else:
        verdict = Verdict.DRIFTING
    return StabilityVerdict(verdict, orders, tuple(betas), tuple(quals), spread, mono)


# ---------------------------------------------------------------------------
# serialization


def spectrum_to_dict(spec: ResidueSpectrum) -> dict:
    return {
        "beta": num(spec.beta) if math.isfinite(spec.beta) else None,
        "fit_range": list(spec.fit_range),
        "fit_quality": num(spec.fit_quality),
        "residues": [
            {
                "rank": k + 1,
                "pole": {"re": num(p.real), "im": num(p.imag)},
                "residue": {"re": num(a.real), "im": num(a.imag)},
                "abs": num(abs(a)),
                "reliable": bool(r),
            }
            for k, (p, a, r) in enumerate(zip(spec.poles, spec.residues, spec.reliable))
        ],
    }


SPECTRUM_COLUMNS = ("rank", "pole_re", "pole_im", "residue_re", "residue_im", "residue_abs", "reliable")
REPORT_COLUMNS = (
    "index",
    "pole_re",
    "pole_im",
    "class",
    "pairing_distance",
    "paired_zero",
    "shell_distance",
    "residue_abs",
)


def _f(x) -> str:
    return fmt_real(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf") if not math.isnan(x) else "nan"


def write_spectrum_csv(spec: ResidueSpectrum, path) -> Path:
    lines = [",".join(SPECTRUM_COLUMNS)]
    for k, (p, a, r) in enumerate(zip(spec.poles, spec.residues, spec.reliable)):
        lines.append(",".join([str(k + 1), _f(p.real), _f(p.imag), _f(a.real), _f(a.imag), _f(abs(a)), str(int(r))]))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def report_to_dict(report: DoubletReport) -> dict:
    t = report.thresholds
    return {
        "thresholds": {"delta_pair": num(t.delta_pair), "tau_rel": num(t.tau_rel), "delta_shell": num(t.delta_shell)},
        "counts": report.counts,
        "poles": [
            {
                "index": e.index,
                "pole": {"re": num(e.pole.real), "im": num(e.pole.imag)},
                "class": e.classification.value,
                "pairing_distance": num(e.pairing_distance) if math.isfinite(e.pairing_distance) else None,
                "paired_zero": e.paired_zero,
                "shell_distance": num(e.shell_distance),
                "residue_abs": num(e.residue_magnitude) if math.isfinite(e.residue_magnitude) else None,
            }
            for e in report.entries
        ],
    }


def write_report_csv(report: DoubletReport, path) -> Path:
    lines = [",".join(REPORT_COLUMNS)]
    for e in report.entries:
        lines.append(
            ",".join(
                [
                    str(e.index),
                    _f(e.pole.real),
                    _f(e.pole.imag),
                    e.classification.value,
                    _f(e.pairing_distance),
                    "" if e.paired_zero is None else str(e.paired_zero),
                    _f(e.shell_distance),
                    _f(e.residue_magnitude),
                ]
            )
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(obj: dict, path) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path
