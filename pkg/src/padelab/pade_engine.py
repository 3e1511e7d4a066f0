"""Padé approximants from truncated Taylor series.

The denominator solves the M x M Toeplitz system

    sum_{j=1..M} b_j c_{L+i-j} = -c_{L+i},   i = 1..M,

by LU factorization with partial pivoting plus a few passes of iterative
refinement; the numerator follows from the convolution
a_k = sum_{j<=min(k,M)} b_j c_{k-j}.  All linear algebra here is written
directly against numpy arrays so the same code runs in binary64 or in the
platform's extended ``longdouble`` (see ``precision``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Optional

import numpy as np

from ._numeric import (
    complex_dtype,
    complex_from_record,
    complex_record,
    dumps_json,
    exact_to_array,
    horner,
    loads_json,
    num,
    precision_of,
    real_dtype,
)
from .series_corpus import CoefficientVector, _fib

__all__ = [
    "Scaling",
    "DegeneratePolicy",
    "SolveOptions",
    "SolveError",
    "PoleProximityError",
    "RationalApproximant",
    "OracleFamily",
    "solve_pade",
    "scale_series",
    "unscale",
    "auto_scale",
    "exact_pade_oracle",
    "exact_pade_fractions",
    "fib_lacunary_numerator_transcribed",
    "evaluate",
    "agreement_order_check",
    "write_approximant",
    "read_approximant",
]


class SolveError(ArithmeticError):
    """The Toeplitz system is singular or the solve failed verification."""

    def __init__(self, message: str, rank: Optional[int] = None, suggestion: str = ""):
        super().__init__(message if not suggestion else f"{message}; {suggestion}")
        self.rank = rank
        self.suggestion = suggestion


class PoleProximityError(ArithmeticError):
    def __init__(self, q_abs: float):
        super().__init__(f"denominator vanishes at evaluation point (|Q| = {q_abs:.3g})")
        self.q_abs = q_abs


class Scaling(str, enum.Enum):
    NONE = "NONE"
    AUTO = "AUTO"
    EXPLICIT = "EXPLICIT"


class DegeneratePolicy(str, enum.Enum):
    """What to do when the Toeplitz matrix is numerically rank deficient.

    REDUCE
        The input is (to working precision) rational of lower type.  Solve
        the largest nonsingular reduced problem, check that it still matches
        L+M+1 coefficients and pad it with zeros to the requested degrees.
    MIN_NORM
        Minimum-norm least-squares denominator at the full degree.  Keeps the
        spurious pole/zero structure that rounding noise produces.
    ERROR
        Raise :class:`SolveError`.
    """

    REDUCE = "REDUCE"
    MIN_NORM = "MIN_NORM"
    ERROR = "ERROR"


@dataclass(frozen=True)
class SolveOptions:
    refinement_iters: int = 2
    residual_tol: float = 1e-10
    scaling: Scaling = Scaling.NONE
    rho: Optional[float] = None
    degenerate: DegeneratePolicy = DegeneratePolicy.REDUCE

    def __post_init__(self):
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        object.__setattr__(self, "degenerate", DegeneratePolicy(self.degenerate))
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be > 0")
        if self.refinement_iters < 0:
            raise ValueError("refinement_iters must be >= 0")
        if self.scaling is Scaling.EXPLICIT and not (self.rho is not None and self.rho > 0):
            raise ValueError("EXPLICIT scaling needs rho > 0")

    @classmethod
    def explicit(cls, rho: float, **kw) -> "SolveOptions":
        return cls(scaling=Scaling.EXPLICIT, rho=rho, **kw)


def _frozen(arr) -> np.ndarray:
    a = np.array(arr)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RationalApproximant:
    """P(z/scale) / Q(z/scale) with ascending coefficients and b_0 = 1."""

    numerator: np.ndarray
    denominator: np.ndarray
    L: int
    M: int
    scale: float = 1.0
    condition_report: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        num_ = np.array(self.numerator)
        den = np.array(self.denominator)
        if num_.dtype not in (np.complex128, np.clongdouble):
            num_ = num_.astype(np.complex128)
        den = den.astype(num_.dtype)
        if num_.shape != (self.L + 1,) or den.shape != (self.M + 1,):
            raise ValueError(
                f"coefficient lengths {num_.shape}/{den.shape} do not match [{self.L}|{self.M}]"
            )
        if den[0] == 0:
            raise ValueError("denominator constant term must be nonzero")
        if den[0] != 1:
            num_ = num_ / den[0]
            den = den / den[0]
            den[0] = 1
        object.__setattr__(self, "numerator", _frozen(num_))
        object.__setattr__(self, "denominator", _frozen(den))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "condition_report", MappingProxyType(dict(self.condition_report)))

    @property
    def precision(self) -> str:
        return precision_of(self.numerator)

    def __call__(self, z):
        return evaluate(self, z)

    def __eq__(self, other):
        if not isinstance(other, RationalApproximant):
            return NotImplemented
        return (
            (self.L, self.M, self.scale) == (other.L, other.M, other.scale)
            and np.array_equal(self.numerator, other.numerator)
            and np.array_equal(self.denominator, other.denominator)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# scaling


def scale_series(coeffs: CoefficientVector, rho: float) -> CoefficientVector:
    """c_n -> c_n rho^n."""
    if not rho > 0:
        raise ValueError(f"scale must be > 0, got {rho}")
    if rho == 1:
        return coeffs
    rdt = real_dtype(coeffs.precision)
    powers = rdt(rho) ** np.arange(coeffs.coeffs.size, dtype=rdt)
    meta = dict(coeffs.metadata)
    meta["scale"] = float(rho) * float(meta.get("scale", 1.0))
    return CoefficientVector(coeffs.coeffs * powers, coeffs.spec, meta)


def unscale(approximant: RationalApproximant, rho: Optional[float] = None) -> RationalApproximant:
    """Substitute z -> z/rho into P and Q (a_k, b_k -> a_k rho^-k, b_k rho^-k).

    With ``rho`` omitted the approximant's stored scale is folded into the
    coefficients and the result has scale 1.  An explicit ``rho`` undoes an
    external :func:`scale_series` and leaves the stored scale alone.
    """
    keep = approximant.scale
    if rho is None:
        rho, keep = approximant.scale, 1.0
    if not rho > 0:
        raise ValueError(f"scale must be > 0, got {rho}")
    rdt = real_dtype(approximant.precision)
    inv = rdt(1) / rdt(rho)
    a = approximant.numerator * inv ** np.arange(approximant.L + 1, dtype=rdt)
    b = approximant.denominator * inv ** np.arange(approximant.M + 1, dtype=rdt)
    b[0] = 1
    report = dict(approximant.condition_report)
    report["unscaled_by"] = float(rho)
    return RationalApproximant(a, b, approximant.L, approximant.M, keep, report)


def auto_scale(c: np.ndarray) -> float:
    """1 / geometric mean of |c_{n+1}/c_n| over the last quarter of the series.

    Pairs with a zero member are skipped; returns 1 when nothing is usable.
    """
    c = np.asarray(c)
    n = c.size
    start = max(0, n - max(2, n // 4) - 1)
    tail = np.abs(c[start:]).astype(np.float64)
    ok = (tail[1:] > 0) & (tail[:-1] > 0)
    if not ok.any():
        return 1.0
    logs = np.log(tail[1:][ok]) - np.log(tail[:-1][ok])
    rho = float(np.exp(-logs.mean()))
    return rho if math.isfinite(rho) and rho > 0 else 1.0


# ---------------------------------------------------------------------------
# linear algebra


def _lu(A: np.ndarray):
    """In-place style LU with partial pivoting; returns (LU, perm, pivots)."""
    LU = A.copy()
    n = LU.shape[0]
    perm = np.arange(n)
    pivots = np.zeros(n, dtype=real_dtype(precision_of(LU)))
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        piv = LU[k, k]
        pivots[k] = abs(piv)
        if piv == 0:
            continue
        LU[k + 1 :, k] /= piv
        LU[k + 1 :, k + 1 :] -= np.outer(LU[k + 1 :, k], LU[k, k + 1 :])
    return LU, perm, pivots


def _lu_solve(LU: np.ndarray, perm: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = LU.shape[0]
    y = rhs[perm].copy()
    for i in range(1, n):
        y[i] -= LU[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - LU[i, i + 1 :] @ y[i + 1 :]) / LU[i, i]
    return y


def _toeplitz(c: np.ndarray, L: int, M: int):
    idx = L + np.arange(M)[:, None] - np.arange(M)[None, :]
    T = np.where(idx >= 0, c[np.clip(idx, 0, None)], 0).astype(c.dtype)
    rhs = -c[L + 1 : L + M + 1]
    return T, rhs


def _numerator(c: np.ndarray, b: np.ndarray, L: int) -> np.ndarray:
    M = b.size - 1
    a = np.zeros(L + 1, dtype=c.dtype)
    for k in range(L + 1):
        j = np.arange(min(k, M) + 1)
        a[k] = b[j] @ c[k - j]
    return a


def _numerical_rank(T: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(T.astype(np.complex128), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    cut = max(tol, T.shape[0] * np.finfo(np.float64).eps) * s[0]
    return int(np.sum(s > cut))


def _refined_solve(T, rhs, LU, perm, iters: int, report: dict) -> np.ndarray:
    x = _lu_solve(LU, perm, rhs)
    residuals = []
    for _ in range(iters):
        r = rhs - T @ x
        residuals.append(float(np.abs(r).max()))
        x = x + _lu_solve(LU, perm, r)
    report["refinement_residuals"] = residuals
    b = np.empty(T.shape[0] + 1, dtype=T.dtype)
    b[0] = 1
    b[1:] = x
    return b


def _solve_denominator(c, L, M, opts: SolveOptions, report: dict):
    """Denominator b (length M+1), or None when the system is rank deficient."""
    T, rhs = _toeplitz(c, L, M)
    with np.errstate(all="ignore"):  # judged by the pivot ratios below
        LU, perm, pivots = _lu(T)
    row_norm = np.abs(T).max(axis=1)[perm]
    ratios = np.where(row_norm > 0, pivots / np.where(row_norm > 0, row_norm, 1), 0)
    min_ratio = float(ratios.min())
    report["min_pivot_ratio"] = min_ratio
    factors = (T, rhs, LU, perm, pivots)
    if min_ratio < opts.residual_tol:
        return None, factors
    with np.errstate(all="ignore"):
        b = _refined_solve(T, rhs, LU, perm, opts.refinement_iters, report)
    return b, factors


def _min_norm(T, rhs, M, dtype, tol):
    x, *_ = np.linalg.lstsq(
        T.astype(np.complex128), rhs.astype(np.complex128), rcond=M * np.finfo(np.float64).eps
    )
    b = np.empty(M + 1, dtype=dtype)
    b[0] = 1
    b[1:] = x
    return b


def _defect_agreement(c, a, b, tol) -> int:
    """Stepwise long-division agreement; see :func:`agreement_order_check`."""
    L, M = a.size - 1, b.size - 1
    for n in range(c.size):
        j = np.arange(min(n, M) + 1)
        q = b[j] @ c[n - j]
        an = a[n] if n <= L else 0
        if not abs(an - q) <= tol * max(1.0, float(abs(c[n]))):
            return n
    return c.size


def _max_defect(c, a, b) -> float:
    L, M = a.size - 1, b.size - 1
    worst = 0.0
    for n in range(c.size):
        j = np.arange(min(n, M) + 1)
        an = a[n] if n <= L else 0
        worst = max(worst, float(abs(an - b[j] @ c[n - j])) / max(1.0, float(abs(c[n]))))
    return worst


def _pad(arr, n, dtype):
    out = np.zeros(n, dtype=dtype)
    out[: arr.size] = arr
    return out


def _solve_scaled(c, L, M, opts, report, depth=0):
    if M == 0:
        return c[: L + 1].copy(), np.ones(1, dtype=c.dtype)
    b, (T, rhs, LU, perm, pivots) = _solve_denominator(c, L, M, opts, report)
    if b is not None:
        return _numerator(c, b, L), b
    rank = _numerical_rank(T, opts.residual_tol)
    rank = min(rank, M - 1)
    report["rank_deficient"] = True
    report["estimated_rank"] = rank
    if opts.degenerate is DegeneratePolicy.ERROR:
        raise SolveError(
            f"Toeplitz matrix of [{L}|{M}] is rank deficient (estimated rank {rank} of {M})",
            rank,
            f"reduce M to {rank} or below",
        )
    if opts.degenerate is DegeneratePolicy.MIN_NORM:
        b = _min_norm(T, rhs, M, c.dtype, opts.residual_tol)
        return _numerator(c, b, L), b
    need = L + M + 1
    # Fast-growing exact inputs push genuine singular values below the
    # threshold, so a few ranks above the estimate are tried as well.  With
    # a relative tolerance a too-small denominator can still verify on such
    # inputs (Fibonacci data satisfies c_n ~ phi c_{n-1}), so the candidate
    # with the smallest defect wins, ties going to the lower rank.
    found = []
    for r in range(rank, min(rank + 4, M)):
        d = M - r
        for L2, M2 in ((max(L - d, 0), r), (L, r)):
            sub = {}
            try:
                a2, b2 = _solve_scaled(c, L2, M2, opts, sub, depth + 1)
            except SolveError:
                continue
            a2 = _pad(a2, L + 1, c.dtype)
            b2 = _pad(b2, M + 1, c.dtype)
            if _defect_agreement(c[:need], a2, b2, opts.residual_tol) >= need:
                reduced = sub.get("reduced_to") or [L2, M2]
                found.append((_max_defect(c[:need], a2, b2), reduced, a2, b2))
                break
    if found:
        best = min(f[0] for f in found)
        _, reduced, a2, b2 = next(f for f in found if f[0] <= 100 * best + 1e-300)
        report["reduced_to"] = reduced
        report["estimated_rank"] = reduced[1]
        return a2, b2
    # Small pivots without a lower-type explanation: the system is merely
    # ill conditioned.  Accept a full-degree solution if it verifies.
    candidates = []
    if np.all(pivots > 0):
        candidates.append(("lu", lambda: _refined_solve(T, rhs, LU, perm, opts.refinement_iters, report)))
    candidates.append(("min_norm", lambda: _min_norm(T, rhs, M, c.dtype, opts.residual_tol)))
    for name, make in candidates:
        with np.errstate(all="ignore"):
            b = make()
            a = _numerator(c, b, L)
        if _defect_agreement(c[:need], a, b, opts.residual_tol) >= need:
            report["fallback"] = name
            return a, b
    raise SolveError(
        f"Toeplitz matrix of [{L}|{M}] is rank deficient (estimated rank {rank} of {M}) "
        "and no reduced approximant reproduces the series",
        rank,
        f"reduce M to {rank} or below, or use the MIN_NORM policy",
    )


def solve_pade(
    coeffs: CoefficientVector, L: int, M: int, opts: Optional[SolveOptions] = None
) -> RationalApproximant:
    """[L|M] Padé approximant of the series ``coeffs``.

    The returned approximant is normalized so that b_0 = 1 and is verified to
    reproduce c_0..c_{L+M} to ``opts.residual_tol`` (relative to
    ``max(1, |c_n|)``) in the scaled variable.  With scaling enabled the
    coefficients are stored in the scaled variable and ``scale`` records rho.

    Raises
    ------
    SolveError
        Rank-deficient Toeplitz matrix (depending on ``opts.degenerate``), or
        a solution that fails the order check.
    """
    opts = opts or SolveOptions()
    L, M = int(L), int(M)
    if L < 0 or M < 0:
        raise ValueError("degrees must be >= 0")
    c = coeffs.coeffs
    if L + M > c.size - 1:
        raise ValueError(f"[{L}|{M}] needs {L + M + 1} coefficients, have {c.size}")
    if not np.all(np.isfinite(c.astype(np.complex128))):
        raise ValueError("coefficients must be finite")
    if opts.scaling is Scaling.AUTO:
        rho = auto_scale(c[: L + M + 1])
    elif opts.scaling is Scaling.EXPLICIT:
        rho = float(opts.rho)
    else:
        rho = 1.0
    cs = scale_series(coeffs, rho).coeffs[: L + M + 1]
    report: dict = {
        "precision": coeffs.precision,
        "residual_tol": opts.residual_tol,
        "degenerate_policy": opts.degenerate.value,
        "scaling": opts.scaling.value,
        "min_pivot_ratio": None,
        "rank_deficient": False,
        "estimated_rank": M,
        "refinement_residuals": [],
        "reduced_to": None,
        "fallback": None,
    }
    a, b = _solve_scaled(cs, L, M, opts, report)
    if report["reduced_to"] is not None:
        report["estimated_rank"] = report["reduced_to"][1]
    if not (np.all(np.isfinite(a.astype(np.complex128))) and np.all(np.isfinite(b.astype(np.complex128)))):
        raise SolveError(f"[{L}|{M}] solve produced non-finite coefficients", report["estimated_rank"])
    k = _defect_agreement(cs, a, b, opts.residual_tol)
    report["agreement_order"] = k
    if k < L + M + 1:
        raise SolveError(
            f"[{L}|{M}] solution matches only {k} of {L + M + 1} coefficients",
            report["estimated_rank"],
            "lower the order or enable scaling",
        )
    return RationalApproximant(a, b, L, M, rho, report)


# ---------------------------------------------------------------------------
# evaluation and verification


def evaluate(approximant: RationalApproximant, z):
    """P(z/rho)/Q(z/rho) by Horner's rule, with reversed polynomials for |z/rho| > 1.

    Raises :class:`PoleProximityError` when Q underflows at ``z``.
    """
    dtype = approximant.numerator.dtype
    scalar = np.ndim(z) == 0
    w = np.atleast_1d(np.asarray(z)).astype(dtype) / real_dtype(approximant.precision)(approximant.scale)
    P, Q = approximant.numerator, approximant.denominator
    L, M = approximant.L, approximant.M
    big = np.abs(w) > 1
    out = np.empty(w.shape, dtype=dtype)
    qabs = np.empty(w.shape, dtype=real_dtype(approximant.precision))
    qref = np.empty_like(qabs)
    tiny = np.finfo(qabs.dtype).tiny
    if (~big).any():
        ws = w[~big]
        q = horner(Q, ws)
        qabs[~big] = np.abs(q)
        qref[~big] = horner(np.abs(Q), np.abs(ws))
        with np.errstate(all="ignore"):
            out[~big] = horner(P, ws) / q
    if big.any():
        u = 1 / w[big]
        q = horner(Q[::-1], u)
        qabs[big] = np.abs(q)
        qref[big] = horner(np.abs(Q[::-1]), np.abs(u))
        with np.errstate(all="ignore"):
            out[big] = horner(P[::-1], u) / q * w[big] ** (L - M)
    bad = qabs <= tiny * qref
    if bad.any():
        raise PoleProximityError(float(qabs[bad].min()))
    if scalar:
        return out[0]
    return out.reshape(np.shape(z))


def agreement_order_check(
    approximant: RationalApproximant, coeffs: CoefficientVector, residual_tol: Optional[float] = None
) -> int:
    """Number of leading Taylor coefficients of P/Q that match ``coeffs``.

    The re-expansion t_n of P/Q is produced by power-series long division,
    t_n = a_n - sum_{j>=1} b_j t_{n-j}.  While the prefix matches, the
    already-verified c_{n-j} stand in for t_{n-j}, so each step compares
    a_n against sum_j b_j c_{n-j}.  This keeps the check free of the
    exponential error growth that raw long division suffers when the
    approximant has poles inside the unit disk.

    Comparison happens in the approximant's own (scaled) variable with
    tolerance ``residual_tol * max(1, |c_n|)``.
    """
    if residual_tol is None:
        residual_tol = approximant.condition_report.get("residual_tol", SolveOptions.residual_tol)
    c = scale_series(coeffs, approximant.scale).coeffs if approximant.scale != 1 else coeffs.coeffs
    dtype = np.result_type(c.dtype, approximant.numerator.dtype)
    return _defect_agreement(
        c.astype(dtype), approximant.numerator.astype(dtype), approximant.denominator.astype(dtype), float(residual_tol)
    )


# ---------------------------------------------------------------------------
# exact oracles


class OracleFamily(str, enum.Enum):
    EXP = "EXP"
    FIB_GENERATING = "FIB_GENERATING"
    JACOBI = "JACOBI"
    FIB_LACUNARY = "FIB_LACUNARY"


def _poly_mul(p: list, q: list) -> list:
    out = [0] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        if x:
            for j, y in enumerate(q):
                out[i + j] += x * y
    return out


def _monomial(e: int, coef=1) -> list:
    out = [0] * (e + 1)
    out[e] = coef
    return out


def _poly_add(*polys) -> list:
    n = max(len(p) for p in polys)
    out = [0] * n
    for p in polys:
        for i, x in enumerate(p):
            out[i] += x
    return out


def _trim(p: list) -> list:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def fib_lacunary_numerator_transcribed(N: int) -> list[int]:
    """The bracketed closed form for the Fibonacci-lacunary numerator.

    S_L = sum_{k=0..L} f_k and f_k = z^{F_k} with F_k = 0 for k < 0, read as

        S_{N-4} + (S_{N-8} + z)(f_{N-4} - f_{N-2})
                + (2 f_{N-3} + 2 f_{N-2} + f_{N-3} f_{N-6}).

    Kept for comparison only; :func:`exact_pade_fractions` derives the
    numerator from the series itself.
    """
    F = lambda k: _fib(k) if k >= 0 else 0  # noqa: E731
    f = lambda k: _monomial(F(k))  # noqa: E731

    def S(L):
        return _poly_add([0], *(f(k) for k in range(L + 1))) if L >= 0 else [0]

    diff = _poly_add(f(N - 4), [-x for x in f(N - 2)])
    term2 = _poly_mul(_poly_add(S(N - 8), _monomial(1)), diff)
    term3 = _poly_add(
        [2 * x for x in f(N - 3)], [2 * x for x in f(N - 2)], _poly_mul(f(N - 3), f(N - 6))
    )
    return _trim(_poly_add(S(N - 4), term2, term3))


def _lacunary_series(exponents, n: int) -> list[int]:
    c = [0] * (n + 1)
    for e in exponents:
        if e <= n:
            c[e] += 1
    return c


def exact_pade_fractions(family, *, M: Optional[int] = None, N: Optional[int] = None):
    """Exact (numerator, denominator, metadata) as lists of ints/Fractions."""
    family = OracleFamily(family)
    meta: dict = {"family": family.value}
    if family is OracleFamily.EXP:
        if M is None or M < 1:
            raise ValueError("EXP oracle needs M >= 1")
        f2m = math.factorial(2 * M)
        q = [
            Fraction(math.factorial(2 * M - k) * math.factorial(M), f2m * math.factorial(k) * math.factorial(M - k))
            for k in range(M + 1)
        ]
        p = [(-1) ** k * x for k, x in enumerate(q)]
        return p, q, meta
    if family is OracleFamily.FIB_GENERATING:
        if N is None or N < 2 or N % 2:
            raise ValueError("FIB_GENERATING oracle needs an even truncation order N >= 2")
        h = N // 2
        if h == 1:
            # a [1|1] table entry cannot hold the quadratic denominator
            meta["note"] = "[1|1] entry is z/(1-z)"
            return [0, 1], [1, -1], meta
        return _pad_list([0, 1], h + 1), _pad_list([1, -1, -1], h + 1), meta
    if family is OracleFamily.JACOBI:
        if N is None or N < 2:
            raise ValueError("JACOBI oracle needs N >= 2")
        H = 1 << (N - 1)
        q = _poly_add(_monomial(0), *(_monomial(1 << k) for k in range(N - 1)), _monomial(H, -1))
        H_ = lambda n: 1 << (n - 1)  # noqa: E731
        p = _poly_add(_monomial(1), _monomial(2, 2))
        for n in range(2, N):
            inner = _poly_add(_monomial(1), _monomial(2), *(_monomial(H_(k + 2)) for k in range(1, n - 1)))
            p = _poly_add(p, [2 * x for x in _poly_mul(_monomial(H_(n)), inner)])
        return _pad_list(p, H + 1), _pad_list(q, H + 1), meta
    if family is OracleFamily.FIB_LACUNARY:
        if N is None or N < 6 or _fib(N) % 2:
            raise ValueError(
                f"FIB_LACUNARY oracle needs N >= 6 with F_N even (N divisible by 3); "
                f"nearest valid: {_nearest_fib_even(N if N is not None else 6)}"
            )
        H = _fib(N) // 2
        q = _poly_add(_monomial(0), _monomial(_fib(N - 4)), _monomial(_fib(N - 2), -1))
        q = _pad_list(_trim(q), H + 1)
        c = _lacunary_series((_fib(k) for k in range(N + 2)), H)
        p = _poly_mul(q, c)[: H + 1]
        transcribed = fib_lacunary_numerator_transcribed(N)
        meta["repeated_exponents"] = "additive"
        meta["transcribed_numerator_matches"] = _trim(p) == transcribed
        return p, q, meta
    raise ValueError(f"unknown oracle family {family}")


def _nearest_fib_even(N: int) -> list[int]:
    N = max(int(N), 6)
    lo = N - N % 3
    cands = sorted({max(lo, 6), lo + 3})
    return cands


def _pad_list(p, n):
    return list(p) + [0] * (n - len(p))


def exact_pade_oracle(
    family, *, M: Optional[int] = None, N: Optional[int] = None, precision: str = "double"
) -> RationalApproximant:
    """Closed-form diagonal Padé approximants.

    - ``EXP`` (``M``): [M|M] of e^{-z} from the factorial formula.
    - ``FIB_GENERATING`` (even ``N``): [N/2|N/2] of z/(1-z-z^2).
    - ``JACOBI`` (``N``): [2^{N-1}|2^{N-1}] of sum_{n>=0} z^{2^n}.
    - ``FIB_LACUNARY`` (``N`` with F_N even): [F_N/2|F_N/2] of sum z^{F_n}.
    """
    p, q, meta = exact_pade_fractions(family, M=M, N=N)
    a = exact_to_array(p, precision)
    b = exact_to_array(q, precision)
    return RationalApproximant(a, b, len(p) - 1, len(q) - 1, 1.0, {"oracle": meta, "precision": precision})


# ---------------------------------------------------------------------------
# JSON file format


def approximant_to_dict(approximant: RationalApproximant) -> dict:
    return {
        "L": approximant.L,
        "M": approximant.M,
        "scale": num(approximant.scale),
        "precision": approximant.precision,
        "numerator": [complex_record(x) for x in approximant.numerator],
        "denominator": [complex_record(x) for x in approximant.denominator],
        "condition_report": _report_json(dict(approximant.condition_report)),
    }


def _report_json(v):
    if isinstance(v, Mapping):
        return {str(k): _report_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_report_json(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def approximant_from_dict(d: Mapping) -> RationalApproximant:
    precision = d.get("precision", "double")
    a = np.array([complex_from_record(x, precision) for x in d["numerator"]], dtype=complex_dtype(precision))
    b = np.array([complex_from_record(x, precision) for x in d["denominator"]], dtype=complex_dtype(precision))
    return RationalApproximant(
        a, b, int(d["L"]), int(d["M"]), float(d["scale"]), _report_floats(d.get("condition_report", {}))
    )


def _report_floats(v):
    if isinstance(v, dict):
        return {k: _report_floats(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_report_floats(x) for x in v]
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def write_approximant(approximant: RationalApproximant, path) -> Path:
    path = Path(path)
    path.write_text(dumps_json(approximant_to_dict(approximant)))
    return path


def read_approximant(path) -> RationalApproximant:
    return approximant_from_dict(loads_json(Path(path).read_text()))
