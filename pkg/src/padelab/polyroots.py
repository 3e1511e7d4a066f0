"""All complex roots of a polynomial with per-root backward error.

The workhorse is Aberth-Ehrlich simultaneous iteration started from the
Newton polygon of the coefficient moduli; for degree <= 30 a companion-matrix
eigensolve is used when the iteration fails to converge.  Evaluation at
points outside the unit disk goes through the reversed polynomial so that
high degrees do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._numeric import fmt_real

__all__ = [
    "Polynomial",
    "RootSet",
    "RefinedRoot",
    "roots",
    "refine_root",
    "backward_error",
    "write_rootset",
]

DEFLATION_TOL = 1e-13
CLUSTER_TOL = 1e-6
CERT_TOL = 1e-12
MAX_SWEEPS = 200
COMPANION_MAX_DEGREE = 30

FLAG_CLUSTER = "cluster"
FLAG_UNCONVERGED = "unconverged"
FLAG_UNCERTIFIED = "uncertified"


@dataclass(frozen=True, eq=False)
class Polynomial:
    """sum_k coeffs[k] z^k.

    ``effective_degree`` ignores leading coefficients with
    |c_k| <= deflation_tol * max|c|, and ``low_order`` counts the
    equally negligible trailing coefficients (roots at the origin).
    """

    coeffs: np.ndarray
    deflation_tol: float = DEFLATION_TOL

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def _significant(self) -> np.ndarray:
        a = np.abs(self.coeffs)
        top = a.max() if a.size else 0.0
        return np.nonzero(a > self.deflation_tol * top)[0] if top > 0 else np.array([], dtype=int)

    @property
    def effective_degree(self) -> int:
        sig = self._significant()
        return int(sig[-1]) if sig.size else -1

    @property
    def low_order(self) -> int:
        sig = self._significant()
        return int(sig[0]) if sig.size else 0

    def __call__(self, z):
        return _horner(self.coeffs, z)


@dataclass(frozen=True, eq=False)
class RootSet:
    """Finite nonzero roots plus counts of roots deflated at 0 and at infinity.

    ``all_roots`` appends the roots at the origin; its length is the
    polynomial's effective degree.
    """

    roots: np.ndarray
    backward_errors: np.ndarray
    multiplicity_flags: tuple
    zero_count: int = 0
    infinite_count: int = 0
    iterations: int = 0
    method: str = "aberth"
    cert_tol: float = CERT_TOL

    def __post_init__(self):
        for name in ("roots", "backward_errors"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "multiplicity_flags", tuple(tuple(f) for f in self.multiplicity_flags))

    def __len__(self) -> int:
        return self.roots.size

    @property
    def all_roots(self) -> np.ndarray:
        return np.concatenate([self.roots, np.zeros(self.zero_count, dtype=complex)])

    @property
    def all_backward_errors(self) -> np.ndarray:
        return np.concatenate([self.backward_errors, np.zeros(self.zero_count)])

    @property
    def all_flags(self) -> tuple:
        extra = (FLAG_CLUSTER,) if self.zero_count > 1 else ()
        return self.multiplicity_flags + (extra,) * self.zero_count

    @property
    def certified(self) -> np.ndarray:
        return self.backward_errors <= self.cert_tol

    @property
    def cluster(self) -> np.ndarray:
        return np.array([FLAG_CLUSTER in f for f in self.multiplicity_flags], dtype=bool)


@dataclass(frozen=True)
class RefinedRoot:
    value: complex
    backward_error: float
    iterations: int
    flagged: bool = False


def _horner(c: np.ndarray, z):
    acc = np.zeros(np.shape(z), dtype=np.complex128)
    for x in c[::-1]:
        acc = acc * z + x
    return acc


def _horner_d(c: np.ndarray, z):
    """p(z) and p'(z)."""
    p = np.zeros(np.shape(z), dtype=np.complex128)
    dp = np.zeros_like(p)
    for x in c[::-1]:
        dp = dp * z + p
        p = p * z + x
    return p, dp


def backward_error(c: np.ndarray, z) -> np.ndarray:
    """|p(z)| / sum |c_k| |z|^k, evaluated stably for large |z|."""
    c = np.asarray(c, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    a = np.abs(c)
    out = np.empty(z.shape)
    big = np.abs(z) > 1
    with np.errstate(all="ignore"):
        if (~big).any():
            zs = z[~big]
            out[~big] = np.abs(_horner(c, zs)) / _horner(a, np.abs(zs)).real
        if big.any():
            u = 1 / z[big]
            out[big] = np.abs(_horner(c[::-1], u)) / _horner(a[::-1], np.abs(u)).real
    return np.where(np.isfinite(out), out, np.inf)


def _newton_ratio(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p(z)/p'(z), using the reversed polynomial where |z| > 1."""
    d = c.size - 1
    out = np.empty(z.shape, dtype=np.complex128)
    big = np.abs(z) > 1
    with np.errstate(all="ignore"):
        if (~big).any():
            p, dp = _horner_d(c, z[~big])
            out[~big] = p / dp
        if big.any():
            zb = z[big]
            u = 1 / zb
            r, dr = _horner_d(c[::-1], u)
            # p(z) = z^d r(1/z)  =>  p'/p = d/z - r'(u)/(r(u) z^2)
            out[big] = 1 / (d / zb - dr / r * u * u)
    return out


def _initial_points(c: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of log|c_k|.

    A single circle of Cauchy-bound radius converges only linearly when the
    root moduli are spread over many decades; the polygon gives one circle
    per cluster of moduli (Bini's initialization).  For polynomials whose
    roots share a modulus scale this reduces to a single circle.
    """
    d = c.size - 1
    a = np.abs(c)
    k = np.nonzero(a > 0)[0]
    y = np.log(a[k])
    hull = []
    for i in range(k.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 if it lies on or below the segment i0 -> i
            if (y[i1] - y[i0]) * (k[i] - k[i0]) <= (y[i] - y[i0]) * (k[i1] - k[i0]):
                hull.pop()
            else:
                break
        hull.append(i)
    pts = []
    # the offset keeps the starting circles off the symmetry axes of real polynomials
    for i0, i1 in zip(hull[:-1], hull[1:]):
        n = int(k[i1] - k[i0])
        r = np.exp((y[i0] - y[i1]) / n)
        theta = 2 * np.pi * np.arange(n) / n + 2 * np.pi * len(pts) / d + 0.4
        pts.extend(r * np.exp(1j * theta))
    return np.array(pts, dtype=np.complex128)


def _aberth(c: np.ndarray, max_sweeps: int):
    d = c.size - 1
    z = _initial_points(c)
    active = np.ones(d, dtype=bool)
    eps = np.finfo(float).eps
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        idx = np.nonzero(active)[0]
        ratio = _newton_ratio(c, z[idx])
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1
        inv = 1 / diff
        inv[np.arange(idx.size), idx] = 0
        s = inv.sum(axis=1)
        w = ratio / (1 - ratio * s)
        bad = ~np.isfinite(w)
        w[bad] = 0
        z[idx] = z[idx] - w
        done = (np.abs(w) <= 4 * eps * np.abs(z[idx])) | (backward_error(c, z[idx]) <= 4 * eps)
        active[idx[done & ~bad]] = False
        if not active.any():
            break
    return z, ~active, sweeps


def refine_root(p: Polynomial, approx: complex, max_iter: int = 50) -> RefinedRoot:
    """Newton iteration from ``approx``.

    Stops when |step| <= 1e-15 (1 + |z|) or after ``max_iter`` steps and
    returns the iterate with the smallest backward error seen, so the result
    is never worse than the starting point.  A vanishing derivative flags
    the result.
    """
    c = p.coeffs
    z = complex(approx)
    if not np.isfinite(z):
        raise ValueError("starting point must be finite")
    best, best_be = z, float(backward_error(c, np.array([z]))[0])
    flagged = False
    it = 0
    for it in range(1, max_iter + 1):
        ratio = complex(_newton_ratio(c, np.array([z]))[0])
        if not np.isfinite(ratio):
            flagged = best_be > 0
            break
        z = z - ratio
        be = float(backward_error(c, np.array([z]))[0])
        if be < best_be:
            best, best_be = z, be
        if abs(ratio) <= 1e-15 * (1 + abs(z)):
            break
    return RefinedRoot(best, best_be, it, flagged)


def _cluster_flags(z: np.ndarray, tol: float = CLUSTER_TOL) -> np.ndarray:
    if z.size < 2:
        return np.zeros(z.size, dtype=bool)
    dist = np.abs(z[:, None] - z[None, :])
    scale = np.maximum(np.abs(z)[:, None], np.abs(z)[None, :])
    close = dist <= tol * scale
    np.fill_diagonal(close, False)
    return close.any(axis=1)


def roots(p, *, max_sweeps: int = MAX_SWEEPS, cert_tol: float = CERT_TOL) -> RootSet:
    """Roots of ``p`` (a :class:`Polynomial` or ascending coefficient array)."""
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    deg = p.effective_degree
    if deg < 0:
        raise ValueError("zero polynomial has no well-defined roots")
    lo = p.low_order
    inf_count = p.degree - deg
    core = p.coeffs[lo : deg + 1]
    d = core.size - 1
    method = "aberth"
    sweeps = 0
    if d == 0:
        z = np.zeros(0, dtype=complex)
        converged = np.zeros(0, dtype=bool)
    elif d == 1:
        z = np.array([-core[0] / core[1]])
        converged = np.ones(1, dtype=bool)
        method = "linear"
    else:
        z, converged, sweeps = _aberth(core, max_sweeps)
        if not converged.all() and d <= COMPANION_MAX_DEGREE:
            z = np.roots(core[::-1]).astype(complex)
            converged = np.ones(d, dtype=bool)
            method = "companion"
        # one Newton polish per root; never accepted if it makes things worse
        poly = Polynomial(core, p.deflation_tol)
        z = np.array([refine_root(poly, x, max_iter=3).value for x in z])
    be = backward_error(core, z) if d else np.zeros(0)
    cl = _cluster_flags(z)
    flags = []
    for i in range(z.size):
        f = []
        if cl[i]:
            f.append(FLAG_CLUSTER)
        if not converged[i]:
            f.append(FLAG_UNCONVERGED)
        if be[i] > cert_tol:
            f.append(FLAG_UNCERTIFIED)
        flags.append(tuple(f))
    order = np.lexsort((np.abs(z), np.angle(z))) if z.size else np.zeros(0, dtype=int)
    return RootSet(
        z[order],
        be[order],
        tuple(flags[i] for i in order),
        zero_count=lo,
        infinite_count=inf_count,
        iterations=sweeps,
        method=method,
        cert_tol=cert_tol,
    )


def write_rootset(rs: RootSet, path) -> Path:
    """CSV ``re,im,backward_error,flags`` (roots at the origin included)."""
    path = Path(path)
    lines = ["re,im,backward_error,flags"]
    for z, be, f in zip(rs.all_roots, rs.all_backward_errors, rs.all_flags):
        lines.append(f"{fmt_real(z.real)},{fmt_real(z.imag)},{fmt_real(be)},{'|'.join(f)}")
    path.write_text("\n".join(lines) + "\n")
    return path
