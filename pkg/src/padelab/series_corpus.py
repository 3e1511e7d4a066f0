"""Truncated Taylor coefficient sequences for the test-function corpus.

Analytic families are generated in exact arithmetic (``fractions.Fraction``,
or ``decimal`` at 40 digits where an irrational constant appears) and
rounded once to the working precision, so every coefficient is correctly
rounded and platform independent.

Random families draw from numpy's PCG64 bit generator seeded with the
user's 64-bit integer; ``Generator.random`` maps 53-bit integers onto
[0, 1).  Both are documented, stable algorithms, so a given
``(seed, spec)`` gives bit-identical coefficients on every platform.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ._numeric import (
    complex_dtype,
    dumps_json,
    exact_to_array,
    fmt_real,
    horner,
    loads_json,
    parse_real,
    precision_of,
    real_dtype,
)

__all__ = [
    "Family",
    "NoiseDistribution",
    "NoiseSpec",
    "SeriesSpec",
    "CoefficientVector",
    "ConfigurationError",
    "taylor_coefficients",
    "recursion_series",
    "inject_noise",
    "carleman_series",
    "evaluate_polar",
    "closed_form",
    "write_coefficients",
    "read_coefficients",
]


class ConfigurationError(ValueError):
    """Unsupported family or invalid family parameters."""


class Family(str, enum.Enum):
    F1_LOG = "F1_LOG"
    F2_EXP = "F2_EXP"
    F3_SQRT_BRANCH = "F3_SQRT_BRANCH"
    F4_ESSENTIAL = "F4_ESSENTIAL"
    F5_TAN4 = "F5_TAN4"
    FIB_GENERATING = "FIB_GENERATING"
    JACOBI_LACUNARY = "JACOBI_LACUNARY"
    WEIERSTRASS_LACUNARY = "WEIERSTRASS_LACUNARY"
    KRONECKER_LACUNARY = "KRONECKER_LACUNARY"
    FIB_LACUNARY = "FIB_LACUNARY"
    POLE2 = "POLE2"
    BRANCH1 = "BRANCH1"
    BRANCH2 = "BRANCH2"
    RANDOM_UNIFORM = "RANDOM_UNIFORM"
    CARLEMAN = "CARLEMAN"
    RECURSION = "RECURSION"


class NoiseDistribution(str, enum.Enum):
    UNIFORM_0_1 = "UNIFORM_0_1"  # r_n in [0, 1]
    UNIFORM_SYM = "UNIFORM_SYM"  # eps_n in [-eps, eps]


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float
    seed: int
    distribution: NoiseDistribution = NoiseDistribution.UNIFORM_SYM

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigurationError(f"noise strength must be >= 0, got {self.epsilon}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "distribution", NoiseDistribution(self.distribution))

    def to_dict(self) -> dict:
        return {
            "epsilon": float(self.epsilon),
            "seed": int(self.seed),
            "distribution": self.distribution.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoiseSpec":
        return cls(float(d["epsilon"]), int(d["seed"]), NoiseDistribution(d["distribution"]))


@dataclass(frozen=True)
class SeriesSpec:
    """Which function a coefficient vector came from.

    ``params`` holds family-specific values (see :func:`taylor_coefficients`).
    """

    family: Family
    params: Mapping[str, Any] = field(default_factory=dict)
    noise: Optional[NoiseSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "params": _jsonable(dict(self.params)),
            "noise": None if self.noise is None else self.noise.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SeriesSpec":
        noise = d.get("noise")
        params = {k: _unjson(v) for k, v in dict(d.get("params", {})).items()}
        return cls(Family(d["family"]), params, None if noise is None else NoiseSpec.from_dict(noise))


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Coefficients c_0..c_N of a truncated power series (index = power of z)."""

    coeffs: np.ndarray
    spec: SeriesSpec
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.coeffs)
        if arr.dtype not in (np.complex128, np.clongdouble):
            arr = arr.astype(np.complex128)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coefficients must be a non-empty 1-d array")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def precision(self) -> str:
        return precision_of(self.coeffs)

    def __len__(self) -> int:
        return self.coeffs.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientVector):
            return NotImplemented
        return (
            self.coeffs.dtype == other.coeffs.dtype
            and np.array_equal(self.coeffs, other.coeffs)
            and self.spec == other.spec
        )

    __hash__ = None


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, np.generic):
        return v.item()
    return v


def _unjson(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    if isinstance(v, list):
        return [_unjson(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# exact generators: each returns a list of N+1 exact values


def _fib(n: int) -> int:
    if n < 0:
        return 0
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def _binom_half(k: int) -> Fraction:
    """binomial(1/2, k)."""
    return Fraction((-1) ** (k + 1) * math.comb(2 * k, k), 4**k * (2 * k - 1))


def _binom_minus_half(k: int) -> Fraction:
    """binomial(-1/2, k)."""
    return Fraction((-1) ** k * math.comb(2 * k, k), 4**k)


def _sqrt_ratio(p: int, N: int) -> list[Fraction]:
    """Coefficients of sqrt((1 + z/p) / (1 + z)) without the leading constant."""
    u = [_binom_half(k) * Fraction(1, p) ** k for k in range(N + 1)]
    v = [_binom_minus_half(k) for k in range(N + 1)]
    return [sum(u[j] * v[n - j] for j in range(n + 1)) for n in range(N + 1)]


def _tan_coeffs(n: int) -> list[Fraction]:
    # tan' = 1 + tan^2
    t = [Fraction(0)] * (n + 1)
    for k in range(n):
        s = Fraction(1) if k == 0 else Fraction(0)
        s += sum(t[i] * t[k - i] for i in range(k + 1))
        t[k + 1] = s / (k + 1)
    return t


def _lacunary(exponents, N: int) -> tuple[list[int], dict]:
    c = [0] * (N + 1)
    for e in exponents:
        if e <= N:
            c[e] += 1
    repeated = {str(i): v for i, v in enumerate(c) if v > 1}
    return c, repeated


def _exponents_power_base(base: int, N: int):
    e = 1
    while e <= N:
        yield e
        e *= base


def _exponents_factorial(N: int):
    n = 0
    while math.factorial(n) <= N:
        yield math.factorial(n)
        n += 1


def _exponents_square(N: int):
    n = 0
    while n * n <= N:
        yield n * n
        n += 1


def _exponents_fib(N: int):
    n = 0
    while _fib(n) <= N:
        yield _fib(n)
        n += 1


def _decimal_const(fn) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 40
        return +fn()


def _exact_family(family: Family, params: Mapping, N: int) -> tuple[list, dict]:
    meta: dict = {}
    if family is Family.F1_LOG:
        return [Fraction((-1) ** n, n + 1) for n in range(N + 1)], meta
    if family is Family.F2_EXP:
        return [Fraction((-1) ** n, math.factorial(n)) for n in range(N + 1)], meta
    if family is Family.F3_SQRT_BRANCH:
        # (1+2z)^{1/2} (1+z)^{-1/2}
        u = [_binom_half(k) * 2**k for k in range(N + 1)]
        v = [_binom_minus_half(k) for k in range(N + 1)]
        return [sum(u[j] * v[n - j] for j in range(n + 1)) for n in range(N + 1)], meta
    if family is Family.F4_ESSENTIAL:
        # exp(-z/(1+z)) = sum_n (-1)^n z^n sum_{k=1}^n C(n-1, k-1)/k!
        out = [Fraction(1)]
        for n in range(1, N + 1):
            s = sum(math.comb(n - 1, k - 1) * (math.factorial(n) // math.factorial(k)) for k in range(1, n + 1))
            out.append(Fraction((-1) ** n * s, math.factorial(n)))
        return out, meta
    if family is Family.F5_TAN4:
        kappa = Fraction(params.get("kappa", 1))
        t = _tan_coeffs(N // 4 + 1)
        out = [Fraction(0)] * (N + 1)
        for m, v in enumerate(t):
            if 4 * m <= N:
                out[4 * m] = v * kappa**m
        return out, meta
    if family is Family.FIB_GENERATING:
        return [_fib(n) for n in range(N + 1)], meta
    if family is Family.JACOBI_LACUNARY:
        base = int(params.get("base", 2))
        if base < 2:
            raise ConfigurationError(f"lacunary base must be >= 2, got {base}")
        c, rep = _lacunary(_exponents_power_base(base, N), N)
        return c, meta
    if family is Family.WEIERSTRASS_LACUNARY:
        c, rep = _lacunary(_exponents_factorial(N), N)
        meta["repeated_exponents"] = "additive"
        meta["multiplicity"] = rep
        return c, meta
    if family is Family.KRONECKER_LACUNARY:
        c, _ = _lacunary(_exponents_square(N), N)
        return c, meta
    if family is Family.FIB_LACUNARY:
        c, rep = _lacunary(_exponents_fib(N), N)
        meta["repeated_exponents"] = "additive"
        meta["multiplicity"] = rep
        return c, meta
    if family is Family.POLE2:
        p = Fraction(params.get("pole", 2))
        if p == 0:
            raise ConfigurationError("POLE2 pole location must be nonzero")
        return [p ** (-n) for n in range(N + 1)], meta
    if family is Family.BRANCH1:
        # sqrt((3+z)/(1+z)) = sqrt(3) * sqrt((1+z/3)/(1+z))
        r3 = _decimal_const(lambda: Decimal(3).sqrt())
        rational = _sqrt_ratio(3, N)
        with localcontext() as ctx:
            ctx.prec = 40
            return [r3 * Decimal(q.numerator) / Decimal(q.denominator) for q in rational], meta
    if family is Family.BRANCH2:
        # log(6/5 - z) = log(6/5) - sum_{n>=1} (5/6)^n z^n / n
        const = _decimal_const(lambda: (Decimal(6) / Decimal(5)).ln())
        return [const] + [-Fraction(5, 6) ** n / n for n in range(1, N + 1)], meta
    if family is Family.RECURSION:
        keys = "abcdef"
        missing = [k for k in keys if k not in params]
        if missing:
            raise ConfigurationError(f"RECURSION needs parameters {missing}")
        return _recursion_exact(*(Fraction(params[k]) for k in keys), N), meta
    raise ConfigurationError(f"family {family.value} has no exact generator")


def _recursion_exact(a, b, c, d, e, f, N: int) -> list[Fraction]:
    if c == 0:
        raise ConfigurationError("recursion needs c != 0")
    out = [f / c]
    if N >= 1:
        out.append((e - b * out[0]) / c)
    if N >= 2:
        out.append((d - a * out[0] - b * out[1]) / c)
    for k in range(3, N + 1):
        out.append(-(b / c) * out[k - 1] - (a / c) * out[k - 2])
    return out[: N + 1]


# ---------------------------------------------------------------------------
# public operations


def taylor_coefficients(spec: SeriesSpec, N: int, precision: str = "double") -> CoefficientVector:
    """Taylor coefficients c_0..c_N of the function named by ``spec``.

    Family parameters (all optional unless stated):

    - ``F5_TAN4``: ``kappa`` -- coefficients of tan(kappa z^4), default 1.
    - ``JACOBI_LACUNARY``: ``base`` -- sum z^(base^n), default 2.
    - ``POLE2``: ``pole`` -- p/(p - z), default 2.
    - ``RANDOM_UNIFORM``: ``epsilon`` (1.0), ``seed`` (0), ``distribution``
      (``UNIFORM_0_1``).
    - ``CARLEMAN``: ``K`` (100), ``decay`` (1.0), ``seed`` (0).
    - ``RECURSION``: ``a`` .. ``f`` (required), see :func:`recursion_series`.

    Lacunary sums whose exponent sequence repeats a value (n! and F_n both
    start 1, 1) accumulate coefficients additively; the multiplicities are
    recorded in ``metadata``.

    When ``spec.noise`` is set the noise realization is added on top.
    """
    if int(N) != N or N < 1:
        raise ConfigurationError(f"order N must be an integer >= 1, got {N}")
    N = int(N)
    complex_dtype(precision)
    family = Family(spec.family)
    if family is Family.RANDOM_UNIFORM:
        noise = NoiseSpec(
            float(spec.params.get("epsilon", 1.0)),
            int(spec.params.get("seed", 0)),
            NoiseDistribution(spec.params.get("distribution", NoiseDistribution.UNIFORM_0_1)),
        )
        zeros = CoefficientVector(np.zeros(N + 1, dtype=complex_dtype(precision)), spec)
        base = replace(inject_noise(zeros, noise), spec=spec)
    elif family is Family.CARLEMAN:
        base = carleman_series(
            int(spec.params.get("K", 100)),
            float(spec.params.get("decay", 1.0)),
            int(spec.params.get("seed", 0)),
            N,
            precision=precision,
            phases=spec.params.get("phases"),
        )
        base = replace(base, spec=spec)
    else:
        exact, meta = _exact_family(family, spec.params, N)
        base = CoefficientVector(exact_to_array(exact, precision), replace(spec, noise=None), meta)
        if spec.noise is None:
            return base
    if spec.noise is not None:
        noisy = inject_noise(base, spec.noise)
        return replace(noisy, spec=spec)
    return base


def recursion_series(a, b, c, d, e, f, N: int, precision: str = "double") -> CoefficientVector:
    """Coefficients of (d z^2 + e z + f) / (a z^2 + b z + c).

    Starts from c a_0 = f, b a_0 + c a_1 = e, a a_0 + b a_1 + c a_2 = d and
    continues with a_k = -(b/c) a_{k-1} - (a/c) a_{k-2}.
    """
    if c == 0:
        raise ValueError("recursion needs c != 0")
    spec = SeriesSpec(Family.RECURSION, dict(a=a, b=b, c=c, d=d, e=e, f=f))
    return taylor_coefficients(spec, N, precision)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def inject_noise(base: CoefficientVector, noise: NoiseSpec) -> CoefficientVector:
    """Add i.i.d. real noise scaled by ``noise.epsilon`` to every coefficient."""
    spec = replace(base.spec, noise=noise)
    if noise.epsilon == 0:
        return CoefficientVector(base.coeffs, spec, base.metadata)
    u = _rng(noise.seed).random(base.coeffs.size)
    rdt = real_dtype(base.precision)
    eps = rdt(noise.epsilon)
    if noise.distribution is NoiseDistribution.UNIFORM_0_1:
        delta = eps * u.astype(rdt)
    else:
        delta = eps * (2 * u.astype(rdt) - 1)
    return CoefficientVector(base.coeffs + delta, spec, base.metadata)


def carleman_series(
    K: int = 100,
    decay: float = 1.0,
    seed: int = 0,
    N: int = 90,
    *,
    precision: str = "double",
    phases: Optional[Sequence[float]] = None,
) -> CoefficientVector:
    """c_n = 2 sum_k exp(-decay k) cos(2 pi X_k n), k = 1..K.

    The X_k are uniform on [0, 1) from ``seed`` unless ``phases`` is given.
    """
    if K < 1 or N < 1:
        raise ConfigurationError("carleman_series needs K >= 1 and N >= 1")
    rdt = real_dtype(precision)
    if phases is None:
        X = _rng(seed).random(K).astype(rdt)
    else:
        X = np.asarray(phases, dtype=rdt)
        if X.shape != (K,):
            raise ConfigurationError(f"expected {K} phases, got {X.shape}")
    k = np.arange(1, K + 1, dtype=rdt)
    weights = np.exp(-rdt(decay) * k)
    n = np.arange(N + 1, dtype=rdt)
    # reduce X_k n mod 1 first so the cosine argument stays small
    frac = np.mod(np.outer(n, X), 1)
    c = 2 * (np.cos(2 * rdt(np.pi) * frac) @ weights)
    spec = SeriesSpec(
        Family.CARLEMAN,
        {"K": K, "decay": decay, "seed": seed, **({"phases": [float(x) for x in X]} if phases is not None else {})},
    )
    return CoefficientVector(c.astype(complex_dtype(precision)), spec, {"phases": [float(x) for x in X]})


def evaluate_polar(coeffs: CoefficientVector, r: float, theta):
    """sum c_n (r e^{i theta})^n by Horner's rule; ``theta`` may be an array."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    z = r * np.exp(1j * np.asarray(theta, dtype=float))
    out = horner(coeffs.coeffs, z.astype(coeffs.coeffs.dtype))
    return complex(out) if np.ndim(out) == 0 else out


def closed_form(spec: SeriesSpec, z):
    """Closed-form value of the analytic test function (principal branches).

    Only the families with an elementary closed form are supported.
    """
    z = np.asarray(z, dtype=complex)
    fam = Family(spec.family)
    with np.errstate(divide="ignore", invalid="ignore"):
        if fam is Family.F1_LOG:
            # Kahan's log1p: numpy's complex log1p loses accuracy near 0
            u = 1 + z
            d = np.where(u == 1, 1, u - 1)
            return np.where(u == 1, 1.0, np.log(u) / d)
        if fam is Family.F2_EXP:
            return np.exp(-z)
        if fam is Family.F3_SQRT_BRANCH:
            return np.sqrt((1 + 2 * z) / (1 + z))
        if fam is Family.F4_ESSENTIAL:
            return np.exp(-z / (1 + z))
        if fam is Family.F5_TAN4:
            return np.tan(float(spec.params.get("kappa", 1)) * z**4)
        if fam is Family.FIB_GENERATING:
            return z / (1 - z - z**2)
        if fam is Family.POLE2:
            p = float(spec.params.get("pole", 2))
            return p / (p - z)
        if fam is Family.BRANCH1:
            return np.sqrt((3 + z) / (1 + z))
        if fam is Family.BRANCH2:
            return np.log(6 / 5 - z)
    raise ConfigurationError(f"no closed form for {fam.value}")


# ---------------------------------------------------------------------------
# file format: CSV ``n,re,im`` plus JSON sidecar


def write_coefficients(cv: CoefficientVector, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.json``; returns both paths."""
    stem = Path(path)
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    lines = ["n,re,im"]
    for n, c in enumerate(cv.coeffs):
        lines.append(f"{n},{fmt_real(c.real)},{fmt_real(c.imag)}")
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "spec": cv.spec.to_dict(),
        "seed": None if cv.spec.noise is None else cv.spec.noise.seed,
        "order": cv.order,
        "precision": cv.precision,
        "metadata": _jsonable(dict(cv.metadata)),
    }
    json_path.write_text(dumps_json(sidecar))
    return csv_path, json_path


def read_coefficients(path) -> CoefficientVector:
    """Read a coefficient CSV (and its sidecar when present)."""
    stem = Path(path)
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    sidecar = loads_json(json_path.read_text()) if json_path.exists() else None
    precision = sidecar.get("precision", "double") if sidecar else "double"
    rows = csv_path.read_text().strip().splitlines()
    if rows[0].strip() != "n,re,im":
        raise ValueError(f"{csv_path}: expected header 'n,re,im'")
    dtype = complex_dtype(precision)
    vals = []
    for i, row in enumerate(rows[1:]):
        n, re, im = row.split(",")
        if int(n) != i:
            raise ValueError(f"{csv_path}: row {i + 1} has index {n}")
        vals.append(dtype(parse_real(re, precision)) + dtype(parse_real(im, precision)) * dtype(1j))
    spec = SeriesSpec.from_dict(sidecar["spec"]) if sidecar else SeriesSpec(Family.RECURSION, {"source": str(csv_path)})
    meta = sidecar.get("metadata", {}) if sidecar else {"source": str(csv_path)}
    return CoefficientVector(np.array(vals, dtype=dtype), spec, meta)
