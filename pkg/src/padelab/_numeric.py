"""Precision policy, exact-to-float rounding and deterministic text formats."""

from __future__ import annotations

import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, Union

import numpy as np

ExactValue = Union[int, Fraction, Decimal]

PRECISIONS = {
    "double": np.complex128,
    "extended": np.clongdouble,
}

_DECIMAL_DIGITS = 40


def complex_dtype(precision: str) -> type:
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise ValueError(
            f"unknown precision {precision!r}; expected one of {sorted(PRECISIONS)}"
        ) from None


def real_dtype(precision: str) -> type:
    return np.float64 if complex_dtype(precision) is np.complex128 else np.longdouble


def precision_of(arr: np.ndarray) -> str:
    return "double" if arr.dtype == np.complex128 else "extended"


def to_real(x: ExactValue, precision: str = "double"):
    """Round an exact rational/decimal value to the working real type."""
    if real_dtype(precision) is np.float64:
        return float(x)
    if isinstance(x, Fraction):
        with localcontext() as ctx:
            ctx.prec = _DECIMAL_DIGITS
            x = Decimal(x.numerator) / Decimal(x.denominator)
    return np.longdouble(str(x))


def exact_to_array(values, precision: str = "double") -> np.ndarray:
    out = np.zeros(len(values), dtype=complex_dtype(precision))
    for i, v in enumerate(values):
        if v:
            out[i] = to_real(v, precision)
    return out


def fmt_real(x) -> str:
    """Decimal text for a real scalar.

    binary64 values use 17 significant digits (always round-trips); long
    doubles use numpy's shortest round-tripping representation.
    """
    if isinstance(x, np.longdouble):
        return np.format_float_scientific(x, unique=True, trim="-")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    text = f"{x:.17g}"
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def parse_real(text: str, precision: str = "double"):
    if real_dtype(precision) is np.float64:
        return float(text)
    return np.longdouble(text)


def complex_record(z) -> dict:
    return {"re": _Num(np.real(z)), "im": _Num(np.imag(z))}


def complex_from_record(obj: dict, precision: str = "double"):
    dtype = complex_dtype(precision)
    re = parse_real(str(obj["re"]), precision)
    im = parse_real(str(obj["im"]), precision)
    return dtype(re) + dtype(im) * dtype(1j)


class _Num:
    """Marks a real number for fixed-format JSON emission."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return fmt_real(self.value)


def num(x) -> _Num:
    return _Num(x)


def dumps_json(obj: Any, indent: int = 2) -> str:
    """Serialize with insertion-ordered keys and fixed float formatting."""
    return _dump(obj, indent, 0) + "\n"


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, _Num):
        return fmt_real(obj.value)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_real(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads_json(text: str) -> Any:
    """Parse JSON keeping real numbers as text so long doubles survive."""
    return json.loads(text, parse_float=str)


def horner(coeffs: np.ndarray, z):
    """Evaluate sum c_k z^k (ascending coefficients) by Horner's rule."""
    acc = coeffs.dtype.type(0) * np.asarray(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc
