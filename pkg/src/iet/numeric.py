"""Numeric modes shared by the whole package.

Two arithmetic lanes coexist:

- exact mode: ``fractions.Fraction`` everywhere, no rounding at all;
- bigfloat mode: ``mpmath.mpf`` with a fixed binary mantissa (default 256
  bits), all tolerances expressed as powers of two tied to the mantissa.

A :class:`NumericMode` is attached to every interval exchange map and is
threaded through induction, connection detection and the solvers, so one
object carries both the arithmetic dialect and its error budget.
"""
from __future__ import annotations

import contextlib
import os
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp

DEFAULT_BITS = 256

Scalar = object  # Fraction | mpmath.mpf | int


def default_bits() -> int:
    """Mantissa bits for bigfloat mode, overridable via IET_PRECISION_BITS."""
    env = os.environ.get("IET_PRECISION_BITS")
    return int(env) if env else DEFAULT_BITS


@dataclass(frozen=True)
class NumericMode:
    kind: str  # "exact" or "bigfloat"
    bits: int = 0

    def __post_init__(self):
        if self.kind not in ("exact", "bigfloat"):
            raise ValueError(f"unknown numeric mode {self.kind!r}")
        if self.kind == "bigfloat" and self.bits < 8:
            raise ValueError("bigfloat mode needs a mantissa of at least 8 bits")

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def workprec(self):
        """Context manager setting the mpmath working precision."""
        if self.is_exact:
            return contextlib.nullcontext()
        return mp.workprec(self.bits + 16)

    def coerce(self, value):
        """Bring an int/str/Fraction/mpf into this mode's scalar type."""
        if self.is_exact:
            if isinstance(value, Fraction):
                return value
            if isinstance(value, int):
                return Fraction(value)
            if isinstance(value, str):
                return Fraction(value)
            if isinstance(value, mpmath.mpf):
                return Fraction(*mpf_to_ratio(value))
            raise TypeError(f"cannot coerce {type(value).__name__} to exact scalar")
        with self.workprec():
            if isinstance(value, Fraction):
                return mp.mpf(value.numerator) / value.denominator
            if isinstance(value, str):
                if "/" in value:
                    return self.coerce(Fraction(value))
                return mp.mpf(value)
            return mp.mpf(value)

    def tiny(self, shift: int = 32):
        """Threshold 2**(-bits+shift) below which bigfloat values are noise."""
        if self.is_exact:
            return Fraction(0)
        return mpmath.mpf(2) ** (-self.bits + shift)

    def zero(self):
        return Fraction(0) if self.is_exact else mpmath.mpf(0)


EXACT = NumericMode("exact")


def bigfloat(bits: int | None = None) -> NumericMode:
    return NumericMode("bigfloat", bits if bits is not None else default_bits())


def mpf_to_ratio(x) -> tuple[int, int]:
    """Exact (numerator, denominator) of an mpf."""
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    man = -man if sign else man
    if exp >= 0:
        return man * (1 << exp), 1
    return man, 1 << (-exp)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        return Fraction(*mpf_to_ratio(x))
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def as_float(x) -> float:
    if isinstance(x, Fraction):
        return x.numerator / x.denominator if abs(x.numerator) < 2**52 else float(x)
    return float(x)


def scalar_json(x) -> object:
    """JSON form: rationals as "p/q", mpf as a mantissa/exponent record."""
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    m = mpmath.mpf(x)
    sign, man, exp, bc = m._mpf_
    return {"bits": bc, "man": hex(man), "exp": exp, "neg": bool(sign)}


def scalar_from_json(obj, mode: NumericMode):
    if isinstance(obj, dict):
        man = int(obj["man"], 16)
        value = Fraction(man, 1) * Fraction(2) ** int(obj["exp"])
        if obj.get("neg"):
            value = -value
        return mode.coerce(value)
    return mode.coerce(obj)


def decimal_str(x, digits: int = 36) -> str:
    """Deterministic decimal rendering used by the CSV writers."""
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        with mp.workprec(int(digits * 3.33) + 16):
            return mpmath.nstr(mp.mpf(x.numerator) / x.denominator, digits,
                               strip_zeros=True)
    if isinstance(x, float):
        return repr(x)
    return mpmath.nstr(mpmath.mpf(x), digits, strip_zeros=True)
