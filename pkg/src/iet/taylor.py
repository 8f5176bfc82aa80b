"""Truncated Taylor arithmetic used as the derivative oracle.

A TSeries holds coefficients [a_0, ..., a_n] of a_0 + a_1 t + ... + a_n t^n.
Coefficients may be floats, Fractions or mpmath.mpf; the recurrences below
never introduce float literals, so the scalar type is preserved.

Branch families expand T(x + t) in t through a declared order; value and
derivatives D^k T(x) = k! * a_k fall out, as do Schwarzians and jets.
"""
from __future__ import annotations

from fractions import Fraction

import mpmath


class TSeries:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)

    @classmethod
    def variable(cls, x, order: int) -> "TSeries":
        """The series of (x + t) truncated at t^order."""
        coeffs = [x * 0 + x, x * 0 + 1] + [x * 0] * (order - 1)
        return cls(coeffs[: order + 1])

    @classmethod
    def constant(cls, c, order: int) -> "TSeries":
        return cls([c] + [c * 0] * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    @property
    def zero_scalar(self):
        return self.coeffs[0] * 0

    def derivative_at_zero(self, k: int):
        """D^k at the expansion point: k! * a_k."""
        fact = 1
        for i in range(2, k + 1):
            fact *= i
        return self.coeffs[k] * fact

    def __add__(self, other):
        if isinstance(other, TSeries):
            return TSeries([a + b for a, b in zip(self.coeffs, other.coeffs)])
        out = list(self.coeffs)
        out[0] = out[0] + other
        return TSeries(out)

    __radd__ = __add__

    def __neg__(self):
        return TSeries([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other if isinstance(other, TSeries) else -1 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TSeries):
            return TSeries([a * other for a in self.coeffs])
        n = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        return TSeries([sum(a[i] * b[k - i] for i in range(k + 1))
                        for k in range(n + 1)])

    __rmul__ = __mul__

    def reciprocal(self) -> "TSeries":
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("series has zero constant term")
        inv0 = _invert(a[0])
        out = [inv0]
        for k in range(1, self.order + 1):
            out.append(-inv0 * sum(a[i] * out[k - i] for i in range(1, k + 1)))
        return TSeries(out)

    def __truediv__(self, other):
        if isinstance(other, TSeries):
            return self * other.reciprocal()
        return self * _invert(other)

    def power_int(self, m: int) -> "TSeries":
        result = TSeries.constant(self.zero_scalar + 1, self.order)
        base = self
        while m:
            if m & 1:
                result = result * base
            base = base * base
            m >>= 1
        return result


def _invert(x):
    if isinstance(x, Fraction):
        return Fraction(1) / x
    if isinstance(x, int):
        return Fraction(1, x)
    return 1 / x


def _call_scalar(fname: str, x):
    if isinstance(x, (Fraction, int)):
        x = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) \
            else mpmath.mpf(x)
        return getattr(mpmath, fname)(x)
    if isinstance(x, float):
        import math
        return getattr(math, fname)(x)
    return getattr(mpmath, fname)(x)


def sin_cos(f: TSeries) -> tuple[TSeries, TSeries]:
    """sin(f), cos(f) via s' = c f', c' = -s f'."""
    n = f.order
    a = f.coeffs
    s = [_call_scalar("sin", a[0])]
    c = [_call_scalar("cos", a[0])]
    for k in range(1, n + 1):
        sk = sum(i * a[i] * c[k - i] for i in range(1, k + 1)) / k
        ck = -sum(i * a[i] * s[k - i] for i in range(1, k + 1)) / k
        s.append(sk)
        c.append(ck)
    return TSeries(s), TSeries(c)


def sin(f: TSeries) -> TSeries:
    return sin_cos(f)[0]


def cos(f: TSeries) -> TSeries:
    return sin_cos(f)[1]


def exp(f: TSeries) -> TSeries:
    n = f.order
    a = f.coeffs
    e = [_call_scalar("exp", a[0])]
    for k in range(1, n + 1):
        e.append(sum(i * a[i] * e[k - i] for i in range(1, k + 1)) / k)
    return TSeries(e)


def log(f: TSeries) -> TSeries:
    n = f.order
    a = f.coeffs
    if a[0] == 0:
        raise ZeroDivisionError("log of series with zero constant term")
    out = [_call_scalar("log", a[0])]
    inv0 = _invert(a[0])
    for k in range(1, n + 1):
        acc = k * a[k]
        acc = acc - sum(i * out[i] * a[k - i] for i in range(1, k))
        out.append(acc * inv0 / k)
    return TSeries(out)
