"""Exact Gaussian-rational scalars with a float fallback.

``QI`` holds a complex number whose real and imaginary parts are
``Fraction`` objects.  Mixing a ``QI`` with a Python ``float`` or
``complex`` demotes the result to ``complex`` (float mode), so a single
code path serves both exact identities and fast numeric sweeps.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

Scalar = Union["QI", complex, float, int, Fraction]


class QI:
    """Complex number with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: int | Fraction | str = 0, im: int | Fraction | str = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "QI":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, QI):
            return QI._raw(self.re + other.re, self.im + other.im)
        if isinstance(other, Rational):
            return QI._raw(self.re + other, self.im)
        if isinstance(other, (float, complex)):
            return complex(self) + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return QI._raw(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, QI):
            return QI._raw(self.re - other.re, self.im - other.im)
        if isinstance(other, Rational):
            return QI._raw(self.re - other, self.im)
        if isinstance(other, (float, complex)):
            return complex(self) - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QI):
            a, b, c, d = self.re, self.im, other.re, other.im
            return QI._raw(a * c - b * d, a * d + b * c)
        if isinstance(other, Rational):
            return QI._raw(self.re * other, self.im * other)
        if isinstance(other, (float, complex)):
            return complex(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QI):
            n = other.re * other.re + other.im * other.im
            if n == 0:
                raise ZeroDivisionError("QI division by zero")
            a, b, c, d = self.re, self.im, other.re, other.im
            return QI._raw((a * c + b * d) / n, (b * c - a * d) / n)
        if isinstance(other, Rational):
            return QI._raw(self.re / other, self.im / other)
        if isinstance(other, (float, complex)):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Rational):
            return QI(Fraction(other)) / self
        if isinstance(other, (float, complex)):
            return other / complex(self)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return complex(self) ** n
        if n < 0:
            return QI(1) / (self ** (-n))
        result = QI._raw(Fraction(1), Fraction(0))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # comparisons and conversions -------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        if isinstance(other, Rational):
            return self.im == 0 and self.re == other
        if isinstance(other, (float, complex)):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def conjugate(self) -> "QI":
        return QI._raw(self.re, -self.im)

    def __repr__(self):
        if self.im == 0:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


I = QI(0, 1)
ONE = QI(1)
ZERO = QI(0)

# (-i)^n cycles with period four
_MINUS_I_POWERS = (QI(1), QI(0, -1), QI(-1), QI(0, 1))


def minus_i_power(n: int) -> QI:
    return _MINUS_I_POWERS[n % 4]


def is_exact(c) -> bool:
    return isinstance(c, (QI, Rational))


def to_coeff(value, exact: bool = True):
    """Normalize a user coefficient.

    Exact inputs (int, Fraction, QI, rational strings) become ``QI``;
    floats and complex numbers stay ``complex`` unless ``exact`` asks for the
    exact binary value of the float.
    """
    if isinstance(value, QI):
        return value
    if isinstance(value, bool):
        return QI(int(value))
    if isinstance(value, Rational):
        return QI(Fraction(value))
    if isinstance(value, str):
        return QI(Fraction(value))
    if isinstance(value, float):
        return QI(Fraction(value)) if exact else complex(value)
    if isinstance(value, complex):
        if exact:
            return QI(Fraction(value.real), Fraction(value.imag))
        return value
    raise TypeError(f"unsupported coefficient type {type(value).__name__}")


def parse_tau(value) -> Fraction | float:
    """Parse a quantization parameter, keeping rationals exact.

    ``"1/3"`` and ``"0.5"`` are exact; Python floats stay floats and demote
    downstream arithmetic to float mode.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("tau cannot be a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise ValueError(f"cannot parse tau value {value!r}") from exc
    if isinstance(value, float):
        return value
    raise TypeError(f"unsupported tau type {type(value).__name__}")


def coeff_parts(c) -> tuple[str, str]:
    """String parts for serialization; floats keep their repr for bit-exactness."""
    if isinstance(c, QI):
        return str(c.re), str(c.im)
    if isinstance(c, Rational):
        return str(Fraction(c)), "0"
    c = complex(c)
    return repr(c.real), repr(c.imag)


def coeff_from_parts(re: str, im: str):
    """Inverse of :func:`coeff_parts`."""
    def part(s: str):
        s = s.strip()
        try:
            return Fraction(s), True
        except ValueError:
            return float(s), False

    try:
        r, r_exact = part(re)
        i, i_exact = part(im)
    except ValueError as exc:
        raise ValueError(f"malformed coefficient ({re!r}, {im!r})") from exc
    # a decimal point or exponent marks a float literal
    looks_float = any(ch in s for s in (re, im) for ch in ".eEn")
    if r_exact and i_exact and not looks_float:
        return QI(r, i)
    return complex(float(r), float(i))
