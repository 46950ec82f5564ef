from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]

_COEFF_PATTERN = re.compile(
    r"^\s*(?P<a>[+-]?\d+(?:/\d+)?)"
    r"(?:\s*(?P<b>[+-]\s*\d+(?:/\d+)?)\s*√\s*(?P<d>-?\d+))?\s*$"
)


class FieldMismatchError(ValueError):
    """Raised when elements of two different quadratic fields are combined."""


def _squarefree_split(d: int) -> tuple[int, int]:
    """Return (k, s) with d == k*k*s and s squarefree (sign kept in s)."""
    if d == 0:
        return 0, 1
    sign = -1 if d < 0 else 1
    n = abs(d)
    k = 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            k *= p
        p += 1
    return k, sign * n


class Coeff:
    """Exact element a + b·√d of the quadratic number field ℚ(√d).

    ``d == 1`` marks a plain rational. Elements with ``b == 0`` combine with
    any field; two irrational elements must share the same ``d``.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a: Rational = 0, b: Rational = 0, d: int = 1) -> None:
        a = Fraction(a)
        b = Fraction(b)
        d = int(d)
        if b != 0:
            k, s = _squarefree_split(d)
            b *= k
            if s == 1 or b == 0:
                a += b
                b = Fraction(0)
            d = s
        if b == 0:
            d = 1
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Coeff is immutable")

    @classmethod
    def coerce(cls, value: "CoeffLike") -> "Coeff":
        if isinstance(value, Coeff):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value)
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"无法转换为 Coeff: {value!r}")

    @classmethod
    def sqrt(cls, d: int) -> "Coeff":
        return cls(0, 1, d)

    @classmethod
    def parse(cls, text: str) -> "Coeff":
        match = _COEFF_PATTERN.match(text)
        if match is None:
            raise ValueError(f"无法解析系数: {text!r}")
        a = Fraction(match.group("a"))
        if match.group("b") is None:
            return cls(a)
        b = Fraction(match.group("b").replace(" ", ""))
        return cls(a, b, int(match.group("d")))

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    @property
    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def _field(self, other: "Coeff") -> int:
        if self.b == 0:
            return other.d
        if other.b == 0 or other.d == self.d:
            return self.d
        raise FieldMismatchError(f"不同的二次域不能混合运算: √{self.d} 与 √{other.d}")

    def conjugate(self) -> "Coeff":
        return Coeff(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def __add__(self, other: "CoeffLike") -> "Coeff":
        try:
            other = Coeff.coerce(other)
        except TypeError:
            return NotImplemented
        d = self._field(other)
        return Coeff(self.a + other.a, self.b + other.b, d)

    __radd__ = __add__

    def __neg__(self) -> "Coeff":
        return Coeff(-self.a, -self.b, self.d)

    def __sub__(self, other: "CoeffLike") -> "Coeff":
        try:
            other = Coeff.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: "CoeffLike") -> "Coeff":
        return Coeff.coerce(other) - self

    def __mul__(self, other: "CoeffLike") -> "Coeff":
        try:
            other = Coeff.coerce(other)
        except TypeError:
            return NotImplemented
        d = self._field(other)
        a = self.a * other.a + self.b * other.b * d
        b = self.a * other.b + self.b * other.a
        return Coeff(a, b, d)

    __rmul__ = __mul__

    def inverse(self) -> "Coeff":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("Coeff 除数为零")
        return Coeff(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other: "CoeffLike") -> "Coeff":
        try:
            other = Coeff.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other: "CoeffLike") -> "Coeff":
        return Coeff.coerce(other) * self.inverse()

    def __pow__(self, exponent: int) -> "Coeff":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Coeff(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if not isinstance(other, Coeff):
            return NotImplemented
        return self.a == other.a and self.b == other.b and self.d == other.d

    def __hash__(self) -> int:
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __bool__(self) -> bool:
        return not self.is_zero

    def __complex__(self) -> complex:
        if self.b == 0:
            return complex(float(self.a))
        return complex(float(self.a)) + float(self.b) * cmath.sqrt(self.d)

    def __float__(self) -> float:
        if self.b != 0 and self.d < 0:
            raise TypeError("非实数系数不能转换为 float")
        if self.b == 0:
            return float(self.a)
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        sign = "-" if self.b < 0 else "+"
        return f"{self.a}{sign}{abs(self.b)}√{self.d}"

    def __repr__(self) -> str:
        return f"Coeff({self})"


CoeffLike = Union[Coeff, int, Fraction, str]

ZERO = Coeff(0)
ONE = Coeff(1)


def eisenstein_alpha(sign: int = 1) -> Coeff:
    """The sixth root of unity (1 ± i√3)/2 as an element of ℚ(√-3)."""
    return Coeff(Fraction(1, 2), Fraction(sign, 2), -3)


class _Infinity:
    """The value ∞ on the Riemann sphere."""

    _instance = None

    def __new__(cls) -> "_Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "∞"

    __str__ = __repr__

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

SphereValue = Union[Coeff, _Infinity]


def is_infinite(value: object) -> bool:
    return value is INF


def coerce_value(value: object) -> SphereValue:
    """Accept Coeff-like input or one of ``INF``, ``"inf"``, ``"∞"``."""
    if value is INF:
        return INF
    if isinstance(value, str) and value.strip().lower() in {"inf", "∞", "infinity"}:
        return INF
    return Coeff.coerce(value)
