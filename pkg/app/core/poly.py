from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from app.core.quadfield import Coeff, CoeffLike


def _strip(coeffs: Iterable[Coeff]) -> Tuple[Coeff, ...]:
    items = list(coeffs)
    while items and items[-1].is_zero:
        items.pop()
    return tuple(items)


class Poly:
    """Univariate polynomial in u with ``Coeff`` coefficients, ascending degree.

    The zero polynomial has no coefficients and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[CoeffLike] = ()) -> None:
        object.__setattr__(self, "coeffs", _strip(Coeff.coerce(c) for c in coeffs))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Poly is immutable")

    @classmethod
    def constant(cls, value: CoeffLike) -> "Poly":
        return cls([value])

    @classmethod
    def monomial(cls, degree: int, value: CoeffLike = 1) -> "Poly":
        return cls([0] * degree + [value])

    @classmethod
    def u(cls) -> "Poly":
        return cls([0, 1])

    @classmethod
    def from_roots(cls, roots: Sequence[CoeffLike], lead: CoeffLike = 1) -> "Poly":
        result = cls([lead])
        for root in roots:
            result = result * cls([-Coeff.coerce(root), 1])
        return result

    # -- basic properties -------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    @property
    def leading(self) -> Coeff:
        return self.coeffs[-1] if self.coeffs else Coeff(0)

    def __getitem__(self, index: int) -> Coeff:
        if 0 <= index < len(self.coeffs):
            return self.coeffs[index]
        return Coeff(0)

    def constant_value(self) -> Coeff:
        return self[0]

    # -- ring operations --------------------------------------------------

    @staticmethod
    def _coerce(value: Union["Poly", CoeffLike]) -> "Poly":
        if isinstance(value, Poly):
            return value
        return Poly([value])

    def __add__(self, other: Union["Poly", CoeffLike]) -> "Poly":
        other = Poly._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other: Union["Poly", CoeffLike]) -> "Poly":
        return self + (-Poly._coerce(other))

    def __rsub__(self, other: Union["Poly", CoeffLike]) -> "Poly":
        return Poly._coerce(other) - self

    def __mul__(self, other: Union["Poly", CoeffLike]) -> "Poly":
        other = Poly._coerce(other)
        if self.is_zero or other.is_zero:
            return Poly()
        out = [Coeff(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Poly":
        if exponent < 0:
            raise ValueError("多项式不支持负指数")
        result = Poly([1])
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def scale(self, factor: CoeffLike) -> "Poly":
        factor = Coeff.coerce(factor)
        return Poly(c * factor for c in self.coeffs)

    def __divmod__(self, other: "Poly") -> Tuple["Poly", "Poly"]:
        other = Poly._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("多项式除数为零")
        remainder = list(self.coeffs)
        dq = other.degree
        if self.degree < dq:
            return Poly(), self
        quotient = [Coeff(0)] * (self.degree - dq + 1)
        inv_lead = other.leading.inverse()
        for k in range(self.degree - dq, -1, -1):
            coeff = remainder[k + dq] * inv_lead
            quotient[k] = coeff
            if coeff.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                remainder[k + j] = remainder[k + j] - coeff * b
        return Poly(quotient), Poly(remainder[:dq])

    def __floordiv__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[1]

    def exact_div(self, other: Union["Poly", CoeffLike]) -> "Poly":
        quotient, remainder = divmod(self, Poly._coerce(other))
        if not remainder.is_zero:
            raise ArithmeticError(f"多项式不能整除: ({self}) / ({other})")
        return quotient

    def divides(self, other: "Poly") -> bool:
        if self.is_zero:
            return other.is_zero
        return (other % self).is_zero

    def monic(self) -> "Poly":
        if self.is_zero:
            return self
        return self.scale(self.leading.inverse())

    # -- calculus and factor structure ------------------------------------

    def derivative(self) -> "Poly":
        return Poly(c * k for k, c in enumerate(self.coeffs) if k > 0)

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, Poly._coerce(other)
        while not b.is_zero:
            a, b = b, a % b
        return a.monic()

    def ext_gcd(self, other: "Poly") -> Tuple["Poly", "Poly", "Poly"]:
        """Return (g, s, t) with s·self + t·other = g and g monic."""
        r0, r1 = self, Poly._coerce(other)
        s0, s1 = Poly([1]), Poly()
        t0, t1 = Poly(), Poly([1])
        while not r1.is_zero:
            q, r = divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0.is_zero:
            return r0, s0, t0
        inv = r0.leading.inverse()
        return r0.scale(inv), s0.scale(inv), t0.scale(inv)

    def inverse_mod(self, modulus: "Poly") -> "Poly":
        g, s, _ = self.ext_gcd(modulus)
        if g.degree != 0:
            raise ZeroDivisionError(f"({self}) 在模 ({modulus}) 下不可逆")
        return s % modulus

    def squarefree_decomposition(self) -> List[Tuple["Poly", int]]:
        """Yun's algorithm: monic squarefree factors with their exponents.

        The product of ``factor ** exponent`` equals ``self.monic()``.
        """
        if self.degree < 1:
            return []
        f = self.monic()
        df = f.derivative()
        a = f.gcd(df)
        b = f.exact_div(a)
        c = df.exact_div(a)
        d = c - b.derivative()
        result: List[Tuple[Poly, int]] = []
        i = 1
        while b.degree > 0:
            a = b.gcd(d)
            b = b.exact_div(a)
            c = d.exact_div(a)
            d = c - b.derivative()
            if a.degree > 0:
                result.append((a, i))
            i += 1
        return result

    def radical(self) -> "Poly":
        result = Poly([1])
        for factor, _ in self.squarefree_decomposition():
            result = result * factor
        return result

    def multiplicity(self, factor: "Poly") -> int:
        """Largest k with factor**k dividing self (self must be nonzero)."""
        if self.is_zero or factor.degree < 1:
            raise ValueError("重数只对非零多项式和非常数因子有定义")
        k = 0
        rest = self
        while True:
            q, r = divmod(rest, factor)
            if not r.is_zero:
                return k
            rest = q
            k += 1

    def rational_roots(self) -> List[Fraction]:
        """Rational roots of a polynomial with rational coefficients."""
        if self.degree < 1 or any(not c.is_rational for c in self.coeffs):
            return []
        denominators = 1
        for c in self.coeffs:
            denominators = denominators * c.a.denominator // int_gcd(denominators, c.a.denominator)
        ints = [int(c.a * denominators) for c in self.coeffs]
        low = next(k for k, c in enumerate(ints) if c != 0)
        roots: List[Fraction] = [Fraction(0)] if low > 0 else []
        ints = ints[low:]
        if len(ints) == 1:
            return roots
        candidates = set()
        for p in _divisors(abs(ints[0])):
            for q in _divisors(abs(ints[-1])):
                candidates.add(Fraction(p, q))
                candidates.add(Fraction(-p, q))
        reduced = Poly(ints)
        for cand in sorted(candidates):
            if reduced.evaluate(cand).is_zero:
                roots.append(cand)
        return sorted(roots)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, point: CoeffLike) -> Coeff:
        point = Coeff.coerce(point)
        acc = Coeff(0)
        for c in reversed(self.coeffs):
            acc = acc * point + c
        return acc

    def __call__(self, point: CoeffLike) -> Coeff:
        return self.evaluate(point)

    def compose(self, inner: "Poly") -> "Poly":
        acc = Poly()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def complex_coeffs(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def evaluate_complex(self, point):
        """Horner evaluation at a complex scalar or numpy array."""
        coeffs = self.complex_coeffs()
        if coeffs.size == 0:
            return np.zeros_like(np.asarray(point, dtype=complex))
        return np.polyval(coeffs[::-1], np.asarray(point, dtype=complex))

    def field_tag(self) -> int:
        for c in self.coeffs:
            if not c.is_rational:
                return c.d
        return 1

    # -- comparison and text ----------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, Coeff)):
            other = Poly([other])
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def to_text(self) -> str:
        """Coefficient list form used by the canonical ExactFunc text."""
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c.is_zero:
                continue
            if k == 0:
                body = str(c)
            else:
                power = "u" if k == 1 else f"u^{k}"
                if c == 1:
                    body = power
                elif c == -1:
                    body = "-" + power
                elif c.is_rational:
                    body = f"{c}*{power}"
                else:
                    body = f"({c})*{power}"
            terms.append(body)
        text = " + ".join(terms)
        return text.replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Poly({self.to_text()})"


def _divisors(n: int) -> List[int]:
    if n == 0:
        return [1]
    out = []
    k = 1
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            out.append(n // k)
        k += 1
    return out
