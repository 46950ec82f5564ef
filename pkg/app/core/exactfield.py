"""Exact arithmetic with the catalog functions.

An :class:`ExactFunc` is an element (A + B·y)/D of K(u) (exponential model,
u = e^z) or of K(u)[y]/(y² − P(u)) (elliptic model, y = u'), where K = ℚ(√d).
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.places import (
    Atom,
    Divisor,
    EllipticModel,
    ExpModel,
    Model,
    divisor_of,
    orders_at,
    pattern_histogram,
    refine_atoms,
)
from app.core.poly import Poly
from app.core.quadfield import INF, Coeff, CoeffLike, SphereValue, coerce_value, is_infinite

logger = logging.getLogger(__name__)


class ExactFieldError(RuntimeError):
    """Raised when an exact computation cannot be carried out."""


class DegenerateInputError(ExactFieldError):
    """Raised for coincident values, identical functions or vanishing divisors."""


class UnknownPresetError(ExactFieldError):
    """Raised when an auxiliary-function preset name is not known."""


class ParseError(ValueError):
    """Raised when the canonical text form of an ExactFunc is malformed."""


EXP = ExpModel()


class ExactFunc:
    """Normalized (A + B·y)/D with monic D and gcd(A, B, D) = 1."""

    __slots__ = ("A", "B", "D", "model")

    def __init__(self, A: Poly, B: Optional[Poly] = None, D: Optional[Poly] = None,
                 model: Model = EXP) -> None:
        B = B if B is not None else Poly()
        D = D if D is not None else Poly([1])
        if D.is_zero:
            raise ZeroDivisionError("ExactFunc 分母为零")
        if isinstance(model, ExpModel) and not B.is_zero:
            raise ValueError("指数模型中不能出现 y")
        if A.is_zero and B.is_zero:
            D = Poly([1])
        else:
            common = A.gcd(B).gcd(D)
            if common.degree > 0:
                A, B, D = A.exact_div(common), B.exact_div(common), D.exact_div(common)
            lead = D.leading.inverse()
            A, B, D = A.scale(lead), B.scale(lead), D.scale(lead)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "model", model)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ExactFunc is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: CoeffLike, model: Model = EXP) -> "ExactFunc":
        return cls(Poly([value]), model=model)

    @classmethod
    def u(cls, model: Model = EXP) -> "ExactFunc":
        return cls(Poly.u(), model=model)

    @classmethod
    def y(cls, model: EllipticModel) -> "ExactFunc":
        return cls(Poly(), Poly([1]), model=model)

    @classmethod
    def rational(cls, numerator: Sequence[CoeffLike], denominator: Sequence[CoeffLike] = (1,),
                 model: Model = EXP) -> "ExactFunc":
        return cls(Poly(numerator), None, Poly(denominator), model)

    # -- structure --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.A.is_zero and self.B.is_zero

    @property
    def is_constant(self) -> bool:
        return self.B.is_zero and self.A.is_constant and self.D.degree == 0

    def constant_value(self) -> Coeff:
        if not self.is_constant:
            raise ExactFieldError(f"函数不是常数: {self}")
        return self.A.constant_value()

    def _lift(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        if isinstance(other, ExactFunc):
            if other.model != self.model:
                raise ExactFieldError(f"模型不一致: {self.model.to_text()} 与 {other.model.to_text()}")
            return other
        return ExactFunc.constant(other, self.model)

    def _reduce(self, A: Poly, B: Poly, D: Poly) -> "ExactFunc":
        return ExactFunc(A, B, D, self.model)

    # -- field operations -------------------------------------------------

    def __add__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        other = self._lift(other)
        return self._reduce(self.A * other.D + other.A * self.D,
                            self.B * other.D + other.B * self.D,
                            self.D * other.D)

    __radd__ = __add__

    def __neg__(self) -> "ExactFunc":
        return self._reduce(-self.A, -self.B, self.D)

    def __sub__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        return self + (-self._lift(other))

    def __rsub__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        return self._lift(other) - self

    def __mul__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        other = self._lift(other)
        A = self.A * other.A
        if isinstance(self.model, EllipticModel):
            A = A + self.B * other.B * self.model.P
        B = self.A * other.B + self.B * other.A
        return self._reduce(A, B, self.D * other.D)

    __rmul__ = __mul__

    def norm(self) -> Poly:
        """A² − B²P, the numerator of h times its conjugate."""
        if isinstance(self.model, EllipticModel):
            return self.A * self.A - self.B * self.B * self.model.P
        return self.A * self.A

    def inverse(self) -> "ExactFunc":
        if self.is_zero:
            raise ZeroDivisionError("不能对零函数求倒数")
        if isinstance(self.model, ExpModel):
            return self._reduce(self.D, Poly(), self.A)
        return self._reduce(self.A * self.D, -self.B * self.D, self.norm())

    def __truediv__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other: Union["ExactFunc", CoeffLike]) -> "ExactFunc":
        return self._lift(other) * self.inverse()

    def __pow__(self, exponent: int) -> "ExactFunc":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = ExactFunc.constant(1, self.model)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, Coeff)):
            other = ExactFunc.constant(other, self.model)
        if not isinstance(other, ExactFunc):
            return NotImplemented
        return (self.model == other.model and self.A == other.A
                and self.B == other.B and self.D == other.D)

    def __hash__(self) -> int:
        return hash((self.A, self.B, self.D, self.model))

    # -- evaluation -------------------------------------------------------

    def evaluate_complex(self, u, y=None):
        """Complex value at u (and y on the curve); arrays are accepted."""
        u = np.asarray(u, dtype=complex)
        num = self.A.evaluate_complex(u)
        if not self.B.is_zero:
            if y is None:
                raise ValueError("椭圆模型求值需要 y")
            num = num + self.B.evaluate_complex(u) * np.asarray(y, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return num / self.D.evaluate_complex(u)

    def field_tag(self) -> int:
        for poly in (self.A, self.B, self.D):
            tag = poly.field_tag()
            if tag != 1:
                return tag
        return 1

    # -- text -------------------------------------------------------------

    def to_text(self) -> str:
        return f"({self.A.to_text()};{self.B.to_text()})/{self.D.to_text()} @ {self.model.to_text()}"

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"ExactFunc({self.to_text()})"


_TEXT_PATTERN = re.compile(
    r"^\s*\(\((?P<A>[^;()]*)\);\((?P<B>[^;()]*)\)\)\s*/\s*\((?P<D>[^;()]*)\)"
    r"\s*@\s*(?P<model>exp|elliptic\s*\((?P<P>[^()]*)\))\s*$"
)


def _parse_coeffs(text: str) -> Poly:
    parts = [p for p in (item.strip() for item in text.split(",")) if p]
    return Poly(Coeff.parse(p) for p in parts)


def parse_exact(text: str) -> ExactFunc:
    """Inverse of :meth:`ExactFunc.to_text`."""
    match = _TEXT_PATTERN.match(text)
    if match is None:
        raise ParseError(f"无法解析函数文本: {text!r}")
    try:
        A = _parse_coeffs(match.group("A"))
        B = _parse_coeffs(match.group("B"))
        D = _parse_coeffs(match.group("D"))
        if match.group("P") is not None:
            model: Model = EllipticModel(_parse_coeffs(match.group("P")))
        else:
            model = EXP
        return ExactFunc(A, B, D, model)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"函数文本无效 {text!r}: {exc}") from exc


# -- derivation ----------------------------------------------------------------

def derive(f: ExactFunc) -> ExactFunc:
    """d/dz realized through the model's derivation of u (and y)."""
    A, B, D = f.A, f.B, f.D
    dA, dB, dD = A.derivative(), B.derivative(), D.derivative()
    if isinstance(f.model, ExpModel):
        u = Poly.u()
        return ExactFunc(u * (dA * D - A * dD), None, D * D, f.model)
    P = f.model.P
    half_dP = P.derivative().scale(Fraction(1, 2))
    new_a = (dB * P + B * half_dP) * D - B * dD * P
    new_b = dA * D - A * dD
    return ExactFunc(new_a, new_b, D * D, f.model)


def divisor(h: ExactFunc) -> Divisor:
    """Zeros and poles of h with orders on the model's Riemann surface."""
    if h.is_zero:
        raise DegenerateInputError("零函数没有除子")
    return divisor_of(h.A, h.B, h.D, h.model)


# -- value sharing -------------------------------------------------------------

def _values(values: Sequence[object]) -> List[SphereValue]:
    result = [coerce_value(v) for v in values]
    for a, b in combinations(result, 2):
        if a == b:
            raise DegenerateInputError(f"共享值重复: {a}")
    return result


def _distinct_pair(f: ExactFunc, g: ExactFunc) -> None:
    if f.model != g.model:
        raise ExactFieldError("两个函数必须使用同一模型")
    if f == g:
        raise DegenerateInputError("f 与 g 恒等")


def value_divisor(h: ExactFunc, value: SphereValue) -> Divisor:
    """Divisor whose positive part is the set of value-points of h."""
    if is_infinite(value):
        if h.is_zero:
            raise DegenerateInputError("零函数的 ∞ 点无定义")
        return divisor(h.inverse())
    shifted = h - value
    if shifted.is_zero:
        raise DegenerateInputError(f"函数恒等于 {value}")
    return divisor(shifted)


@dataclass(frozen=True)
class PatternEntry:
    location: Atom
    mult_f: int
    mult_g: int

    def describe(self) -> str:
        return f"{self.location.describe()}: ({self.mult_f}, {self.mult_g})"


@dataclass(frozen=True)
class MultPattern:
    """Multiplicities of the value-points of f and g at one value."""

    value: SphereValue
    entries: Tuple[PatternEntry, ...]
    shared: bool
    cm: bool
    histogram: Dict[Tuple[int, int], int] = field(default_factory=dict)

    @property
    def attained(self) -> bool:
        return bool(self.entries)

    def pairs(self) -> set:
        return {(e.mult_f, e.mult_g) for e in self.entries}


def sharing_report(f: ExactFunc, g: ExactFunc, value: object) -> MultPattern:
    _distinct_pair(f, g)
    value = coerce_value(value)
    div_f = value_divisor(f, value)
    div_g = value_divisor(g, value)
    atoms = refine_atoms([div_f, div_g])
    entries = []
    for atom, of, og in zip(atoms, orders_at(div_f, atoms), orders_at(div_g, atoms)):
        mf, mg = max(of, 0), max(og, 0)
        if mf or mg:
            entries.append(PatternEntry(atom, mf, mg))
    shared = all(e.mult_f > 0 and e.mult_g > 0 for e in entries)
    cm = shared and all(e.mult_f == e.mult_g for e in entries)
    hist = dict(pattern_histogram((e.location, e.mult_f, e.mult_g) for e in entries))
    logger.debug("value %s: %d locations, shared=%s, cm=%s", value, len(entries), shared, cm)
    return MultPattern(value, tuple(entries), shared, cm, hist)


# -- Mues' function and the Φ functions -------------------------------------

def _finite_product(h: ExactFunc, values: Sequence[SphereValue]) -> ExactFunc:
    result = ExactFunc.constant(1, h.model)
    for a in values:
        if not is_infinite(a):
            result = result * (h - a)
    return result


def _psi_values(values: Sequence[object], infinity_shared: bool) -> List[SphereValue]:
    finite = _values(values)
    if any(is_infinite(a) for a in finite):
        raise DegenerateInputError("∞ 请通过 infinity_shared 指定")
    expected = 3 if infinity_shared else 4
    if len(finite) != expected:
        raise DegenerateInputError(f"需要 {expected} 个有限共享值, 实际为 {len(finite)}")
    return finite


def mues_psi(f: ExactFunc, g: ExactFunc, finite_values: Sequence[object],
             infinity_shared: bool = True) -> ExactFunc:
    """Ψ = f'g'(f − g)² / ∏(f − a)(g − a) over the finite shared values."""
    _distinct_pair(f, g)
    values = _psi_values(finite_values, infinity_shared)
    diff = f - g
    num = derive(f) * derive(g) * diff * diff
    return num / (_finite_product(f, values) * _finite_product(g, values))


def is_constant(h: ExactFunc) -> bool:
    return h.is_constant


def phi_pair(f: ExactFunc, g: ExactFunc, finite_values: Sequence[object]
             ) -> Tuple[ExactFunc, ExactFunc, ExactFunc]:
    """Return (Φ_f, Φ_g, Φ_f/Φ_g) for three finite shared values and ∞."""
    _distinct_pair(f, g)
    values = _psi_values(finite_values, True)
    diff = f - g
    phi_f = diff * derive(f) / _finite_product(f, values)
    phi_g = diff * derive(g) / _finite_product(g, values)
    return phi_f, phi_g, phi_f / phi_g


# -- auxiliary functions of the uniqueness proofs ---------------------------

@dataclass(frozen=True)
class AuxVerdict:
    preset: str
    value: ExactFunc
    kind: str
    constant: Optional[Coeff] = None
    identity_holds: Optional[bool] = None

    def describe(self) -> str:
        if self.kind == "zero":
            text = f"{self.preset} ≡ 0"
        elif self.kind == "constant":
            text = f"{self.preset} = {self.constant}"
        else:
            text = f"{self.preset} 非常数"
        if self.identity_holds is not None:
            text += f", 平方恒等式{'成立' if self.identity_holds else '不成立'}"
        return text


def _log_derivative(h: ExactFunc) -> ExactFunc:
    if h.is_zero:
        raise DegenerateInputError("对数导数中出现恒为零的函数")
    return derive(h) / h


def _safe_div(num: ExactFunc, den: ExactFunc) -> ExactFunc:
    if den.is_zero:
        raise DegenerateInputError("除以恒为零的表达式")
    return num / den


def _phi40(f, g, values):
    return _log_derivative(derive(f)) - _log_derivative(derive(g))


def _phi31(f, g, values):
    finite = _psi_values(values, True)
    return (_safe_div(derive(f), _finite_product(f, finite))
            - _safe_div(derive(g), _finite_product(g, finite)))


def _two_values(values) -> Tuple[Coeff, Coeff]:
    finite = _values(values)
    if len(finite) != 2 or any(is_infinite(a) for a in finite) or any(a == 0 for a in finite):
        raise DegenerateInputError("需要两个非零有限值 a1, a2")
    return finite[0], finite[1]


def _phi22_part(h: ExactFunc, a1: Coeff, a2: Coeff, sign: int) -> ExactFunc:
    dh = derive(h)
    total = _log_derivative(dh) + _log_derivative(h) * (2 * sign)
    for a in (a1, a2):
        total = total - _safe_div(dh, h - a)
    return total


def _phi22(f, g, values):
    a1, a2 = _two_values(values)
    return _phi22_part(f, a1, a2, 1) - _phi22_part(g, a1, a2, 1)


def _chi(f, g, values):
    a1, a2 = _two_values(values)
    return _phi22_part(f, a1, a2, -1) - _phi22_part(g, a1, a2, -1)


def _eta(f, g, values, swap: bool, theta: bool):
    a1, a2 = _two_values(values)
    if swap:
        a1, a2 = a2, a1
    chi = _chi(f, g, [a1, a2])
    if theta:
        term = _safe_div(derive(g) * (f - g), g * (f - a1) * (g - a2))
    else:
        term = _safe_div(derive(f) * (f - g), f * (g - a1) * (f - a2))
    return chi - term * (a1 + a2)


def _varphi(f, g, values):
    if len(values) != 1:
        raise DegenerateInputError("varphi 需要一个参数 κ")
    kappa = Coeff.coerce(values[0])
    i = Coeff(0, 1, -1)
    df, dg = derive(f), derive(g)
    left = _safe_div(df, f * f) - _safe_div(dg, g * g) * kappa
    right = (_safe_div(df, f - i) - _safe_div(df, f + i)
             - _safe_div(dg, g - i) * kappa + _safe_div(dg, g + i) * kappa)
    return left + right * Coeff(0, Fraction(1, 2), -1)


AUX_PRESETS: Dict[str, Callable] = {
    "phi40": _phi40,
    "phi31": _phi31,
    "phi22": _phi22,
    "chi": _chi,
    "eta1": lambda f, g, v: _eta(f, g, v, swap=False, theta=False),
    "theta1": lambda f, g, v: _eta(f, g, v, swap=False, theta=True),
    "eta2": lambda f, g, v: _eta(f, g, v, swap=True, theta=False),
    "theta2": lambda f, g, v: _eta(f, g, v, swap=True, theta=True),
    "varphi": _varphi,
}


def aux_identity(preset: str, f: ExactFunc, g: ExactFunc, values: Sequence[object] = ()) -> AuxVerdict:
    """Evaluate an auxiliary function exactly and classify it."""
    try:
        builder = AUX_PRESETS[preset]
    except KeyError as exc:
        raise UnknownPresetError(f"未知的辅助函数: {preset}") from exc
    if f.model != g.model:
        raise ExactFieldError("两个函数必须使用同一模型")
    try:
        value = builder(f, g, list(values))
    except ZeroDivisionError as exc:
        raise DegenerateInputError(f"{preset}: 除以恒为零的表达式") from exc
    if value.is_zero:
        kind, constant = "zero", None
    elif value.is_constant:
        kind, constant = "constant", value.constant_value()
    else:
        kind, constant = "nonconstant", None
    identity = None
    if preset in {"phi22", "chi"}:
        a1, a2 = _two_values(values)
        psi = mues_psi(f, g, [0, a1, a2], infinity_shared=True) if f != g else ExactFunc.constant(0, f.model)
        identity = value * value == psi * ((a1 + a2) * (a1 + a2))
    return AuxVerdict(preset, value, kind, constant, identity)


# -- Möbius geometry of the shared values ------------------------------------

def cross_ratio(a: object, b: object, c: object, d: object) -> Coeff:
    """(a − c)(b − d) / ((a − d)(b − c)) with factors containing ∞ dropped."""
    a, b, c, d = (coerce_value(v) for v in (a, b, c, d))
    num = [(a, c), (b, d)]
    den = [(a, d), (b, c)]

    def product(pairs) -> Coeff:
        result = Coeff(1)
        for x, y in pairs:
            if is_infinite(x) or is_infinite(y):
                continue
            result = result * (x - y)
        return result

    denominator = product(den)
    if denominator.is_zero:
        raise DegenerateInputError(f"交比无定义: ({a}, {b}, {c}, {d})")
    return product(num) / denominator


@dataclass(frozen=True)
class Mobius:
    """w ↦ (p·w + q)/(r·w + s)."""

    p: Coeff
    q: Coeff
    r: Coeff
    s: Coeff

    def apply(self, w: object) -> SphereValue:
        w = coerce_value(w)
        if is_infinite(w):
            return INF if self.r.is_zero else self.p / self.r
        den = self.r * w + self.s
        if den.is_zero:
            return INF
        return (self.p * w + self.q) / den

    def compose(self, h: ExactFunc) -> ExactFunc:
        return (h * self.p + self.q) / (h * self.r + self.s)

    def __str__(self) -> str:
        return f"w ↦ ({self.p}·w + {self.q})/({self.r}·w + {self.s})"


def mobius_involution(a3: object, a4: object) -> Mobius:
    """The Möbius map of order two whose fixed points are a3 and a4."""
    a3, a4 = coerce_value(a3), coerce_value(a4)
    if a3 == a4:
        raise DegenerateInputError("不动点必须不同")
    if is_infinite(a3):
        a3, a4 = a4, a3
    if is_infinite(a4):
        return Mobius(Coeff(-1), a3 * 2, Coeff(0), Coeff(1))
    total = a3 + a4
    return Mobius(total, a3 * a4 * -2, Coeff(2), -total)


@dataclass(frozen=True)
class FourValueRelation:
    swapped: Tuple[SphereValue, SphereValue]
    fixed: Tuple[SphereValue, SphereValue]
    mobius: Mobius


def four_value_relation(f: ExactFunc, g: ExactFunc, values: Sequence[object]
                        ) -> Optional[FourValueRelation]:
    """Find a labeling with cross-ratio −1 and g = M∘f, M fixing a3, a4 and swapping a1, a2."""
    _distinct_pair(f, g)
    vals = _values(values)
    if len(vals) != 4:
        raise DegenerateInputError("四值定理需要四个共享值")
    for a1, a2 in combinations(vals, 2):
        a3, a4 = [v for v in vals if v is not a1 and v is not a2]
        if cross_ratio(a1, a2, a3, a4) != -1:
            continue
        mobius = mobius_involution(a3, a4)
        if mobius.apply(a1) != a2:
            continue
        if mobius.compose(f) == g:
            return FourValueRelation((a1, a2), (a3, a4), mobius)
    return None


def ab_point_implication(f: ExactFunc, g: ExactFunc, a: object, b: object) -> Tuple[bool, bool]:
    """Return (f = a ⇒ g = b, g = b ⇒ f = a) decided on the divisors."""
    div_f = value_divisor(f, coerce_value(a))
    div_g = value_divisor(g, coerce_value(b))
    atoms = refine_atoms([div_f, div_g])
    forward = backward = True
    for of, og in zip(orders_at(div_f, atoms), orders_at(div_g, atoms)):
        if of > 0 and og <= 0:
            forward = False
        if og > 0 and of <= 0:
            backward = False
    return forward, backward


def polya_relation(f: ExactFunc, g: ExactFunc, values: Sequence[object]) -> Optional[Coeff]:
    """Middle value a2 = (a1 + a3)/2 with (f − a2)(g − a2) = (a2 − a1)(a3 − a2), if any."""
    vals = _values(values)
    if len(vals) != 3 or any(is_infinite(v) for v in vals):
        raise DegenerateInputError("Pólya 关系需要三个有限值")
    for a1, a2, a3 in permutations(vals):
        if a2 * 2 != a1 + a3:
            continue
        if (f - a2) * (g - a2) == ExactFunc.constant((a2 - a1) * (a3 - a2), f.model):
            return a2
    return None


@dataclass(frozen=True)
class PQPattern:
    p: int
    q: int

    @property
    def within_bound(self) -> bool:
        return self.p == 1 and 2 <= self.q <= 3

    @property
    def family(self) -> Optional[str]:
        return {(1, 2): "gundersen", (1, 3): "reinders"}.get((self.p, self.q))


def pq_pattern(patterns: Sequence[MultPattern]) -> Optional[PQPattern]:
    """Common (p, q) with every shared point (p, q)-fold for (f, g) or for (g, f)."""
    seen = set()
    for pattern in patterns:
        for mf, mg in pattern.pairs():
            seen.add((min(mf, mg), max(mf, mg)))
    if len(seen) != 1:
        return None
    p, q = seen.pop()
    if p == q:
        return None
    return PQPattern(p, q)
