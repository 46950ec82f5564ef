from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given

from app.core.quadfield import INF, Coeff, FieldMismatchError, coerce_value, eisenstein_alpha, is_infinite
from tests.strategies import coeffs


def test_rational_normalization():
    c = Coeff(Fraction(6, -4))
    assert c.a == Fraction(-3, 2)
    assert c.is_rational and c.d == 1


def test_square_factor_is_pulled_out_of_the_radicand():
    assert Coeff(0, 1, 12) == Coeff(0, 2, 3)
    assert Coeff(1, 1, 4) == Coeff(3)


def test_eisenstein_alpha_is_a_cube_root_of_minus_one():
    alpha = eisenstein_alpha()
    assert alpha == Coeff(Fraction(1, 2), Fraction(1, 2), -3)
    assert alpha ** 3 == -1
    assert alpha * alpha.conjugate() == 1
    assert alpha + alpha.conjugate() == 1


def test_parse_and_str():
    assert Coeff.parse("1/2+1/2√-3") == eisenstein_alpha()
    assert Coeff.parse("-1/8") == Fraction(-1, 8)
    assert str(Coeff(0, Fraction(1, 24), 3)) == "0+1/24√3"
    with pytest.raises(ValueError):
        Coeff.parse("√3")


def test_division_by_zero_is_rejected():
    with pytest.raises(ZeroDivisionError):
        Coeff(1) / Coeff(0)


def test_mixing_fields_is_rejected():
    with pytest.raises(FieldMismatchError):
        Coeff(0, 1, 3) + Coeff(0, 1, -3)


def test_complex_conversion():
    assert complex(eisenstein_alpha()) == pytest.approx(0.5 + 0.8660254037844386j)


def test_sphere_values():
    assert coerce_value("∞") is INF
    assert coerce_value("inf") is INF
    assert is_infinite(INF)
    assert coerce_value("-1/8") == Fraction(-1, 8)


@given(coeffs(), coeffs(), coeffs())
def test_field_axioms(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert (x * y) * z == x * (y * z)
    if not y.is_zero:
        assert (x / y) * y == x


@given(coeffs())
def test_norm_is_product_with_conjugate(x):
    assert x * x.conjugate() == x.norm()
