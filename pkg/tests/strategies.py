from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from app.core.poly import Poly
from app.core.quadfield import Coeff

fractions = st.builds(Fraction, st.integers(-12, 12), st.integers(1, 6))


def coeffs(d: int = -3):
    """Elements of ℚ(√d) with small numerators and denominators."""
    return st.builds(lambda a, b: Coeff(a, b, d), fractions, fractions)


def polys(d: int = -3, max_degree: int = 4):
    return st.lists(coeffs(d), min_size=0, max_size=max_degree + 1).map(Poly)


def nonzero_polys(d: int = -3, max_degree: int = 4):
    return polys(d, max_degree).filter(lambda p: not p.is_zero)
