from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exactfield import (EXP, DegenerateInputError, ExactFunc, ParseError, UnknownPresetError,
                                 ab_point_implication, aux_identity, cross_ratio, derive, divisor,
                                 four_value_relation, mobius_involution, mues_psi, parse_exact, phi_pair,
                                 polya_relation, pq_pattern, sharing_report)
from app.core.places import EllipticModel
from app.core.poly import Poly
from app.core.quadfield import INF, Coeff
from tests.strategies import nonzero_polys

GUNDERSEN_F = "((1, 1);())/(1, -2, 1) @ exp"
GUNDERSEN_G = "((1/8, 1/4, 1/8);())/(-1, 1) @ exp"
REINDERS_F = "(();(0, 0+1/24√3))/(1, 1) @ elliptic(0, 48, 60, 12)"
REINDERS_G = "(();(0+1/6√3, 0+1/24√3))/(1, 2, 1) @ elliptic(0, 48, 60, 12)"
REINDERS_MODEL = EllipticModel(Poly([0, 48, 60, 12]))


@pytest.fixture
def gundersen():
    return parse_exact(GUNDERSEN_F), parse_exact(GUNDERSEN_G)


@pytest.fixture
def reinders():
    return parse_exact(REINDERS_F), parse_exact(REINDERS_G)


@pytest.fixture
def polya():
    u = ExactFunc.u()
    return u, 1 / u


def test_gundersen_functions_match_closed_form(gundersen):
    f, g = gundersen
    u = ExactFunc.u()
    assert f == (u + 1) / ((u - 1) ** 2)
    assert g == (u + 1) ** 2 / ((u - 1) * 8)


def test_text_round_trip(reinders):
    f, _ = reinders
    assert parse_exact(f.to_text()) == f
    assert f.to_text() == REINDERS_F


def test_parse_rejects_garbage():
    with pytest.raises(ParseError):
        parse_exact("e^z + 1")
    with pytest.raises(ParseError):
        parse_exact("((1);())/() @ exp")


def test_derivation_rules():
    assert derive(ExactFunc.u()) == ExactFunc.u()
    y = ExactFunc.y(REINDERS_MODEL)
    assert derive(ExactFunc.u(REINDERS_MODEL)) == y
    half_dp = ExactFunc(REINDERS_MODEL.P.derivative().scale(Fraction(1, 2)), model=REINDERS_MODEL)
    assert derive(y) == half_dp


def test_y_squared_reduces_to_p():
    y = ExactFunc.y(REINDERS_MODEL)
    assert y * y == ExactFunc(REINDERS_MODEL.P, model=REINDERS_MODEL)


exp_funcs = st.builds(lambda a, d: ExactFunc(a, None, d, EXP),
                      nonzero_polys(d=1, max_degree=2), nonzero_polys(d=1, max_degree=2))


@given(exp_funcs, exp_funcs)
def test_leibniz_rule(f, g):
    assert derive(f * g) == derive(f) * g + f * derive(g)


@given(exp_funcs, exp_funcs)
def test_quotient_rule(f, g):
    if g.is_zero:
        return
    assert derive(f / g) == (derive(f) * g - f * derive(g)) / (g * g)


def test_elliptic_divisor_has_degree_zero(reinders):
    f, g = reinders
    assert divisor(f).degree() == 0
    assert divisor(g - 1).degree() == 0


def test_gundersen_patterns(gundersen):
    f, g = gundersen
    for value, expected in ((1, (1, 2)), (0, (1, 2)), (INF, (2, 1)), (Fraction(-1, 8), (2, 1))):
        report = sharing_report(f, g, value)
        assert report.shared
        assert not report.cm
        assert report.pairs() == {expected}


def test_reinders_patterns_alternate(reinders):
    f, g = reinders
    for value in (-1, 0, 1, INF):
        report = sharing_report(f, g, value)
        assert report.shared and not report.cm
        assert report.pairs() == {(1, 3), (3, 1)}


def test_picard_values_are_shared_vacuously(polya):
    f, g = polya
    report = sharing_report(f, g, 0)
    assert report.shared and report.cm and not report.attained


def test_sharing_identical_functions_is_degenerate(gundersen):
    f, _ = gundersen
    with pytest.raises(DegenerateInputError):
        sharing_report(f, f, 1)


def test_gundersen_table_row(gundersen):
    f, g = gundersen
    u = ExactFunc.u()
    phi_f, phi_g, phi = phi_pair(f, g, [1, 0, Fraction(-1, 8)])
    assert phi_f == 1 - u
    assert phi_g == 8 / (1 - u)
    assert phi == (1 - u) ** 2 / 8
    assert mues_psi(f, g, [1, 0, Fraction(-1, 8)]) == 8


def test_reinders_table_row(reinders):
    f, g = reinders
    u = ExactFunc.u(REINDERS_MODEL)
    sqrt3 = Coeff.sqrt(3)
    phi_f, phi_g, phi = phi_pair(f, g, [-1, 0, 1])
    assert phi_f == (u + 1).inverse() * (sqrt3 * 12)
    assert phi_g == (u + 1) * (sqrt3 * 4)
    assert phi == 3 / ((u + 1) ** 2)
    assert mues_psi(f, g, [-1, 0, 1]) == 144


def test_polya_row_is_constant_psi(polya):
    f, g = polya
    assert mues_psi(f, g, [0, 1, -1]) == 1


def test_psi_needs_three_finite_values(gundersen):
    f, g = gundersen
    with pytest.raises(DegenerateInputError):
        mues_psi(f, g, [1, 0])


def test_cross_ratio_and_involution():
    assert cross_ratio(0, INF, 1, -1) == -1
    m = mobius_involution(1, -1)
    assert m.apply(0) is INF
    assert m.apply(2) == Fraction(1, 2)
    assert m.apply(1) == 1


def test_four_value_conclusion(polya, gundersen):
    relation = four_value_relation(*polya, [0, INF, 1, -1])
    assert relation is not None
    assert relation.mobius.apply(3) == Fraction(1, 3)
    assert four_value_relation(*gundersen, [1, 0, INF, Fraction(-1, 8)]) is None


def test_half_points_imply_quarter_points(gundersen):
    assert ab_point_implication(*gundersen, Fraction(-1, 2), Fraction(1, 4)) == (True, True)


def test_polya_middle_value(polya):
    assert polya_relation(*polya, [1, 0, -1]) == 0


def test_pq_patterns(gundersen, reinders):
    pq = pq_pattern([sharing_report(*gundersen, v) for v in (1, 0, INF, Fraction(-1, 8))])
    assert (pq.p, pq.q) == (1, 2) and pq.family == "gundersen" and pq.within_bound
    pq = pq_pattern([sharing_report(*reinders, v) for v in (-1, 0, 1, INF)])
    assert (pq.p, pq.q) == (1, 3) and pq.family == "reinders"


def test_aux_phi40_is_constant_for_polya(polya):
    verdict = aux_identity("phi40", *polya)
    assert verdict.kind == "constant"
    assert verdict.constant == 2


def test_unknown_aux_preset(polya):
    with pytest.raises(UnknownPresetError):
        aux_identity("phi99", *polya)


def test_varphi_for_polya_pair(polya):
    # e^z, e^{-z}: varphi = 1/u + κu − (1 + κ)u/(1 + u²)
    u = ExactFunc.u()
    verdict = aux_identity("varphi", *polya, [1])
    assert verdict.kind == "nonconstant"
    assert verdict.value == (u ** 4 + 1) / (u * (u ** 2 + 1))
    assert verdict.value != (u ** 4 + 4 * u ** 2 + 1) / (u * (u ** 2 + 1))


def test_varphi_sign_is_invisible_at_kappa_minus_one(polya):
    u = ExactFunc.u()
    assert aux_identity("varphi", *polya, [-1]).value == 1 / u - u
