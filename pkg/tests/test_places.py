from __future__ import annotations

import pytest

from app.core.places import (BRANCH, INFINITY, PLAIN, Atom, EllipticModel, ExpModel, divisor_of, orders_at,
                             pattern_histogram, refine_atoms)
from app.core.poly import Poly

P = Poly([0, 48, 60, 12])
MODEL = EllipticModel(P)


def test_exp_divisor_of_gundersen_f():
    div = divisor_of(Poly([1, 1]), Poly(), Poly([1, -2, 1]), ExpModel())
    assert div.zeros() == {Atom(PLAIN, Poly([1, 1])): 1}
    assert div.poles() == {Atom(PLAIN, Poly([-1, 1])): 2}


def test_exp_model_drops_u_zero():
    div = divisor_of(Poly([0, 0, 1]), Poly(), Poly([1]), ExpModel())
    assert div.orders() == {}


def test_u_vanishes_doubly_at_branch_point():
    div = divisor_of(Poly.u(), Poly(), Poly([1]), MODEL)
    assert div.zeros() == {Atom(BRANCH, Poly.u()): 2}
    assert div.poles() == {Atom(INFINITY): 2}
    assert div.degree() == 0


def test_y_vanishes_at_all_three_branch_points():
    div = divisor_of(Poly(), Poly([1]), Poly([1]), MODEL)
    (atom, order), = div.zeros().items()
    assert atom.kind == BRANCH and atom.locus == P.monic() and order == 1
    assert atom.place_count == 3
    assert div.poles() == {Atom(INFINITY): 3}


def test_refinement_splits_common_factors():
    first = divisor_of(Poly([-1, 0, 1]), Poly(), Poly([1]), ExpModel())
    second = divisor_of(Poly([-1, 1]), Poly(), Poly([1]), ExpModel())
    atoms = refine_atoms([first, second])
    assert {atom.locus for atom in atoms} == {Poly([-1, 1]), Poly([1, 1])}
    assert sorted(orders_at(second, atoms)) == [0, 1]
    assert orders_at(first, atoms) == [1, 1]


def test_histogram_counts_places():
    atoms = [Atom(PLAIN, Poly([-1, 1])), Atom(PLAIN, Poly([1, 0, 1]))]
    hist = pattern_histogram([(atoms[0], 1, 2), (atoms[1], 1, 2)])
    assert hist == {(1, 2): 3}


@pytest.mark.parametrize("coeffs", [[1, 1], [0, 0, 1, 1]])
def test_elliptic_model_rejects_bad_cubics(coeffs):
    with pytest.raises(ValueError):
        EllipticModel(Poly(coeffs))


def test_describe_names_rational_points():
    assert Atom(PLAIN, Poly([1, 1])).describe() == "u = -1"
    assert Atom(BRANCH, Poly.u()).describe() == "u = 0 (分支点)"
