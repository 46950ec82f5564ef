from __future__ import annotations

import numpy as np
import pytest

from app.numeric.weierstrass import LatticeError, lattice_from_cubic, ode_residual, wp, wp_second

LEMNISCATE_CONSTANT = 2.6220575542921198


@pytest.fixture(scope="module")
def square_lattice():
    return lattice_from_cubic([1, 0, -1])


@pytest.fixture(scope="module")
def hexagonal_lattice():
    return lattice_from_cubic(np.roots([4, 0, 0, -4]))


def test_lemniscatic_invariants(square_lattice):
    assert square_lattice.g2 == pytest.approx(4)
    assert abs(square_lattice.g3) < 1e-14
    assert square_lattice.min_period == pytest.approx(LEMNISCATE_CONSTANT, rel=1e-9)
    assert square_lattice.covolume == pytest.approx(LEMNISCATE_CONSTANT ** 2, rel=1e-9)


def test_half_periods_map_to_roots(square_lattice):
    values = [wp(w, square_lattice)[0] for w in (square_lattice.omega1, square_lattice.omega2,
                                                  square_lattice.omega1 + square_lattice.omega2)]
    assert sorted(v.real for v in values) == pytest.approx([-1, 0, 1], abs=1e-10)


@pytest.mark.parametrize("name", ["square_lattice", "hexagonal_lattice"])
def test_double_periodicity_and_ode(name, request):
    lat = request.getfixturevalue(name)
    z = np.array([0.37 + 0.21j, -0.8 + 0.45j, 1.9 - 0.6j])
    p1, p2 = lat.periods
    base, _ = wp(z, lat)
    for shift in (p1, p2, p1 - 2 * p2):
        moved, _ = wp(z + shift, lat)
        np.testing.assert_allclose(moved, base, rtol=1e-10)
    assert np.max(ode_residual(z, lat)) < 1e-10


def test_laurent_leading_term(square_lattice):
    z = 1e-3 * (1 + 1j)
    p, dp = wp(z, square_lattice)
    assert p * z * z == pytest.approx(1, abs=1e-6)
    assert dp * z ** 3 == pytest.approx(-2, abs=1e-6)


def test_lattice_points_are_poles(square_lattice):
    p, dp = wp(square_lattice.periods[0], square_lattice)
    assert np.isinf(p.real) and np.isinf(dp.real)


def test_second_derivative_by_difference(square_lattice):
    z, h = 0.4 + 0.3j, 1e-5
    p, _ = wp(z, square_lattice)
    _, dp_plus = wp(z + h, square_lattice)
    _, dp_minus = wp(z - h, square_lattice)
    assert wp_second(p, square_lattice.g2) == pytest.approx((dp_plus - dp_minus) / (2 * h), rel=1e-6)


def test_reduce_and_points_in_disk(square_lattice):
    p1, p2 = square_lattice.periods
    z = 0.2 + 0.1j + 3 * p1 - 2 * p2
    assert square_lattice.reduce(z) == pytest.approx(0.2 + 0.1j)
    points = square_lattice.points_in_disk(1.01 * LEMNISCATE_CONSTANT)
    assert len(points) == 5


@pytest.mark.parametrize("roots", [[1, 0, 0.5], [1, 1, -2]])
def test_bad_cubics_are_rejected(roots):
    with pytest.raises(LatticeError):
        lattice_from_cubic(roots)
