from __future__ import annotations

import numpy as np
import pytest

from app.numeric.contour import ContourError, Rect, circle_winding, count_zeros, locate_zeros, zero_centroid

DOUBLE = 0.3 + 0.2j
SIMPLE = -0.5 - 0.35j
POLE = 0.45 - 0.6j


def cubic(z):
    z = np.asarray(z, dtype=complex)
    h = (z - DOUBLE) ** 2 * (z - SIMPLE)
    dh = 2 * (z - DOUBLE) * (z - SIMPLE) + (z - DOUBLE) ** 2
    return h, dh


def with_pole(z):
    h, dh = cubic(z)
    q = z - POLE
    return h / q, (dh * q - h) / q ** 2


def test_rect_geometry():
    rect = Rect.square(0j, 1.0)
    assert rect.center == 0j
    assert rect.contains(0.5 + 0.5j) and not rect.contains(1.5)
    assert rect.boundary_distance(0.9) == pytest.approx(0.1)
    assert len(rect.split(0.5)) == 4


def test_count_zeros():
    assert count_zeros(cubic, Rect.square(0j, 1.0), []) == 3
    assert count_zeros(cubic, Rect(0.0, 1.0, 0.0, 1.0), []) == 2


def test_count_zeros_corrects_for_poles():
    assert count_zeros(with_pole, Rect.square(0j, 1.0), [(POLE, 1)]) == 3


def test_pole_on_boundary_is_rejected():
    with pytest.raises(ContourError):
        count_zeros(with_pole, Rect(0.45, 1.0, -1.0, 1.0), [(POLE, 1)])


def test_locate_zeros_with_multiplicity():
    found = sorted(locate_zeros(with_pole, Rect.square(0.01 + 0.02j, 1.0), [(POLE, 1)]),
                   key=lambda item: item[1])
    assert [m for _, m in found] == [1, 2]
    assert found[0][0] == pytest.approx(SIMPLE, abs=1e-10)
    assert found[1][0] == pytest.approx(DOUBLE, abs=1e-6)


def test_circle_winding():
    assert circle_winding(cubic, 0j, 2.0) == pytest.approx(3.0, abs=1e-6)
    assert circle_winding(with_pole, 0j, 2.0) == pytest.approx(2.0, abs=1e-6)


def test_zero_centroid_corrects_for_poles():
    center = zero_centroid(with_pole, Rect.square(0j, 1.0), [(POLE, 1)], 3)
    assert center == pytest.approx((2 * DOUBLE + SIMPLE) / 3, abs=1e-9)
    assert zero_centroid(cubic, Rect(0.0, 1.0, 0.0, 1.0), [], 2) == pytest.approx(DOUBLE, abs=1e-9)
