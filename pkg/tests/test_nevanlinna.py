from __future__ import annotations

import math

import numpy as np
import pytest

from app.core import catalog
from app.core.exactfield import ExactFunc, parse_exact
from app.core.quadfield import INF, is_infinite
from app.numeric.meroeval import RationalOfExp
from app.numeric.nevanlinna import (APointList, SharingInconsistencyError, characteristic_T, compute_profile,
                                    counting_from_points, counting_N, deficiency_estimate, locate_apoints,
                                    paired_points, proximity_m, tau_estimate, value_label, worker_count)

EXP_Z = RationalOfExp(ExactFunc.u(), "exp")
EXP_MINUS_Z = RationalOfExp(1 / ExactFunc.u(), "exp_minus")


def one_points_counting(r: float) -> float:
    """N(r, 1, e^z): one point at the origin and at ±2πik."""
    total = math.log(r)
    k = 1
    while 2 * math.pi * k <= r:
        total += 2 * math.log(r / (2 * math.pi * k))
        k += 1
    return total


def test_value_labels():
    assert value_label(INF) == "∞"
    assert value_label(1) == "1"
    assert value_label(-0.125) == "-0.125"


def test_one_points_of_exponential():
    found = locate_apoints(EXP_Z, 1, 10.0)
    assert found.total_with_mult == 3
    assert found.multiplicities() == [1, 1, 1]
    locations = sorted((z for z, _ in found.points), key=lambda z: z.imag)
    np.testing.assert_allclose(locations, [-2j * math.pi, 0, 2j * math.pi], atol=1e-10)
    assert found.within(1.0) == [found.points[0]]


def test_picard_value_has_no_points():
    assert locate_apoints(EXP_Z, 0, 12.0).points == ()
    assert locate_apoints(EXP_Z, INF, 12.0).points == ()


def test_locate_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        locate_apoints(EXP_Z, 1, 0.0)


def test_counting_from_points():
    r = np.array([0.5, 1.0, math.e])
    np.testing.assert_allclose(counting_from_points([(0j, 1)], r), np.log(r))
    np.testing.assert_allclose(counting_from_points([(1 + 0j, 2)], r), [0, 0, 2])
    np.testing.assert_allclose(counting_from_points([(1 + 0j, 2)], r, distinct=True), [0, 0, 1])


def test_counting_of_exponential_one_points():
    grid = [5.0, 10.0, 20.0]
    N, Nbar = counting_N(EXP_Z, 1, grid)
    np.testing.assert_allclose(N, [one_points_counting(r) for r in grid], rtol=1e-9)
    np.testing.assert_allclose(Nbar, N)


@pytest.mark.parametrize("value", [0, INF])
def test_proximity_of_exponential(value):
    for r in (3.0, 10.0):
        assert proximity_m(EXP_Z, value, r) == pytest.approx(r / math.pi, abs=1e-3)


def test_characteristic_of_exponential_grows_like_r_over_pi():
    grid = np.geomspace(2.0, 20.0, 8)
    T = characteristic_T(EXP_Z, grid)
    assert np.all(np.diff(T) > 0)
    np.testing.assert_allclose(T, grid / math.pi, atol=0.5)


def test_characteristic_needs_increasing_grid():
    with pytest.raises(ValueError):
        characteristic_T(EXP_Z, [3.0, 2.0])


def test_deficiencies_of_exponential():
    grid = np.geomspace(4.0, 20.0, 6)
    T = characteristic_T(EXP_Z, grid)
    assert deficiency_estimate(EXP_Z, 0, grid, T) > 0.8
    assert deficiency_estimate(EXP_Z, 1, grid, T) < 0.1


def test_paired_points_detects_unshared_points():
    first = APointList(1, 5.0, ((0j, 1), (2j, 1)))
    second = APointList(1, 5.0, ((0j, 1),))
    with pytest.raises(SharingInconsistencyError):
        paired_points(first, second)
    second = APointList(1, 5.0, ((0j, 2), (2j, 1)))
    assert paired_points(first, second) == [(0j, 1, 2), (2j, 1, 1)]


def test_polya_profile_counts_simple_shared_points():
    grid = np.geomspace(2.0, 16.0, 6)
    profile = compute_profile({"f": EXP_Z, "g": EXP_MINUS_Z}, [("1", 1), ("-1", -1), ("0", 0)], grid,
                              functionals=("N", "Ns"), threads=2)
    np.testing.assert_allclose(profile.Ns["1"], profile.N[("f", "1")])
    np.testing.assert_allclose(profile.N[("f", "-1")], profile.N[("g", "-1")], rtol=1e-9)
    assert np.all(profile.N[("f", "0")] == 0)
    assert tau_estimate(profile, "1") == 1.0
    assert tau_estimate(profile, "0") == 1.0
    assert profile.metadata["function_ids"] == ["exp", "exp_minus"]
    columns = profile.series()
    assert "Ns[1]" in columns and len(columns["r"]) == 6


def test_profile_rejects_unknown_functional():
    with pytest.raises(ValueError):
        compute_profile({"f": EXP_Z}, [("1", 1)], [1.0, 2.0], functionals=("X",))


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv("NEVLAB_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("NEVLAB_THREADS", "many")
    assert worker_count() == 1


@pytest.mark.slow
def test_gundersen_has_no_simultaneous_simple_points():
    f = RationalOfExp(parse_exact("((1, 1);())/(1, -2, 1) @ exp"), "f")
    g = RationalOfExp(parse_exact("((1/8, 1/4, 1/8);())/(-1, 1) @ exp"), "g")
    grid = np.geomspace(2.0, 12.0, 6)
    profile = compute_profile({"f": f, "g": g}, [("1", 1), ("0", 0), ("∞", INF), ("-1/8", -0.125)], grid,
                              functionals=("N", "Ns"))
    for label in ("1", "0", "∞", "-1/8"):
        assert np.all(profile.Ns[label] == 0)
        assert tau_estimate(profile, label) == 0.0
    np.testing.assert_allclose(profile.N[("g", "1")], 2 * profile.Nbar[("g", "1")], rtol=1e-9)
    np.testing.assert_allclose(profile.N[("f", "∞")], 2 * profile.Nbar[("f", "∞")], rtol=1e-9)


def test_proximity_with_points_on_the_circle():
    # the one-points ±2πi of e^z lie on |z| = 2π
    r = 2 * math.pi
    points = locate_apoints(EXP_Z, 1, 7.0).points
    on_circle = proximity_m(EXP_Z, 1, r, points=points)
    assert math.isfinite(on_circle) and on_circle > 0
    for nearby in (r * (1 - 1e-6), r * (1 + 1e-6)):
        assert proximity_m(EXP_Z, 1, nearby, points=points) == pytest.approx(on_circle, abs=2e-4)
    assert proximity_m(EXP_Z, 1, r) == pytest.approx(on_circle, abs=2e-4)


@pytest.fixture(scope="module")
def gundersen_profile():
    entry = catalog.build("gundersen")
    grid = np.geomspace(2.0, 30.0, 8)
    return entry, compute_profile(entry.numeric, entry.value_items(), grid)


@pytest.mark.slow
def test_gundersen_characteristic_is_twice_exponential(gundersen_profile):
    _, profile = gundersen_profile
    assert profile.radii[-1] == pytest.approx(30.0)
    assert 0.95 <= profile.T["f"][-1] / (2 * 30.0 / math.pi) <= 1.05


@pytest.mark.slow
def test_gundersen_reduced_counting_sum(gundersen_profile):
    entry, profile = gundersen_profile
    for name in ("f", "g"):
        total = sum(profile.Nbar[(name, label)][-1] for label in entry.labels)
        assert 1.9 <= total / profile.T[name][-1] <= 2.1


@pytest.mark.slow
def test_functionals_grow_with_r(gundersen_profile):
    entry, profile = gundersen_profile
    for name in ("f", "g"):
        assert np.all(np.diff(profile.T[name]) > 0)
        for label in entry.labels:
            assert np.all(np.diff(profile.N[(name, label)]) >= 0)
            assert np.all(np.diff(profile.Nbar[(name, label)]) >= 0)
            assert np.all(profile.N[(name, label)] >= profile.Nbar[(name, label)] - 1e-9)


@pytest.mark.slow
def test_first_main_theorem_band(gundersen_profile):
    # m + N − T differs from a constant by at most log⁺|a| + log 2, plus ½ log 2 for the spherical T
    entry, profile = gundersen_profile
    for name in ("f", "g"):
        for label, value in entry.value_items():
            gap = profile.m[(name, label)] + profile.N[(name, label)] - profile.T[name]
            size = 0.0 if is_infinite(value) else max(0.0, math.log(abs(complex(value))))
            assert np.ptp(gap) <= 2 * size + 2.5 * math.log(2) + 0.05


@pytest.mark.slow
@pytest.mark.parametrize("name, label", [("f", "0"), ("f", "1"), ("g", "∞"), ("g", "-1/8")])
def test_gundersen_deficiencies(name, label):
    entry = catalog.build("gundersen")
    value = dict(entry.value_items())[label]
    delta = deficiency_estimate(entry.numeric[name], value, [20.0, 25.0, 30.0])
    assert 0.45 <= delta <= 0.55
