from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from app.checks import theorems
from app.checks.theorems import (FAILS, HOLDS, INCONCLUSIVE, CheckResult, PreconditionError,
                                 check_five_value_conditions, check_four_value_conclusion, check_key_lemma,
                                 check_phi_growth_bound, check_psi_constancy_under_bounded_sharp,
                                 check_psi_smallness, corollary_report, defect_factor, harmonic_pairs,
                                 optimal_defect_factor, slack_status, worst_status)
from app.cli.commands import pair_profile
from app.core import catalog
from app.core.config import RunConfig
from app.core.exactfield import ExactFunc, parse_exact, phi_pair
from app.core.quadfield import INF
from app.numeric.meroeval import RationalOfExp
from app.numeric.nevanlinna import NevProfile, tau_estimate

R = np.geomspace(2.0, 200.0, 10)
LABELS = ("0", "1", "-1", "∞")
VALUES = [("0", 0), ("1", 1), ("-1", -1), ("∞", INF)]
GUNDERSEN = (parse_exact("((1, 1);())/(1, -2, 1) @ exp"), parse_exact("((1/8, 1/4, 1/8);())/(-1, 1) @ exp"))
GUNDERSEN_VALUES = [1, 0, INF, Fraction(-1, 8)]


def synthetic_profile(ns_share: float, T_scale: float = 1.0, extra=None) -> NevProfile:
    nbar = {(name, label): R / 2 for name in ("f", "g") for label in LABELS}
    return NevProfile(
        tuple(R), ("f", "g"), LABELS,
        T={"f": T_scale * R, "g": T_scale * R},
        N=dict(nbar), Nbar=dict(nbar),
        Ns={label: ns_share * R / 2 for label in LABELS},
        extra=dict(extra or {}),
    )


def test_slack_model():
    assert slack_status(-R, R) == (HOLDS, 0.0)
    status, c = slack_status(0.5 * np.log(R), R)
    assert status == HOLDS and c == pytest.approx(0.5)
    top_only = np.where(np.arange(len(R)) >= 5, 10.0, 0.0)
    assert slack_status(top_only, R)[0] == FAILS
    assert slack_status(np.where(np.arange(len(R)) >= 5, 1.5, 0.0), R)[0] == INCONCLUSIVE
    assert slack_status(np.where(np.arange(len(R)) >= 5, 1.5, 0.0), R, floor=2.0)[0] == HOLDS


def test_worst_status():
    results = [CheckResult("a", HOLDS), CheckResult("b", INCONCLUSIVE)]
    assert worst_status(results) == INCONCLUSIVE
    assert worst_status(results + [CheckResult("c", FAILS)]) == FAILS
    assert worst_status([]) == HOLDS


def test_defect_factor():
    assert defect_factor(9) == Fraction(209, 5)
    assert defect_factor(5) == 77
    assert optimal_defect_factor() == (9, Fraction(209, 5))
    with pytest.raises(ValueError):
        defect_factor(4)


def test_harmonic_pairs():
    assert harmonic_pairs([0, INF, 1, -1]) == [(0, 1), (2, 3)]
    assert harmonic_pairs([0, 1, 2, 5]) == []


def test_five_value_conditions_on_balanced_profile():
    profile = synthetic_profile(0.0, extra={"Nbar[f-g]": 1.5 * R})
    results = check_five_value_conditions(profile, VALUES)
    assert set(results) == {"N_a", "N_b", "N_c"}
    assert all(result.status == HOLDS for result in results.values())


def test_five_value_conditions_detect_missing_points():
    profile = synthetic_profile(0.0, extra={"Nbar[f-g]": 0.1 * R})
    assert check_five_value_conditions(profile, VALUES)["N_c"].status == FAILS


def test_key_lemma_holds_without_simple_points():
    results = check_key_lemma(synthetic_profile(0.0), VALUES)
    assert set(results) == {"R_a", "R_b", "R_c", "R_d", "R_e", "R_f"}
    assert all(result.status == HOLDS for result in results.values())


def test_key_lemma_fails_when_all_points_are_simple():
    results = check_key_lemma(synthetic_profile(1.0), VALUES)
    assert results["R_f"].status == FAILS
    assert results["R_f"].witness["instances"] == 1
    assert results["R_a"].witness["instances"] == 12


def test_key_lemma_refuses_mobius_related_pairs():
    u = ExactFunc.u()
    with pytest.raises(PreconditionError):
        check_key_lemma(synthetic_profile(0.0), [("0", 0), ("∞", INF), ("1", 1), ("-1", -1)], (u, 1 / u))


def test_key_lemma_needs_four_values():
    with pytest.raises(PreconditionError):
        check_key_lemma(synthetic_profile(0.0), VALUES[:3])


def test_corollary_cases():
    met = corollary_report(synthetic_profile(1.0, T_scale=0.5), VALUES, [True] * 4)
    assert [case.case for case in met] == list("ABCDEF")
    assert all(case.hypothesis_met for case in met)
    unmet = corollary_report(synthetic_profile(0.0, T_scale=2.0), VALUES, [False] * 4)
    assert not any(case.hypothesis_met for case in unmet)


def test_four_value_conclusion():
    u = ExactFunc.u()
    assert check_four_value_conclusion(u, 1 / u, [0, INF, 1, -1]).status == HOLDS
    result = check_four_value_conclusion(*GUNDERSEN, GUNDERSEN_VALUES)
    assert result.status == FAILS


def test_psi_smallness_for_gundersen():
    result = check_psi_smallness(*GUNDERSEN, [1, 0, Fraction(-1, 8)])
    assert result.status == HOLDS
    assert result.detail == "Ψ = 8"
    assert result.witness["phi_f_zero_free"] is False
    assert result.witness["phi_g_zero_free"] is True


def test_phi_bound_is_not_applicable_without_cm_values():
    _, _, phi = phi_pair(*GUNDERSEN, [1, 0, Fraction(-1, 8)])
    result = check_phi_growth_bound(None, phi, None, [False] * 4, VALUES)
    assert result.status == INCONCLUSIVE
    assert result.witness["applicable"] is False


def test_phi_bound_constant_phi_means_all_cm():
    phi = ExactFunc.constant(1)
    result = check_phi_growth_bound(None, phi, None, [True] * 4, VALUES)
    assert result.status == HOLDS and result.witness["branch"] == "cm_all"


def test_bounded_spherical_derivative_with_constant_psi():
    f_num = RationalOfExp(GUNDERSEN[0], "f")
    g_num = RationalOfExp(GUNDERSEN[1], "g")
    result = check_psi_constancy_under_bounded_sharp(f_num, g_num, *GUNDERSEN, [1, 0, Fraction(-1, 8)])
    assert result.status == HOLDS
    assert result.witness["sup_outer"] <= 1.5 * result.witness["sup_inner"]


def test_result_serialization():
    data = check_key_lemma(synthetic_profile(0.0), VALUES)["R_c"].to_dict()
    assert data["status"] == HOLDS
    assert len(data["r_grid"]) == len(R) == len(data["margins"])
    assert theorems.SLACK_FLOOR == 1.0


def catalog_profiles(example_id: str, config: RunConfig):
    entry = catalog.build(example_id)
    return entry, {pair: pair_profile(entry, pair, config, functionals=("N", "Ns")) for pair in entry.pairs}


@pytest.fixture(scope="module")
def reinders_profiles():
    return catalog_profiles("reinders", RunConfig(command="check", rcount=6))


@pytest.fixture(scope="module")
def triple_profiles():
    entry = catalog.build("triple")
    # radii in the top third of the default range, where every branch has many c-points
    return catalog_profiles("triple", RunConfig(command="check", rmin=0.66 * entry.r_max, rcount=4))


@pytest.mark.slow
def test_key_lemma_holds_for_gundersen():
    entry, profiles = catalog_profiles("gundersen", RunConfig(command="check", rcount=6))
    results = check_key_lemma(profiles[("f", "g")], entry.value_items(), (entry.exact["f"], entry.exact["g"]))
    assert sorted(results) == ["R_a", "R_b", "R_c", "R_d", "R_e", "R_f"]
    assert all(result.status == HOLDS for result in results.values())


@pytest.mark.slow
def test_reinders_has_no_simultaneous_simple_points(reinders_profiles):
    entry, profiles = reinders_profiles
    profile = profiles[("f", "g")]
    for label in entry.labels:
        assert tau_estimate(profile, label) == 0.0
    results = check_key_lemma(profile, entry.value_items(), (entry.exact["f"], entry.exact["g"]))
    assert all(result.status == HOLDS for result in results.values())


@pytest.mark.slow
def test_triple_simple_share_is_one_third(triple_profiles):
    entry, profiles = triple_profiles
    assert len(profiles) == 3
    for profile in profiles.values():
        for label in entry.labels:
            assert 0.28 <= tau_estimate(profile, label) <= 0.40


@pytest.mark.slow
def test_key_lemma_holds_for_triple(triple_profiles):
    entry, profiles = triple_profiles
    for profile in profiles.values():
        results = check_key_lemma(profile, entry.value_items())
        assert all(result.status == HOLDS for result in results.values())
