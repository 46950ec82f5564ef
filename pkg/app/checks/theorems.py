"""Theorem statements of value-sharing theory as checkable predicates.

Asymptotic (in)equalities with an ``S(r)`` remainder are tested on a radius
grid: a violation v(r) is allowed up to c·log r + SLACK_FLOOR, where c is the
largest v(r)/log r seen on the lower half of the grid. The upper half then
decides the status.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.exactfield import (DegenerateInputError, ExactFunc, cross_ratio, divisor,
                                 four_value_relation, mues_psi, phi_pair)
from app.core.quadfield import Coeff, is_infinite
from app.numeric.meroeval import MeroFunc, spherical_derivative
from app.numeric.nevanlinna import NevProfile, characteristic_T, tau_estimate

logger = logging.getLogger(__name__)

HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"
_RANK = {HOLDS: 0, INCONCLUSIVE: 1, FAILS: 2}

SLACK_FLOOR = 1.0
HARMONIC_TOL = 1e-12


class PreconditionError(ValueError):
    """Raised when a checker is applied outside the hypotheses of its statement."""


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    r_grid: Tuple[float, ...] = ()
    margins: Tuple[float, ...] = ()
    slack: float = 0.0
    detail: str = ""
    witness: Dict[str, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == HOLDS

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "status": self.status,
            "r_grid": list(self.r_grid),
            "margins": list(self.margins),
            "slack": self.slack,
            "detail": self.detail,
            "witness": dict(self.witness),
        }


def worst_status(results: Sequence[CheckResult]) -> str:
    if not results:
        return HOLDS
    return max((r.status for r in results), key=_RANK.__getitem__)


def slack_status(violation: np.ndarray, r_grid: Sequence[float],
                 floor: float = SLACK_FLOOR) -> Tuple[str, float]:
    """Status of ``violation ≤ S(r)`` under the fitted c·log r model.

    Positive entries of ``violation`` are excesses; the constant c is the
    largest excess per log r on the lower half of the grid.
    """
    v = np.asarray(violation, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    half = len(r) // 2
    log_r = np.log(r)
    lower = [max(v[i], 0.0) / log_r[i] for i in range(half) if log_r[i] > 0]
    c = max(lower, default=0.0)
    allowance = c * log_r[half:] + floor
    top = v[half:]
    if np.all(top <= allowance):
        return HOLDS, c
    if np.any(top > 2 * allowance):
        return FAILS, c
    return INCONCLUSIVE, c


def _inequality(name: str, lhs: np.ndarray, rhs: np.ndarray, r_grid: Sequence[float],
                floor: float = SLACK_FLOOR, **witness) -> CheckResult:
    margins = np.asarray(lhs, dtype=float) - np.asarray(rhs, dtype=float)
    status, c = slack_status(margins, r_grid, floor)
    return CheckResult(name, status, tuple(float(x) for x in r_grid), tuple(float(x) for x in margins),
                       c, f"max margin on upper half: {margins[len(margins) // 2:].max():.4g}", witness)


def _asymptotic_equality(name: str, lhs: np.ndarray, rhs: np.ndarray, r_grid: Sequence[float],
                         target: float, floor: float = SLACK_FLOOR) -> CheckResult:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margins = np.abs(lhs - rhs)
    status, c = slack_status(margins, r_grid, floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = float(lhs[-1] / (rhs[-1] / target)) if rhs[-1] else math.nan
    return CheckResult(name, status, tuple(float(x) for x in r_grid), tuple(float(x) for x in margins),
                       c, f"ratio at r = {r_grid[-1]:.4g}: {ratio:.4f} (target {target:g})",
                       {"ratio": ratio, "target": target})


def _series(profile: NevProfile, table: Mapping, key, what: str) -> np.ndarray:
    try:
        return np.asarray(table[key], dtype=float)
    except KeyError as exc:
        raise PreconditionError(f"剖面缺少数据列: {what}") from exc


def _require_pair(profile: NevProfile) -> Tuple[str, str]:
    ids = tuple(profile.metadata.get("function_ids", profile.functions))
    if len(profile.functions) != 2 or len(set(ids)) != 2:
        raise PreconditionError("需要两个不同的函数")
    return profile.functions[0], profile.functions[1]


def _labels(values: Sequence[Tuple[str, object]]) -> List[str]:
    labels = [label for label, _ in values]
    if len(labels) != 4 or len(set(labels)) != 4:
        raise PreconditionError(f"需要四个不同的共享值, 实际为 {labels}")
    return labels


# -- harmonic position --------------------------------------------------------

def _numeric_cross_ratio(a, b, c, d) -> complex:
    def factor(x, y):
        if is_infinite(x) or is_infinite(y):
            return 1.0
        return complex(x) - complex(y)

    return factor(a, c) * factor(b, d) / (factor(a, d) * factor(b, c))


def _is_minus_one(a, b, c, d) -> bool:
    exact = all(is_infinite(v) or isinstance(v, (Coeff, int, Fraction)) for v in (a, b, c, d))
    if exact:
        return cross_ratio(a, b, c, d) == -1
    return abs(_numeric_cross_ratio(a, b, c, d) + 1) < HARMONIC_TOL


def harmonic_pairs(values: Sequence[object]) -> List[Tuple[int, int]]:
    """Index pairs (i, j) with (a_i, a_j, a_k, a_l) = −1 for the remaining k, l."""
    pairs = []
    for i, j in combinations(range(4), 2):
        k, l = [n for n in range(4) if n not in (i, j)]
        if _is_minus_one(values[i], values[j], values[k], values[l]):
            pairs.append((i, j))
    return pairs


# -- Five-Value and Four-Value statements ------------------------------------

def check_five_value_conditions(profile: NevProfile, values: Sequence[Tuple[str, object]],
                                fg_key: str = "Nbar[f-g]",
                                b_keys: Sequence[str] = ("Nbar[f-b]", "Nbar[g-b]"),
                                floor: float = SLACK_FLOOR) -> Dict[str, CheckResult]:
    """(N_a)–(N_d) as asymptotic equalities; (N_d) only when the b-columns exist."""
    f_name, g_name = _require_pair(profile)
    labels = _labels(values)
    r = profile.radii
    T = profile.T_pair
    T_f = _series(profile, profile.T, f_name, f"T_{f_name}")
    T_g = _series(profile, profile.T, g_name, f"T_{g_name}")
    results: Dict[str, CheckResult] = {}

    first = _asymptotic_equality("N_a", T_f, T, r, 1.0, floor)
    second = _asymptotic_equality("N_a", T_g, T, r, 1.0, floor)
    worse = max((first, second), key=lambda res: _RANK[res.status])
    results["N_a"] = CheckResult("N_a", worse.status, worse.r_grid,
                                 tuple(np.maximum(first.margins, second.margins)),
                                 max(first.slack, second.slack), worse.detail, worse.witness)

    total = sum(_series(profile, profile.Nbar, (f_name, label), f"Nbar[{label}]") for label in labels)
    results["N_b"] = _asymptotic_equality("N_b", total, 2 * T, r, 2.0, floor)

    zeros_fg = _series(profile, profile.extra, fg_key, fg_key)
    infinity = [label for label, value in values if is_infinite(value)]
    if infinity:
        zeros_fg = zeros_fg + _series(profile, profile.Nbar, (f_name, infinity[0]), "Nbar[∞]")
    results["N_c"] = _asymptotic_equality("N_c", zeros_fg, 2 * T, r, 2.0, floor)

    present = [key for key in b_keys if key in profile.extra]
    if present:
        parts = [_asymptotic_equality("N_d", profile.extra[key], T, r, 1.0, floor) for key in present]
        worse = max(parts, key=lambda res: _RANK[res.status])
        results["N_d"] = worse
    return results


def check_four_value_conclusion(f: ExactFunc, g: ExactFunc, values: Sequence[object]) -> CheckResult:
    """Exact test: cross-ratio −1 for some labeling and g = M∘f for the involution M."""
    try:
        relation = four_value_relation(f, g, values)
    except DegenerateInputError as exc:
        raise PreconditionError(f"四值定理的前提不满足: {exc}") from exc
    pairs = harmonic_pairs(list(values))
    witness: Dict[str, object] = {"harmonic_pairs": [[str(values[i]), str(values[j])] for i, j in pairs]}
    if relation is None:
        return CheckResult("four_value", FAILS, detail="不存在满足结论的标号", witness=witness)
    witness.update(swapped=[str(v) for v in relation.swapped], fixed=[str(v) for v in relation.fixed],
                   mobius=str(relation.mobius))
    return CheckResult("four_value", HOLDS, detail=f"g = M∘f, M: {relation.mobius}", witness=witness)


# -- Key Lemma ----------------------------------------------------------------

def check_key_lemma(profile: NevProfile, values: Sequence[Tuple[str, object]],
                    exact_pair: Optional[Tuple[ExactFunc, ExactFunc]] = None,
                    floor: float = SLACK_FLOOR) -> Dict[str, CheckResult]:
    """(R_a)–(R_f) on the grid, each the worst case over its index choices."""
    f_name, _ = _require_pair(profile)
    labels = _labels(values)
    raw_values = [value for _, value in values]
    if exact_pair is not None:
        if four_value_relation(exact_pair[0], exact_pair[1], raw_values) is not None:
            raise PreconditionError("该函数对满足四值定理的结论, 关键引理不适用")
    r = profile.radii
    Ns = [_series(profile, profile.Ns, label, f"Ns[{label}]") for label in labels]
    Nb = [_series(profile, profile.Nbar, (f_name, label), f"Nbar[{label}]") for label in labels]
    harmonic = set(harmonic_pairs(raw_values))
    idx = range(4)

    cases: Dict[str, List[Tuple[np.ndarray, np.ndarray]]] = {k: [] for k in ("R_a", "R_b", "R_c", "R_d", "R_e", "R_f")}
    for k in idx:
        for n in idx:
            if k == n:
                continue
            factor = 2.0 if (min(k, n), max(k, n)) in harmonic else 1.5
            cases["R_a"].append((factor * Ns[k] + Ns[n], Nb[k] + Nb[n]))
            rest = [m for m in idx if m != n]
            cases["R_b"].append((Ns[k] + sum(Ns[m] for m in rest), sum(Nb[m] for m in rest)))
    for k in idx:
        rest = [m for m in idx if m != k]
        cases["R_c"].append((Nb[k] + sum(Ns[m] for m in rest), sum(Nb[m] for m in rest)))
        cases["R_e"].append((4 * sum(Ns[m] for m in rest), 3 * sum(Nb[m] for m in rest)))
    for k, n in combinations(idx, 2):
        rest = [m for m in idx if m not in (k, n)]
        cases["R_d"].append((sum(Ns) + sum(Ns[m] for m in rest), 2 * sum(Nb[m] for m in rest)))
    cases["R_f"].append((3 * sum(Ns), 2 * sum(Nb)))

    results = {}
    for name, instances in cases.items():
        margins = np.max(np.stack([lhs - rhs for lhs, rhs in instances]), axis=0)
        results[name] = _inequality(name, margins, np.zeros_like(margins), r, floor,
                                    instances=len(instances))
        logger.debug("%s: %s", name, results[name].status)
    return results


# -- Corollary hypotheses -----------------------------------------------------

@dataclass(frozen=True)
class CorollaryCase:
    case: str
    hypothesis_met: bool
    detail: str


def corollary_report(profile: NevProfile, values: Sequence[Tuple[str, object]],
                     cm_flags: Sequence[bool]) -> List[CorollaryCase]:
    """τ-threshold hypotheses (A)–(F); any met hypothesis forces the Four-Value conclusion."""
    labels = _labels(values)
    if len(cm_flags) != 4:
        raise PreconditionError("每个共享值需要一个 CM 标记")
    taus = [tau_estimate(profile, label) for label in labels]
    harmonic = bool(harmonic_pairs([value for _, value in values]))
    cm = [i for i in range(4) if cm_flags[i]]
    text = ", ".join(f"τ({label}) = {tau:.3f}" for label, tau in zip(labels, taus))

    def others(i):
        return [taus[j] for j in range(4) if j != i]

    threshold_a = 0.5 if harmonic else 2 / 3
    met_a = any(any(t > threshold_a for t in others(i)) for i in cm)
    met_b = any(all(t > 0.5 for t in others(i)) for i in cm)
    met_c = False
    if cm and profile.T:
        T = profile.T_pair
        half = len(T) // 2
        for i in cm:
            Nb = profile.shared_Nbar(labels[i])
            ratio = np.max(Nb[half:] / np.where(T[half:] > 0, T[half:], np.inf))
            met_c = met_c or ratio > 0.8
    threshold_d = 2 / 3 if harmonic else 0.8
    met_d = sum(t > threshold_d for t in taus) >= 2
    met_e = sum(t > 0.75 for t in taus) >= 3
    met_f = all(t > 2 / 3 for t in taus)
    return [
        CorollaryCase("A", met_a, f"一个 CM 值且另一值 τ > {threshold_a:.3g}; {text}"),
        CorollaryCase("B", met_b, f"一个 CM 值且其余 τ > 1/2; {text}"),
        CorollaryCase("C", met_c, "一个 CM 值且 N̄(r,a)/T(r) > 4/5"),
        CorollaryCase("D", met_d, f"两个值 τ > {threshold_d:.3g}; {text}"),
        CorollaryCase("E", met_e, f"三个值 τ > 3/4; {text}"),
        CorollaryCase("F", met_f, f"全部 τ > 2/3; {text}"),
    ]


# -- growth of Φ --------------------------------------------------------------

def defect_factor(ell: int) -> Fraction:
    """(2ℓ + 1)(ℓ + 2)/(ℓ − 4), the constant of the lower bound for T(r, Φ)."""
    if ell <= 4:
        raise ValueError(f"ℓ 必须大于 4: {ell}")
    return Fraction((2 * ell + 1) * (ell + 2), ell - 4)


def optimal_defect_factor(lmin: int = 5, lmax: int = 40) -> Tuple[int, Fraction]:
    best = min(range(max(lmin, 5), lmax + 1), key=defect_factor)
    return best, defect_factor(best)


def check_phi_growth_bound(profile: NevProfile, phi: ExactFunc, phi_numeric: MeroFunc,
                           cm_flags: Sequence[bool], values: Sequence[Tuple[str, object]],
                           floor: float = SLACK_FLOOR) -> CheckResult:
    """T(r)/F ≤ T(r, Φ) + S(r) ≤ 2T(r) − 2N̄(r, ∞) + S(r) with F = 209/5."""
    if phi.is_constant:
        return CheckResult("phi_bound", HOLDS, detail="Φ 为常数: 所有值均按重数共享 (CM)",
                           witness={"phi": str(phi), "branch": "cm_all"})
    if not any(cm_flags):
        return CheckResult("phi_bound", INCONCLUSIVE, detail="前提不满足: 没有按重数共享的值",
                           witness={"phi": str(phi), "applicable": False})
    f_name, _ = _require_pair(profile)
    r = profile.radii
    T = profile.T_pair
    T_phi = characteristic_T(phi_numeric, r)
    infinity = [label for label, value in values if is_infinite(value)]
    poles = profile.Nbar[(f_name, infinity[0])] if infinity else np.zeros_like(r)
    _, factor = optimal_defect_factor()
    lower = _inequality("phi_lower", T / float(factor), T_phi, r, floor)
    upper = _inequality("phi_upper", T_phi, 2 * T - 2 * poles, r, floor)
    status = worst_status([lower, upper])
    margins = tuple(max(a, b) for a, b in zip(lower.margins, upper.margins))
    return CheckResult("phi_bound", status, tuple(float(x) for x in r), margins,
                       max(lower.slack, upper.slack), f"下界 {lower.status}, 上界 {upper.status}",
                       {"phi": str(phi), "factor": str(factor), "T_phi": [float(x) for x in T_phi],
                        "applicable": True})


# -- Mues' function -------------------------------------------------------------

def check_psi_smallness(f: ExactFunc, g: ExactFunc, finite_values: Sequence[object],
                        infinity_shared: bool = True) -> CheckResult:
    """Exact constancy of Ψ; records whether Φ_f and Φ_g are zero-free."""
    try:
        psi = mues_psi(f, g, finite_values, infinity_shared)
    except DegenerateInputError as exc:
        raise PreconditionError(str(exc)) from exc
    witness: Dict[str, object] = {"psi": str(psi)}
    if infinity_shared:
        phi_f, phi_g, _ = phi_pair(f, g, finite_values)
        witness["phi_f_zero_free"] = not divisor(phi_f).zeros()
        witness["phi_g_zero_free"] = not divisor(phi_g).zeros()
    if psi.is_constant:
        return CheckResult("psi_small", HOLDS, detail=f"Ψ = {psi.constant_value()}", witness=witness)
    return CheckResult("psi_small", FAILS, detail="Ψ 不是常数", witness=witness)


def _sharp_sup(func: MeroFunc, half: float, count: int) -> float:
    axis = np.linspace(-half, half, count)
    x, y = np.meshgrid(axis, axis)
    values = spherical_derivative(func, (x + 1j * y).ravel())
    return float(np.max(values))


def check_psi_constancy_under_bounded_sharp(f_numeric: MeroFunc, g_numeric: MeroFunc,
                                            f: ExactFunc, g: ExactFunc,
                                            finite_values: Sequence[object],
                                            half: float = 16.0, count: int = 161) -> CheckResult:
    """Bounded f^# + g^# on growing boxes together with an exactly constant Ψ."""
    if f.is_constant or g.is_constant:
        raise PreconditionError("f 与 g 必须都不是常数")
    inner = _sharp_sup(f_numeric, half / 2, count // 2 + 1) + _sharp_sup(g_numeric, half / 2, count // 2 + 1)
    outer = _sharp_sup(f_numeric, half, count) + _sharp_sup(g_numeric, half, count)
    bounded = outer <= 1.5 * inner + 1e-9
    psi = mues_psi(f, g, finite_values, True)
    witness = {"sup_inner": inner, "sup_outer": outer, "psi": str(psi)}
    if not bounded:
        return CheckResult("psi_sharp", INCONCLUSIVE, detail="球面导数无有界迹象", witness=witness)
    if psi.is_constant:
        return CheckResult("psi_sharp", HOLDS, detail=f"sup f^# + g^# ≈ {outer:.4g}, Ψ = {psi.constant_value()}",
                           witness=witness)
    return CheckResult("psi_sharp", FAILS, detail="球面导数有界但 Ψ 不是常数", witness=witness)
