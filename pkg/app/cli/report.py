"""Plain-text rendering of exact functions, table rows, check results and profiles."""
from __future__ import annotations

import re
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.checks.theorems import CheckResult, CorollaryCase
from app.core.catalog import ExampleEntry, TableRow
from app.core.exactfield import ExactFunc
from app.core.places import ExpModel
from app.core.poly import Poly
from app.numeric.nevanlinna import NevProfile

_POWER = re.compile(r"u\^(\d+)")


def _exp_poly(poly: Poly) -> str:
    text = _POWER.sub(lambda m: f"e^{{{m.group(1)}z}}", str(poly))
    return re.sub(r"u(?![\^{])", "e^z", text)


def _exponential(power: int, coeff) -> str:
    body = {0: "", 1: "e^z", -1: "e^{-z}"}.get(power, f"e^{{{power}z}}")
    if not body:
        return str(coeff)
    if coeff == 1:
        return body
    if coeff == -1:
        return "-" + body
    return f"{coeff}·{body}"


def render(h: ExactFunc) -> str:
    """Readable form; u becomes e^z in the exponential model and y becomes u'."""
    if h.is_constant:
        return str(h.constant_value())
    if isinstance(h.model, ExpModel):
        A, D = h.A, h.D
        nonzero_a = [k for k, c in enumerate(A.coeffs) if not c.is_zero]
        nonzero_d = [k for k, c in enumerate(D.coeffs) if not c.is_zero]
        if len(nonzero_a) == 1 and len(nonzero_d) == 1:
            coeff = A.coeffs[nonzero_a[0]] / D.coeffs[nonzero_d[0]]
            return _exponential(nonzero_a[0] - nonzero_d[0], coeff)
        num, den = _exp_poly(A), _exp_poly(D)
    else:
        parts = []
        if not h.A.is_zero:
            parts.append(f"({h.A})" if h.A.degree > 0 else str(h.A))
        if not h.B.is_zero:
            parts.append(f"({h.B})·u'")
        num = " + ".join(parts) if parts else "0"
        den = str(h.D)
    if den == "1":
        return num
    return f"({num})/({den})"


def table_lines(rows: Sequence[Tuple[str, TableRow]]) -> str:
    header = "例子 | Φ_f | Φ_g | Ψ | Φ"
    lines = [header, "-" * len(header)]
    for example_id, row in rows:
        lines.append(" | ".join([example_id, render(row.phi_f), render(row.phi_g),
                                 render(row.psi), render(row.phi)]))
    return "\n".join(lines)


def table_payload(rows: Sequence[Tuple[str, TableRow]]) -> List[Dict[str, object]]:
    return [
        {
            "id": example_id,
            "finite_values": [str(v) for v in row.finite_values],
            "phi_f": row.phi_f.to_text(),
            "phi_g": row.phi_g.to_text(),
            "psi": str(row.psi.constant_value()) if row.psi.is_constant else row.psi.to_text(),
            "phi": row.phi.to_text(),
        }
        for example_id, row in rows
    ]


def verify_lines(entry: ExampleEntry, items: Iterable[Tuple[str, bool, str]]) -> str:
    lines = [f"[{entry.id}] {entry.title}"]
    for name, ok, text in items:
        mark = "通过" if ok else "失败"
        lines.append(f"  {mark}  {name}: {text}")
    return "\n".join(lines)


def check_lines(results: Dict[str, CheckResult]) -> str:
    width = max((len(name) for name in results), default=4)
    lines = []
    for name, result in results.items():
        lines.append(f"{name:<{width}}  {result.status:<12}  slack c = {result.slack:.3g}  {result.detail}")
    return "\n".join(lines)


def corollary_lines(cases: Sequence[CorollaryCase]) -> str:
    return "\n".join(f"({case.case}) {'满足' if case.hypothesis_met else '不满足'}  {case.detail}"
                     for case in cases)


def catalog_lines(entries: Sequence[Tuple[str, str, str]]) -> str:
    return "\n".join(f"{example_id:<18} {model:<9} {title}" for example_id, model, title in entries)


def profile_summary(profile: NevProfile, taus: Optional[Dict[str, float]] = None) -> str:
    r = profile.r_grid[-1]
    lines = [f"函数 {', '.join(profile.metadata.get('function_ids', profile.functions))}, "
             f"r ∈ [{profile.r_grid[0]:.4g}, {r:.4g}], {len(profile.r_grid)} 个半径"]
    for name in profile.functions:
        if name in profile.T:
            lines.append(f"  T(r, {name}) = {profile.T[name][-1]:.6g}")
    for label in profile.values:
        key = (profile.functions[0], label)
        parts = [f"  a = {label}:"]
        if key in profile.N:
            parts.append(f"N = {profile.N[key][-1]:.6g}, N̄ = {profile.Nbar[key][-1]:.6g}")
        if label in profile.Ns:
            parts.append(f"N_s = {profile.Ns[label][-1]:.6g}")
        if taus and label in taus:
            parts.append(f"τ ≈ {taus[label]:.3f}")
        lines.append(" ".join(parts))
    return "\n".join(lines)
