"""Command implementations; each returns a process exit code.

0 success or check holds, 1 usage or configuration error, 2 verification
failure or check fails, 3 numerical non-convergence, 4 inconclusive check.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.checks import theorems
from app.checks.theorems import CheckResult, PreconditionError
from app.core import catalog
from app.core.catalog import CatalogError, ExampleEntry, UnknownExampleError
from app.core.config import ConfigError, RunConfig
from app.core.data_loader import load_examples
from app.core.exactfield import (ExactFieldError, ab_point_implication, aux_identity, four_value_relation,
                                 polya_relation, pq_pattern, sharing_report)
from app.core.quadfield import coerce_value, is_infinite
from app.numeric import export
from app.numeric.nevanlinna import NevProfile, NumericalError, compute_profile, tau_estimate
from app.cli import report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4

_STATUS_EXIT = {theorems.HOLDS: EXIT_OK, theorems.FAILS: EXIT_FAILED, theorems.INCONCLUSIVE: EXIT_INCONCLUSIVE}
CHECKS = ("five", "four", "keylemma", "phibound", "psisharp", "psi", "corollary")
# profile results go out as JSON plus CSV unless a single format is asked for
PROFILE_FORMATS = {"json": ("json", "csv")}


def _emit(text: str) -> None:
    print(text)


# -- entries -----------------------------------------------------------------

def _entry(config: RunConfig) -> ExampleEntry:
    if config.f_expr or config.g_expr:
        if not (config.f_expr and config.g_expr and config.values):
            raise ConfigError("表达式模式需要 --f, --g 与 --values")
        return catalog.from_expressions(config.f_expr, config.g_expr, config.values)
    if not config.example:
        raise ConfigError("需要指定例子或表达式")
    return catalog.build(config.example)


# -- verify ------------------------------------------------------------------

def _verify_exact(entry: ExampleEntry) -> List[Tuple[str, bool, str]]:
    f, g = entry.exact["f"], entry.exact["g"]
    items: List[Tuple[str, bool, str]] = []
    expected = catalog.expected_patterns(entry)
    patterns = []
    for label, value in entry.value_items():
        pattern = sharing_report(f, g, value)
        patterns.append(pattern)
        ok = pattern.shared and pattern.pairs() == set(expected.get(label, ()))
        text = ", ".join(f"({a}, {b})" for a, b in sorted(pattern.pairs())) or "未取到 (Picard 值)"
        items.append((f"共享值 {label}", ok, f"{text}{' CM' if pattern.cm else ''}"))
    row, wanted = catalog.computed_table(entry), catalog.expected_table(entry)
    if row is not None:
        for name in ("phi_f", "phi_g", "psi", "phi"):
            got = getattr(row, name)
            items.append((name, got == getattr(wanted, name), report.render(got)))
        items.append(("Mues 函数", row.psi.is_constant, f"Ψ = {report.render(row.psi)}"))
    for a, b in entry.record.implications:
        forward, _ = ab_point_implication(f, g, a, b)
        items.append((f"f = {a} ⇒ g = {b}", forward, "成立" if forward else "不成立"))
    finite = entry.finite_values()
    if not any(entry.cm):
        pq = pq_pattern(patterns)
        items.append(("(p, q) 模式", pq is not None and pq.within_bound,
                      f"({pq.p}, {pq.q})" if pq else "无统一模式"))
    elif len(finite) >= 3 and all(entry.cm):
        middle = polya_relation(f, g, finite[:3])
        items.append(("Pólya 关系", middle is not None, f"中间值 {middle}"))
    if len(entry.values) == 4:
        relation = four_value_relation(f, g, list(entry.values))
        items.append(("四值定理结论", True, f"成立, M: {relation.mobius}" if relation else "不成立"))
    for preset in ("phi40", "phi31", "phi22", "chi"):
        try:
            verdict = aux_identity(preset, f, g, _aux_values(entry, preset))
        except ExactFieldError as exc:
            items.append((preset, True, f"不适用: {exc}"))
            continue
        items.append((preset, True, verdict.describe()))
    return items


def _aux_values(entry: ExampleEntry, preset: str) -> List[object]:
    if preset == "phi31":
        return _psi_finite(entry)
    if preset in {"phi22", "chi"}:
        return [v for v in entry.finite_values() if not v.is_zero][:2]
    return []


def _verify_triple(entry: ExampleEntry) -> List[Tuple[str, bool, str]]:
    items: List[Tuple[str, bool, str]] = [("α³ = -1", entry.alpha ** 3 == -1, f"α = {entry.alpha}")]
    for label, value in entry.value_items():
        cells = catalog.triple_cell_points(entry, value)
        multisets = [tuple(sorted(m)) for _, m in cells]
        ok = len(cells) == 3 and all(m == (1, 1, 4) for m in multisets)
        items.append((f"值 {label} 的周期平行四边形", ok, f"{len(cells)} 个值点, 重数 {multisets}"))
    return items


def cmd_verify(config: RunConfig) -> int:
    entry = _entry(config)
    items = _verify_exact(entry) if entry.has_exact else _verify_triple(entry)
    _emit(report.verify_lines(entry, items))
    return EXIT_OK if all(ok for _, ok, _ in items) else EXIT_FAILED


# -- table -----------------------------------------------------------------

def cmd_table(config: RunConfig, entries: Optional[Sequence[ExampleEntry]] = None) -> int:
    if entries is None:
        entries = [catalog.build(example_id) for example_id in catalog.ids()]
    rows, mismatched = [], []
    for entry in entries:
        row = catalog.computed_table(entry)
        if row is None:
            continue
        rows.append((entry.id, row))
        if row != catalog.expected_table(entry):
            mismatched.append(entry.id)
    if config.format == "json":
        _emit(export.dumps_json({"rows": report.table_payload(rows)}).rstrip())
    else:
        _emit(report.table_lines(rows))
    for example_id in mismatched:
        logger.error("表格行与存储的期望不符: %s", example_id)
    return EXIT_FAILED if mismatched else EXIT_OK


# -- profiles --------------------------------------------------------------

def _grid(config: RunConfig, entry: ExampleEntry) -> np.ndarray:
    return config.grid(entry.record.rmin, entry.r_max)


def pair_profile(entry: ExampleEntry, pair: Tuple[str, str], config: RunConfig,
                 functionals: Sequence[str] = ("T", "m", "N", "Ns"),
                 extra_values: Sequence[object] = ()) -> NevProfile:
    """Profile of one pair; adds N̄ of the zeros of f − g, and of f − b, g − b for each b."""
    first, second = pair
    functions = {"f": entry.numeric[first], "g": entry.numeric[second]}
    extras = {}
    difference = entry.difference(first, second)
    if difference is not None:
        extras["Nbar[f-g]"] = (difference, 0)
    for b in extra_values:
        extras["Nbar[f-b]"] = (functions["f"], b)
        extras["Nbar[g-b]"] = (functions["g"], b)
    if entry.tracker is not None:
        functionals = [name for name in functionals if name not in {"T", "m"}]
    return compute_profile(functions, entry.value_items(), _grid(config, entry), functionals=functionals,
                           extras=extras, tol_quad=config.tol_quad, tol_root=config.tol_root,
                           metadata={"example": entry.id, "pair": list(pair)})


def _stem(config: RunConfig, entry: ExampleEntry, *parts: str) -> Path:
    return config.out / "_".join((entry.id,) + parts)


def cmd_profile(config: RunConfig) -> int:
    entry = _entry(config)
    for pair in entry.pairs:
        profile = pair_profile(entry, pair, config)
        suffix = () if len(entry.pairs) == 1 else pair
        if config.format != "text":
            formats = PROFILE_FORMATS.get(config.format, (config.format,))
            export.write_profile(profile, _stem(config, entry, *suffix), formats)
        taus = {label: tau_estimate(profile, label) for label in profile.values if label in profile.Ns}
        _emit(report.profile_summary(profile, taus))
    return EXIT_OK


# -- checks ----------------------------------------------------------------

def _require_exact(entry: ExampleEntry, which: str) -> None:
    if not entry.has_exact:
        raise ConfigError(f"检查 {which} 需要精确形式, {entry.id} 没有")


def _run_check(entry: ExampleEntry, which: str, config: RunConfig) -> Dict[str, CheckResult]:
    floor = config.slack_floor
    values = entry.value_items()
    if which == "four":
        _require_exact(entry, which)
        return {"four": theorems.check_four_value_conclusion(entry.exact["f"], entry.exact["g"],
                                                             list(entry.values))}
    if which == "psi":
        _require_exact(entry, which)
        return {"psi": theorems.check_psi_smallness(entry.exact["f"], entry.exact["g"], _psi_finite(entry))}
    if which == "psisharp":
        _require_exact(entry, which)
        return {"psisharp": theorems.check_psi_constancy_under_bounded_sharp(
            entry.numeric["f"], entry.numeric["g"], entry.exact["f"], entry.exact["g"], _psi_finite(entry))}
    if which == "keylemma":
        results: Dict[str, CheckResult] = {}
        for pair in entry.pairs:
            profile = pair_profile(entry, pair, config, functionals=("N", "Ns"))
            exact = (entry.exact["f"], entry.exact["g"]) if entry.has_exact else None
            found = theorems.check_key_lemma(profile, values, exact, floor=floor)
            prefix = "" if len(entry.pairs) == 1 else f"{pair[0]}/{pair[1]} "
            results.update({prefix + name: result for name, result in found.items()})
        return results
    if which == "five":
        _require_exact(entry, which)
        test_value = next(b for b in (2, 3, 5, 7) if all(is_infinite(v) or v != b for v in entry.values))
        profile = pair_profile(entry, ("f", "g"), config, functionals=("T", "N"), extra_values=(test_value,))
        return theorems.check_five_value_conditions(profile, values, floor=floor)
    if which == "phibound":
        _require_exact(entry, which)
        profile = pair_profile(entry, ("f", "g"), config, functionals=("T", "N"))
        row = catalog.computed_table(entry)
        if row is None:
            raise ConfigError(f"{entry.id} 没有 Φ")
        phi_numeric = entry.numeric_of(row.phi, "Phi")
        return {"phibound": theorems.check_phi_growth_bound(profile, row.phi, phi_numeric, entry.cm, values,
                                                           floor=floor)}
    if which == "corollary":
        pair = entry.pairs[0]
        functionals = ("T", "N", "Ns") if entry.has_exact else ("N", "Ns")
        profile = pair_profile(entry, pair, config, functionals=functionals)
        cases = theorems.corollary_report(profile, values, entry.cm)
        _emit(report.corollary_lines(cases))
        return {"corollary": CheckResult("corollary", theorems.HOLDS,
                                         detail=", ".join(c.case for c in cases if c.hypothesis_met) or "无",
                                         witness={c.case: c.hypothesis_met for c in cases})}
    raise ConfigError(f"未知的检查: {which}; 可选 {', '.join(CHECKS)}")


def _psi_finite(entry: ExampleEntry) -> List[object]:
    if entry.record.table is not None:
        return [coerce_value(v) for v in entry.record.table.finite_values]
    return entry.finite_values()[:3]


def cmd_check(config: RunConfig) -> int:
    entry = _entry(config)
    which = config.which or ""
    results = _run_check(entry, which, config)
    _emit(report.check_lines(results))
    payload = {"example": entry.id, "check": which,
               "results": {name: result.to_dict() for name, result in results.items()}}
    export.write_atomic(_stem(config, entry, which).with_suffix(".json"), export.dumps_json(payload))
    status = theorems.worst_status(list(results.values()))
    return _STATUS_EXIT[status]


# -- catalog -----------------------------------------------------------------

def cmd_catalog(config: RunConfig) -> int:
    action = config.which or "list"
    if action == "list":
        _emit(report.catalog_lines([(r.id, r.model, r.title) for r in load_examples()]))
        return EXIT_OK
    entry = _entry(config)
    descriptor = entry.to_descriptor()
    if action == "describe":
        _emit(export.dumps_json(descriptor).rstrip())
        return EXIT_OK
    if action == "export":
        export.write_atomic((config.out / entry.id).with_suffix(".json"), export.dumps_json(descriptor))
        return EXIT_OK
    raise ConfigError(f"未知的 catalog 操作: {action}")


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "verify": cmd_verify,
    "table": cmd_table,
    "profile": cmd_profile,
    "check": cmd_check,
    "catalog": cmd_catalog,
}


def dispatch(config: RunConfig) -> int:
    """Run ``config.command`` and map exceptions to exit codes."""
    try:
        return COMMANDS[config.command](config)
    except (UnknownExampleError, ConfigError, PreconditionError, export.ExportError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except NumericalError as exc:
        logger.error("数值计算失败: %s", exc)
        return EXIT_NUMERIC
    except (CatalogError, ExactFieldError) as exc:
        logger.error("验证失败: %s", exc)
        return EXIT_FAILED
