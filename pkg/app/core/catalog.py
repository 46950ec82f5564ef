"""Registry of the example pairs and the triple, in exact and numeric form.

Entries are built on first use, verified against the stored expectations in
``app/data/examples.json`` and cached; they are not modified afterwards.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.data_loader import DataLoaderError, ExampleRecord, TableRecord, load_example, load_examples
from app.core.exactfield import (ExactFunc, mues_psi, parse_exact, phi_pair, sharing_report)
from app.core.places import EllipticModel
from app.core.quadfield import Coeff, SphereValue, coerce_value, is_infinite
from app.numeric.branches import BranchTracker, BranchTrackingError
from app.numeric.meroeval import (EllipticRat, MeroFunc, RationalOfExp, TripleBranch, Uniformization,
                                  elliptic_uniformization, make_tracker, triple_uniformization)
from app.numeric.nevanlinna import locate_apoints

logger = logging.getLogger(__name__)

SEED = 20240607
AGREEMENT_TOL = 1e-9
ODE_TOL = 1e-9
MATCH_TOL = 1e-4


class CatalogError(RuntimeError):
    """Raised when an example fails its construction-time verification."""


class UnknownExampleError(CatalogError, KeyError):
    """Raised for an id that is not in the registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "未知的例子"


@dataclass(frozen=True)
class TableRow:
    finite_values: Tuple[SphereValue, ...]
    phi_f: ExactFunc
    phi_g: ExactFunc
    psi: ExactFunc
    phi: ExactFunc


@dataclass(frozen=True)
class ExampleEntry:
    record: ExampleRecord
    values: Tuple[SphereValue, ...]
    exact: Dict[str, ExactFunc]
    numeric: Dict[str, MeroFunc]
    pairs: Tuple[Tuple[str, str], ...]
    uniform: Optional[Uniformization] = None
    tracker: Optional[BranchTracker] = field(default=None, repr=False)
    alpha: Optional[Coeff] = None
    branch_periods: Optional[Tuple[complex, complex]] = None

    @property
    def id(self) -> str:
        return self.record.id

    @property
    def title(self) -> str:
        return self.record.title

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.record.values

    @property
    def cm(self) -> Tuple[bool, ...]:
        return self.record.cm

    @property
    def has_exact(self) -> bool:
        return bool(self.exact)

    def value_items(self) -> List[Tuple[str, SphereValue]]:
        return list(zip(self.labels, self.values))

    def finite_values(self) -> List[SphereValue]:
        return [v for v in self.values if not is_infinite(v)]

    @property
    def r_max(self) -> float:
        if self.record.rmax is not None:
            return self.record.rmax
        return self.record.rmax_periods * self.uniform.min_period

    def default_grid(self, count: int = 16, rmin: Optional[float] = None,
                     rmax: Optional[float] = None) -> np.ndarray:
        return np.geomspace(rmin or self.record.rmin, rmax or self.r_max, count)

    def numeric_of(self, h: ExactFunc, name: str = "h") -> MeroFunc:
        """Numeric form of an element of the entry's function field."""
        if isinstance(h.model, EllipticModel):
            return EllipticRat(h, self.uniform, f"{self.id}.{name}")
        return RationalOfExp(h, f"{self.id}.{name}")

    def difference(self, first: str = "f", second: str = "g") -> Optional[MeroFunc]:
        if not self.exact:
            return None
        return self.numeric_of(self.exact[first] - self.exact[second], f"{first}-{second}")

    def to_descriptor(self) -> Dict[str, object]:
        record = self.record
        descriptor: Dict[str, object] = {
            "id": record.id,
            "title": record.title,
            "description": record.description,
            "model": record.model,
            "functions": {name: h.to_text() for name, h in self.exact.items()},
            "numeric": {name: f.name for name, f in self.numeric.items()},
            "values": list(record.values),
            "cm": list(record.cm),
            "patterns": {label: sorted(list(pair) for pair in pairs)
                         for label, pairs in record.patterns.items()},
            "rmin": record.rmin,
            "rmax": self.r_max,
            "notes": list(record.notes),
        }
        if record.table is not None:
            descriptor["table"] = {
                "finite_values": list(record.table.finite_values),
                "phi_f": record.table.phi_f,
                "phi_g": record.table.phi_g,
                "psi": record.table.psi,
                "phi": record.table.phi,
            }
        if self.alpha is not None:
            descriptor["alpha"] = str(self.alpha)
        if self.branch_periods is not None:
            descriptor["branch_periods"] = [[p.real, p.imag] for p in self.branch_periods]
        return descriptor


# -- construction --------------------------------------------------------------

def ids() -> List[str]:
    return [record.id for record in load_examples()]


def _record(example_id: str) -> ExampleRecord:
    try:
        return load_example(example_id)
    except KeyError as exc:
        raise UnknownExampleError(f"未知的例子: {example_id}") from exc


def _sample_points(count: int, half: float) -> np.ndarray:
    rng = np.random.default_rng(SEED)
    return rng.uniform(-half, half, count) + 1j * rng.uniform(-half, half, count)


def _relative_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1.0)


def uniformization_residual(uniform: Uniformization, P_coeffs: Sequence[complex], z) -> np.ndarray:
    """Relative residual of (u')² = P(u) at z."""
    u, du, _ = uniform.u(z)
    rhs = np.polyval(np.asarray(P_coeffs, dtype=complex)[::-1], u)
    return np.abs(du * du - rhs) / np.maximum(np.abs(rhs) + np.abs(du) ** 2, 1.0)


def _verify_patterns(record: ExampleRecord, values, exact: Dict[str, ExactFunc]) -> None:
    f, g = exact["f"], exact["g"]
    for label, value, cm in zip(record.values, values, record.cm):
        report = sharing_report(f, g, value)
        expected = set(record.patterns.get(label, ()))
        if not report.shared or report.pairs() != expected or report.cm != cm:
            raise CatalogError(f"{record.id}: 值 {label} 的重数模式 {sorted(report.pairs())} "
                               f"与期望 {sorted(expected)} 不符")


def _build_field_pair(record: ExampleRecord) -> ExampleEntry:
    try:
        exact = {name: parse_exact(text) for name, text in record.functions.items()}
    except ValueError as exc:
        raise CatalogError(f"{record.id}: 函数文本无效") from exc
    values = tuple(coerce_value(v) for v in record.values)
    model = exact["f"].model
    points = _sample_points(50, 3.0)
    uniform = None
    if isinstance(model, EllipticModel):
        uniform = elliptic_uniformization(model.P)
        residual = uniformization_residual(uniform, model.P.complex_coeffs(), _sample_points(100, 3.0))
        if residual.max() > ODE_TOL:
            raise CatalogError(f"{record.id}: 微分方程残差过大 {residual.max():.3g}")
        numeric = {name: EllipticRat(h, uniform, f"{record.id}.{name}") for name, h in exact.items()}
        u, du, _ = uniform.u(points)
        direct = {name: h.evaluate_complex(u, du) for name, h in exact.items()}
    else:
        numeric = {name: RationalOfExp(h, f"{record.id}.{name}") for name, h in exact.items()}
        direct = {name: h.evaluate_complex(np.exp(points)) for name, h in exact.items()}
    for name, func in numeric.items():
        gap = _relative_gap(func.value(points), direct[name])
        if np.nanmax(gap) > AGREEMENT_TOL:
            raise CatalogError(f"{record.id}.{name}: 精确形式与数值形式不一致")
    _verify_patterns(record, values, exact)
    return ExampleEntry(record, values, exact, numeric, (("f", "g"),), uniform)


def _compose(first: Sequence[int], second: Sequence[int]) -> Tuple[int, ...]:
    return tuple(first[k] for k in second)


def _power(sigma: Sequence[int], n: int) -> Tuple[int, ...]:
    result = tuple(range(len(sigma)))
    if n < 0:
        inverse = [0] * len(sigma)
        for k, image in enumerate(sigma):
            inverse[image] = k
        sigma, n = tuple(inverse), -n
    for _ in range(n):
        result = _compose(sigma, result)
    return result


def branch_lattice(periods: Tuple[complex, complex], sigmas: Tuple[Sequence[int], Sequence[int]],
                   span: int = 3) -> Tuple[complex, complex, int]:
    """Basis of the periods m·p1 + n·p2 that return every branch to itself, and its index."""
    identity = tuple(range(len(sigmas[0])))
    kernel = [(m, n) for m, n in product(range(-span, span + 1), repeat=2)
              if (m, n) != (0, 0) and _compose(_power(sigmas[0], m), _power(sigmas[1], n)) == identity]
    length = lambda v: abs(v[0] * periods[0] + v[1] * periods[1])
    kernel.sort(key=lambda v: (length(v), v))
    best = None
    for a, b in combinations(kernel, 2):
        det = abs(a[0] * b[1] - a[1] * b[0])
        if det and (best is None or det < best[0]):
            best = (det, a, b)
    if best is None:
        raise CatalogError("无法确定分支的周期格")
    det, a, b = best
    return a[0] * periods[0] + a[1] * periods[1], b[0] * periods[0] + b[1] * periods[1], det


def _build_triple(record: ExampleRecord) -> ExampleEntry:
    alpha = Coeff.parse(record.alpha)
    if alpha ** 3 != -1 or alpha == -1:
        raise CatalogError(f"α 必须是 -1 的非实三次根: {alpha}")
    a = complex(alpha)
    uniform = triple_uniformization(a)
    P = [0, 4 * a, 4 * (1 + a), 4]
    residual = uniformization_residual(uniform, P, _sample_points(100, 2.0))
    if residual.max() > ODE_TOL:
        raise CatalogError(f"{record.id}: 微分方程残差过大 {residual.max():.3g}")
    tracker = make_tracker(a, uniform)
    numeric = {f"w{k}": TripleBranch(a, k, uniform, tracker) for k in range(3)}
    for func in numeric.values():
        func.name = f"{record.id}.{func.name}"
    try:
        p1, p2 = uniform.periods
        sigmas = (tracker.monodromy(p1), tracker.monodromy(p2))
    except BranchTrackingError as exc:
        raise CatalogError(f"{record.id}: 单值化置换计算失败") from exc
    b1, b2, index = branch_lattice((p1, p2), sigmas)
    logger.info("triple monodromy %s, %s; branch lattice index %d", sigmas[0], sigmas[1], index)
    if index != 3:
        raise CatalogError(f"{record.id}: 分支周期格的指数为 {index}, 期望 3")
    values = tuple(coerce_value(v) for v in record.values)
    pairs = tuple(combinations(sorted(numeric), 2))
    return ExampleEntry(record, values, {}, numeric, pairs, uniform, tracker, alpha, (b1, b2))


def build(example_id: str) -> ExampleEntry:
    """The verified entry for ``example_id`` or one of its aliases; raises UnknownExampleError or CatalogError."""
    try:
        record = _record(example_id)
    except DataLoaderError as exc:
        raise CatalogError(str(exc)) from exc
    return _build(record.id)


@lru_cache(maxsize=None)
def _build(example_id: str) -> ExampleEntry:
    record = _record(example_id)
    logger.debug("building example %s", example_id)
    if record.model == "triple":
        return _build_triple(record)
    return _build_field_pair(record)


def from_expressions(f_text: str, g_text: str, values_text: str) -> ExampleEntry:
    """Ad-hoc entry from two canonical function texts and comma-separated shared values.

    Patterns and table entries are taken from the functions themselves, so
    only the numeric agreement is verified.
    """
    labels = tuple(part.strip() for part in values_text.split(",") if part.strip())
    try:
        f, g = parse_exact(f_text), parse_exact(g_text)
        values = tuple(coerce_value(label) for label in labels)
    except ValueError as exc:
        raise CatalogError(f"表达式无效: {exc}") from exc
    reports = [sharing_report(f, g, value) for value in values]
    finite = [label for label, value in zip(labels, values) if not is_infinite(value)]
    table = None
    if len(finite) == 3 and len(labels) == 4:
        phi_f, phi_g, phi = phi_pair(f, g, [coerce_value(label) for label in finite])
        psi = mues_psi(f, g, [coerce_value(label) for label in finite])
        if psi.is_constant:
            table = TableRecord(tuple(finite), phi_f.to_text(), phi_g.to_text(), str(psi.constant_value()),
                                phi.to_text())
    model = "elliptic" if isinstance(f.model, EllipticModel) else "exp"
    record = ExampleRecord(
        id="adhoc",
        title="命令行给出的函数对",
        description="",
        model=model,
        functions={"f": f.to_text(), "g": g.to_text()},
        values=labels,
        cm=tuple(report.cm for report in reports),
        patterns={label: tuple(sorted(report.pairs())) for label, report in zip(labels, reports)},
        table=table,
        rmin=2.0,
        rmax=30.0 if model == "exp" else None,
        rmax_periods=None if model == "exp" else 3.0,
    )
    return _build_field_pair(record)


def expected_patterns(entry: Union[str, ExampleEntry]) -> Dict[str, FrozenSet[Tuple[int, int]]]:
    """Stored multiplicity patterns per shared value, by example id or for an already built entry."""
    if isinstance(entry, str):
        entry = build(entry)
    return {label: frozenset(pairs) for label, pairs in entry.record.patterns.items()}


def expected_table(entry: ExampleEntry) -> Optional[TableRow]:
    table = entry.record.table
    if table is None:
        return None
    model = entry.exact["f"].model
    return TableRow(
        finite_values=tuple(coerce_value(v) for v in table.finite_values),
        phi_f=parse_exact(table.phi_f),
        phi_g=parse_exact(table.phi_g),
        psi=ExactFunc.constant(Coeff.parse(table.psi), model),
        phi=parse_exact(table.phi),
    )


def computed_table(entry: ExampleEntry) -> Optional[TableRow]:
    """Φ_f, Φ_g, Ψ and Φ recomputed from the exact forms."""
    if entry.record.table is None:
        return None
    f, g = entry.exact["f"], entry.exact["g"]
    finite = tuple(coerce_value(v) for v in entry.record.table.finite_values)
    phi_f, phi_g, phi = phi_pair(f, g, finite)
    return TableRow(finite, phi_f, phi_g, mues_psi(f, g, finite), phi)


def triple_cell_points(entry: ExampleEntry, value) -> List[Tuple[complex, Tuple[int, ...]]]:
    """c-points of the three branches in one parallelogram of the branch lattice.

    Returns each location with the multiplicities (w0, w1, w2) there.
    """
    if entry.branch_periods is None:
        raise CatalogError(f"{entry.id} 不是三函数例子")
    b1, b2 = entry.branch_periods
    shift = 0.0173 * b1 + 0.0291 * b2
    corner = -(b1 + b2) / 2 + shift
    radius = (abs(b1) + abs(b2)) / 2 + abs(shift) + 1e-3
    det = (b1.conjugate() * b2).imag
    names = sorted(entry.numeric)
    locations: List[Tuple[complex, List[int]]] = []
    for index, name in enumerate(names):
        found = locate_apoints(entry.numeric[name], value, radius)
        for z, m in found.points:
            w = z - corner
            s = (w.conjugate() * b2).imag / det
            t = (b1.conjugate() * w).imag / det
            if not (0 <= s < 1 and 0 <= t < 1):
                continue
            for point, mults in locations:
                if abs(point - z) <= MATCH_TOL * max(1.0, abs(z)):
                    mults[index] = m
                    break
            else:
                mults = [0] * len(names)
                mults[index] = m
                locations.append((z, mults))
    locations.sort(key=lambda item: (round(abs(item[0]), 9), math.atan2(item[0].imag, item[0].real)))
    return [(z, tuple(mults)) for z, mults in locations]
