"""Derivation models and divisors of elements of K(u) and K(u)[y]/(y² − P(u)).

Zeros and poles are described by squarefree monic loci C(u) together with the
sheet information needed on the curve y² = P(u):

* ``plain``    a locus in the u-line (exponential model, y unused);
* ``both``     both places over each root of C, with the same order;
* ``branch``   the single ramified place over each root of C (C divides P);
* ``sheet``    the place (θ, Y(θ)) for each root θ of C, Y taken mod C;
* ``infinity`` the place at infinity of the elliptic curve.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from app.core.poly import Poly
from app.core.quadfield import Coeff

PLAIN = "plain"
BOTH = "both"
BRANCH = "branch"
SHEET = "sheet"
INFINITY = "infinity"


@dataclass(frozen=True)
class ExpModel:
    """u stands for e^z, so D(u) = u; u = 0 and u = ∞ are never attained."""

    name: str = "exp"

    def to_text(self) -> str:
        return "exp"


@dataclass(frozen=True)
class EllipticModel:
    """u, y with y² = P(u), D(u) = y and D(y) = P'(u)/2."""

    P: Poly
    name: str = "elliptic"

    def __post_init__(self) -> None:
        if self.P.degree != 3:
            raise ValueError(f"椭圆模型需要三次多项式 P, 实际为: {self.P}")
        if self.P.gcd(self.P.derivative()).degree > 0:
            raise ValueError(f"P 必须无重根: {self.P}")

    def to_text(self) -> str:
        return "elliptic" + self.P.to_text()


Model = Union[ExpModel, EllipticModel]


@dataclass(frozen=True)
class Atom:
    """A set of places that behave identically for every divisor in a comparison."""

    kind: str
    locus: Optional[Poly] = None
    sheet: Optional[Poly] = None

    @property
    def place_count(self) -> int:
        if self.kind == INFINITY:
            return 1
        count = self.locus.degree
        return 2 * count if self.kind == BOTH else count

    def describe(self) -> str:
        if self.kind == INFINITY:
            return "O (无穷远点)"
        roots = self.locus.rational_roots()
        if self.locus.degree == 1 and roots:
            where = f"u = {roots[0]}"
        else:
            where = f"{self.locus} = 0"
        if self.kind == BRANCH:
            return f"{where} (分支点)"
        if self.kind == SHEET:
            if self.locus.degree == 1:
                return f"{where}, y = {self.sheet.constant_value()}"
            return f"{where}, y ≡ {self.sheet}"
        if self.kind == BOTH:
            return f"{where} (两叶)"
        return where

    def sort_key(self) -> Tuple:
        if self.kind == INFINITY:
            return (1, 0, "", "")
        return (0, self.locus.degree, str(self.locus), str(self.sheet))


@dataclass(frozen=True)
class DivisorEntry:
    kind: str
    order: int
    locus: Optional[Poly] = None
    sheet: Optional[Poly] = None


@dataclass(frozen=True)
class Divisor:
    """Unrefined divisor: entries may overlap and are summed on refinement."""

    model: Model
    entries: Tuple[DivisorEntry, ...] = field(default_factory=tuple)

    def degree(self) -> int:
        """Sum of orders over all places; zero for a nonzero function."""
        return sum(order * atom.place_count for atom, order in self.orders().items())

    def orders(self) -> Dict[Atom, int]:
        atoms = refine_atoms([self])
        return {atom: order for atom, order in zip(atoms, orders_at(self, atoms)) if order}

    def zeros(self) -> Dict[Atom, int]:
        return {atom: order for atom, order in self.orders().items() if order > 0}

    def poles(self) -> Dict[Atom, int]:
        return {atom: -order for atom, order in self.orders().items() if order < 0}


def _split_ramified(locus: Poly, P: Optional[Poly]) -> Tuple[Poly, Poly]:
    if P is None:
        return Poly([1]), locus
    ramified = locus.gcd(P)
    return ramified, locus.exact_div(ramified)


def _remove_u(locus: Poly) -> Poly:
    if locus.degree >= 1 and locus[0].is_zero:
        return locus.exact_div(Poly.u())
    return locus


def divisor_of(A: Poly, B: Poly, D: Poly, model: Model) -> Divisor:
    """Divisor of (A + B·y)/D; A, B, D as stored by a normalized ExactFunc."""
    if A.is_zero and B.is_zero:
        raise ValueError("零函数没有除子")
    entries: List[DivisorEntry] = []
    if isinstance(model, ExpModel):
        for sign, poly in ((1, A), (-1, D)):
            for locus, k in poly.squarefree_decomposition():
                locus = _remove_u(locus)
                if locus.degree > 0:
                    entries.append(DivisorEntry(PLAIN, sign * k, locus))
        return Divisor(model, tuple(entries))

    P = model.P
    G = A.gcd(B)
    A1 = A.exact_div(G)
    B1 = B.exact_div(G)
    for locus, j in G.squarefree_decomposition():
        ramified, plain = _split_ramified(locus, P)
        if ramified.degree > 0:
            entries.append(DivisorEntry(BRANCH, 2 * j, ramified))
        if plain.degree > 0:
            entries.append(DivisorEntry(BOTH, j, plain))

    norm = A1 * A1 - B1 * B1 * P
    for locus, k in norm.squarefree_decomposition():
        ramified, plain = _split_ramified(locus, P)
        if ramified.degree > 0:
            entries.append(DivisorEntry(BRANCH, k, ramified))
        if plain.degree > 0:
            sheet = (-A1 * B1.inverse_mod(plain)) % plain
            entries.append(DivisorEntry(SHEET, k, plain, sheet))

    for locus, j in D.squarefree_decomposition():
        ramified, plain = _split_ramified(locus, P)
        if ramified.degree > 0:
            entries.append(DivisorEntry(BRANCH, -2 * j, ramified))
        if plain.degree > 0:
            entries.append(DivisorEntry(BOTH, -j, plain))

    deg_a = 2 * A.degree if not A.is_zero else None
    deg_b = 2 * B.degree + 3 if not B.is_zero else None
    num_pole = max(d for d in (deg_a, deg_b) if d is not None)
    at_infinity = 2 * D.degree - num_pole
    if at_infinity:
        entries.append(DivisorEntry(INFINITY, at_infinity))
    return Divisor(model, tuple(entries))


def _coprime_base(loci: Iterable[Poly]) -> List[Poly]:
    base: List[Poly] = []
    pending = [p.monic() for p in loci if p.degree > 0]
    while pending:
        p = pending.pop()
        for index, q in enumerate(base):
            if p == q:
                break
            g = p.gcd(q)
            if g.degree > 0:
                base.pop(index)
                pending.extend(x for x in (g, p.exact_div(g), q.exact_div(g)) if x.degree > 0)
                break
        else:
            base.append(p)
    return base


def _sheet_split(base: List[Poly], sheets: Sequence[Tuple[Poly, Poly]]) -> List[Poly]:
    """Split base loci until every sheet entry is ±(one reference) mod each locus."""
    changed = True
    while changed:
        changed = False
        for index, locus in enumerate(base):
            covering = [s % locus for c, s in sheets if locus.divides(c)]
            if not covering:
                continue
            ref = covering[0]
            for other in covering[1:]:
                plus = locus.gcd(other - ref)
                minus = locus.gcd(other + ref)
                if plus.degree > 0 and minus.degree > 0:
                    base[index:index + 1] = [plus, minus]
                    changed = True
                    break
            if changed:
                break
    return base


def refine_atoms(divisors: Sequence[Divisor]) -> List[Atom]:
    """Common refinement of several divisors on the same model."""
    entries = [e for div in divisors for e in div.entries]
    base = _coprime_base(e.locus for e in entries if e.locus is not None)
    sheets = [(e.locus, e.sheet) for e in entries if e.kind == SHEET]
    base = _sheet_split(base, sheets)
    atoms: List[Atom] = []
    for locus in base:
        kinds = {e.kind for e in entries if e.locus is not None and locus.divides(e.locus)}
        if BRANCH in kinds:
            atoms.append(Atom(BRANCH, locus))
        elif PLAIN in kinds:
            atoms.append(Atom(PLAIN, locus))
        elif SHEET in kinds:
            ref = next(s % locus for c, s in sheets if locus.divides(c))
            atoms.append(Atom(SHEET, locus, ref))
            atoms.append(Atom(SHEET, locus, (-ref) % locus))
        else:
            atoms.append(Atom(BOTH, locus))
    if any(e.kind == INFINITY for e in entries):
        atoms.append(Atom(INFINITY))
    atoms.sort(key=Atom.sort_key)
    return atoms


def orders_at(divisor: Divisor, atoms: Sequence[Atom]) -> List[int]:
    result: List[int] = []
    for atom in atoms:
        total = 0
        for entry in divisor.entries:
            if atom.kind == INFINITY or entry.kind == INFINITY:
                if atom.kind == entry.kind:
                    total += entry.order
                continue
            if not atom.locus.divides(entry.locus):
                continue
            if entry.kind == SHEET and atom.kind == SHEET:
                if ((entry.sheet - atom.sheet) % atom.locus).is_zero:
                    total += entry.order
            else:
                total += entry.order
        result.append(total)
    return result


def pattern_histogram(pairs: Iterable[Tuple[Atom, int, int]]) -> Counter:
    """Count places per (order_f, order_g) pair."""
    hist: Counter = Counter()
    for atom, mf, mg in pairs:
        hist[(mf, mg)] += atom.place_count
    return hist
