"""Numerically evaluable meromorphic functions built from the exact catalog forms."""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exactfield import ExactFunc, derive
from app.core.places import EllipticModel, ExpModel
from app.core.poly import Poly
from app.core.quadfield import Coeff
from app.numeric.branches import BranchTracker, chordal, cubic_roots
from app.numeric.weierstrass import Lattice, lattice_from_cubic, wp, wp_second

logger = logging.getLogger(__name__)

Triple = Tuple[np.ndarray, np.ndarray, np.ndarray]

POLE_NUDGE = 1e-7


def _as_array(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


class MeroFunc:
    """Base class: ``evaluate`` returns (f, f', f'') as complex arrays."""

    name: str = "mero"

    def evaluate(self, z) -> Triple:
        raise NotImplementedError

    def value(self, z) -> np.ndarray:
        return self.evaluate(z)[0]

    def reciprocal(self, z) -> Tuple[np.ndarray, np.ndarray]:
        """(1/f, (1/f)') computed stably where |f| is large."""
        f, df, _ = self.evaluate(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inv = 1 / f
            dinv = -df * inv * inv
        inv = np.where(np.isfinite(f), inv, 0)
        return inv, dinv

    def __call__(self, z):
        return self.value(z)


@dataclass(frozen=True, eq=False)
class ConstantFunc(MeroFunc):
    c: complex
    name: str = "const"

    def evaluate(self, z) -> Triple:
        z = _as_array(z)
        return np.full(z.shape, complex(self.c)), np.zeros(z.shape, complex), np.zeros(z.shape, complex)


class RationalOfExp(MeroFunc):
    """R(e^z) for R ∈ K(u) in the exponential model."""

    def __init__(self, R: ExactFunc, name: str = "R(e^z)") -> None:
        if not isinstance(R.model, ExpModel):
            raise ValueError("RationalOfExp 需要指数模型")
        self.R = R
        self.name = name
        self._d1 = derive(R)
        self._d2 = derive(self._d1)
        self._inv = R.inverse() if not R.is_zero else None
        self._dinv = derive(self._inv) if self._inv is not None else None

    def evaluate(self, z) -> Triple:
        u = np.exp(_as_array(z))
        return (self.R.evaluate_complex(u), self._d1.evaluate_complex(u), self._d2.evaluate_complex(u))

    def reciprocal(self, z) -> Tuple[np.ndarray, np.ndarray]:
        u = np.exp(_as_array(z))
        if self._inv is None:
            return np.full(u.shape, complex(np.inf)), np.full(u.shape, complex(np.nan))
        return self._inv.evaluate_complex(u), self._dinv.evaluate_complex(u)


@dataclass(frozen=True)
class Uniformization:
    """u(z) = ℘(scale·z + shift) + offset solving (u')² = P(u)."""

    lattice: Lattice
    scale: complex
    shift: complex = 0j
    offset: complex = 0j

    def u(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        zeta = self.scale * _as_array(z) + self.shift
        p, dp = wp(zeta, self.lattice)
        p = np.atleast_1d(p)
        dp = np.atleast_1d(dp)
        u = p + self.offset
        du = self.scale * dp
        d2u = self.scale ** 2 * wp_second(p, self.lattice.g2)
        return u, du, d2u

    @property
    def periods(self) -> Tuple[complex, complex]:
        p1, p2 = self.lattice.periods
        return p1 / self.scale, p2 / self.scale

    @property
    def min_period(self) -> float:
        return self.lattice.min_period / abs(self.scale)

    def lattice_points(self, radius: float, center: complex = 0j) -> List[complex]:
        """Poles of u (in z) within ``radius`` of ``center``."""
        zeta_center = self.scale * center + self.shift
        points = self.lattice.points_in_disk(radius * abs(self.scale), zeta_center)
        return [(w - self.shift) / self.scale for w in points]

    def half_period_points(self) -> List[Tuple[complex, complex]]:
        """(z, e) for the three half-period classes nearest the origin, with ℘ = e there."""
        result = []
        for half in (self.lattice.omega1, self.lattice.omega2, self.lattice.omega1 + self.lattice.omega2):
            value, _ = wp(half, self.lattice)
            result.append(((half - self.shift) / self.scale, value + self.offset))
        return result


def elliptic_uniformization(P: Poly, shift: complex = 0j) -> Uniformization:
    """Solve (u')² = P(u) for cubic P by a shifted and scaled ℘."""
    coeffs = P.complex_coeffs()
    lead = coeffs[-1]
    roots = np.roots(coeffs[::-1])
    offset = complex(np.mean(roots))
    lattice = lattice_from_cubic(roots - offset)
    scale = cmath.sqrt(lead / 4)
    return Uniformization(lattice, scale, shift, offset)


class EllipticRat(MeroFunc):
    """(A + B·y)/D evaluated at u = u(z), y = u'(z)."""

    def __init__(self, expr: ExactFunc, uniform: Uniformization, name: str = "R(u, u')") -> None:
        if not isinstance(expr.model, EllipticModel):
            raise ValueError("EllipticRat 需要椭圆模型")
        self.expr = expr
        self.uniform = uniform
        self.name = name
        self._d1 = derive(expr)
        self._d2 = derive(self._d1)
        self._inv = expr.inverse() if not expr.is_zero else None
        self._dinv = derive(self._inv) if self._inv is not None else None

    @property
    def lattice(self) -> Lattice:
        return self.uniform.lattice

    def evaluate(self, z) -> Triple:
        u, du, _ = self.uniform.u(z)
        with np.errstate(all="ignore"):
            values = tuple(np.where(np.isfinite(u), h.evaluate_complex(u, du), complex(np.inf))
                           for h in (self.expr, self._d1, self._d2))
        return values

    def reciprocal(self, z) -> Tuple[np.ndarray, np.ndarray]:
        u, du, _ = self.uniform.u(z)
        if self._inv is None:
            return np.full(u.shape, complex(np.inf)), np.full(u.shape, complex(np.nan))
        with np.errstate(all="ignore"):
            inv = np.where(np.isfinite(u), self._inv.evaluate_complex(u, du), np.nan)
            dinv = np.where(np.isfinite(u), self._dinv.evaluate_complex(u, du), np.nan)
        return inv, dinv


def triple_coefficients(alpha: complex):
    """Rows (c2, c1, c0) of w³ + 3[(ᾱ+1)u² + 2u]w² − 3[2u² + (α+1)u]w − u³."""
    abar = alpha.conjugate()

    def coefficients(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        return np.stack([3 * ((abar + 1) * u * u + 2 * u),
                         -3 * (2 * u * u + (alpha + 1) * u),
                         -u ** 3], axis=-1)

    return coefficients


def triple_uniformization(alpha: complex) -> Uniformization:
    """v with (v')² = 4v(v+1)(v+α)."""
    roots = np.array([0, -1, -alpha], dtype=complex)
    offset = complex(roots.mean())
    return Uniformization(lattice_from_cubic(roots - offset), 1 + 0j, 0j, offset)


def make_tracker(alpha: complex, uniform: Uniformization, grid: int = 16) -> BranchTracker:
    """Branch tracker with its base point at the best-separated node of a coarse grid."""
    p1, p2 = uniform.periods
    s = np.linspace(0.05, 0.95, grid) + 0.0137
    x, y = np.meshgrid(s, s)
    nodes = (x * p1 + y * p2).ravel()
    u, _, _ = uniform.u(nodes)
    roots = cubic_roots(triple_coefficients(alpha)(u))
    sep = np.minimum(np.minimum(chordal(roots[:, 0], roots[:, 1]), chordal(roots[:, 0], roots[:, 2])),
                     chordal(roots[:, 1], roots[:, 2]))
    sep = np.where(np.isfinite(sep), sep, 0)
    base = complex(nodes[int(np.argmax(sep))])
    spacing = uniform.min_period / 12 * (1 + 1e-3 * math.pi)
    logger.debug("triple tracker base point %s, spacing %.4g", base, spacing)
    return BranchTracker(lambda z: uniform.u(z)[0], triple_coefficients(alpha), base, spacing)


class TripleBranch(MeroFunc):
    """One tracked root w_k(z) of the cubic with u = v(z)."""

    def __init__(self, alpha: complex, branch_index: int, uniform: Uniformization,
                 tracker: BranchTracker) -> None:
        if branch_index not in (0, 1, 2):
            raise ValueError(f"分支编号必须为 0, 1, 2: {branch_index}")
        self.alpha = complex(alpha)
        self.branch_index = branch_index
        self.uniform = uniform
        self.tracker = tracker
        self.name = f"w{branch_index}"
        self.pole_orders: dict = {}

    def evaluate(self, z) -> Triple:
        z = _as_array(z)
        u, du, d2u = self.uniform.u(z)
        w = self.tracker.roots(z)[:, self.branch_index]
        a, ab = self.alpha, self.alpha.conjugate()
        with np.errstate(all="ignore"):
            quad = (ab + 1) * u * u + 2 * u
            lin = 2 * u * u + (a + 1) * u
            f_w = 3 * w * w + 6 * quad * w - 3 * lin
            f_u = 3 * (2 * (ab + 1) * u + 2) * w * w - 3 * (4 * u + a + 1) * w - 3 * u * u
            f_ww = 6 * w + 6 * quad
            f_uw = 6 * (2 * (ab + 1) * u + 2) * w - 3 * (4 * u + a + 1)
            f_uu = 6 * (ab + 1) * w * w - 12 * w - 6 * u
            dw_du = -f_u / f_w
            d2w_du2 = -(f_uu + 2 * f_uw * dw_du + f_ww * dw_du * dw_du) / f_w
            dw = dw_du * du
            d2w = d2w_du2 * du * du + dw_du * d2u
        return w, dw, d2w

    def residual(self, z) -> np.ndarray:
        """|F(w, u)| relative to the size of its terms."""
        z = _as_array(z)
        u, _, _ = self.uniform.u(z)
        w = self.tracker.roots(z)[:, self.branch_index]
        c2, c1, c0 = np.moveaxis(triple_coefficients(self.alpha)(u), -1, 0)
        terms = np.abs(np.stack([w ** 3, c2 * w * w, c1 * w, c0]))
        return np.abs(w ** 3 + c2 * w * w + c1 * w + c0) / np.maximum(terms.max(axis=0), 1e-300)


def triple_branches(z, alpha: complex, tracker: BranchTracker) -> np.ndarray:
    """The three tracked roots at z, shape (n, 3)."""
    return tracker.roots(z)


def spherical_derivative(f: MeroFunc, z) -> np.ndarray:
    """f^# = |f'|/(1 + |f|²), via 1/f where |f| > 1."""
    result = _spherical(f, z)
    bad = ~np.isfinite(result)
    if np.any(bad):
        # poles sitting on lattice points: f^# is continuous, evaluate just beside them
        z = np.broadcast_to(np.asarray(z, dtype=complex), result.shape)
        moved = z[bad] + POLE_NUDGE * (1 + np.abs(z[bad])) * (1 + 0.37j)
        result = result.copy()
        result[bad] = _spherical(f, moved)
    return np.where(np.isfinite(result), result, 0.0)


def _spherical(f: MeroFunc, z) -> np.ndarray:
    value, dvalue, _ = f.evaluate(z)
    inv, dinv = f.reciprocal(z)
    with np.errstate(all="ignore"):
        direct = np.abs(dvalue) / (1 + np.abs(value) ** 2)
        flipped = np.abs(dinv) / (1 + np.abs(inv) ** 2)
    use_inv = ~np.isfinite(value) | (np.abs(value) > 1)
    return np.asarray(np.where(use_inv, flipped, direct), dtype=float)
