"""Numerical value-distribution functionals over disks |z| ≤ r.

a-points are located with the argument principle (``contour.locate_zeros``)
applied to a holomorphic-away-from-known-poles numerator built per function
family; counting functions integrate the resulting step functions exactly.
The characteristic is the Ahlfors–Shimizu form, normalized at the origin so
that T(r) = m̊(r, ∞) + N(r, ∞).
"""
from __future__ import annotations

import cmath
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from app.core.quadfield import Coeff, INF, is_infinite
from app.numeric.contour import (ContourError, NumericalError, QuadratureError, Rect, ZeroFunc,
                                 circle_winding, locate_zeros)
from app.numeric.meroeval import (ConstantFunc, EllipticRat, MeroFunc, RationalOfExp, TripleBranch,
                                  spherical_derivative)

__all__ = [
    "APointList", "NevProfile", "NumericalError", "ContourError", "QuadratureError",
    "SharingInconsistencyError", "locate_apoints", "counting_N", "counting_from_points",
    "proximity_m", "spherical_proximity", "characteristic_T", "simultaneous_simple_Ns",
    "tau_estimate", "deficiency_estimate", "compute_profile", "worker_count", "value_label",
]

logger = logging.getLogger(__name__)

NUDGE_FACTOR = 1e-4
NUDGE_LIMIT = 3
BOUNDARY_GAP = 1e-6
MATCH_TOL = 1e-4
SEARCH_SCALES = (1.05, 1.0713, 1.0931)
ORIGIN_RADIUS = 1e-3
# relative half-width of the annulus whose a-points refine the m(r, a) quadrature
NEAR_BAND = 1e-2


class SharingInconsistencyError(NumericalError):
    """Raised when the a-points of two functions sharing a do not pair up."""


def value_label(a) -> str:
    if is_infinite(a):
        return "∞"
    if isinstance(a, Coeff):
        return str(a)
    c = complex(a)
    if c.imag == 0:
        return repr(c.real) if c.real != int(c.real) else str(int(c.real))
    return f"{c.real!r}{c.imag:+}j"


def _numeric(a):
    if is_infinite(a):
        return INF
    return complex(a)


def _degree(coeffs: np.ndarray) -> int:
    coeffs = np.asarray(coeffs, dtype=complex)
    size = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if size == 0:
        return -1
    nonzero = np.nonzero(np.abs(coeffs) > 1e-14 * size)[0]
    return int(nonzero[-1])


def _combine(p: np.ndarray, q: np.ndarray, a: complex) -> np.ndarray:
    """Coefficients of p − a·q, ascending."""
    size = max(len(p), len(q))
    out = np.zeros(size, dtype=complex)
    out[:len(p)] += p
    out[:len(q)] -= a * q
    return out


def _polyval(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    if len(coeffs) == 0:
        return np.zeros_like(x)
    return np.polyval(coeffs[::-1], x)


def _polyder(coeffs: np.ndarray) -> np.ndarray:
    if len(coeffs) <= 1:
        return np.zeros(1, dtype=complex)
    return coeffs[1:] * np.arange(1, len(coeffs))


@dataclass(frozen=True)
class APointList:
    """a-points of a function in the closed disk |z| ≤ radius."""

    value: object
    radius: float
    points: Tuple[Tuple[complex, int], ...]

    @property
    def total_with_mult(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def distinct(self) -> int:
        return len(self.points)

    def within(self, r: float) -> List[Tuple[complex, int]]:
        return [(z, m) for z, m in self.points if abs(z) <= r]

    def multiplicities(self) -> List[int]:
        return [m for _, m in self.points]


@dataclass
class _ZeroProblem:
    """Zeros of ``func`` (minus the zeros of ``cancel``) plus fixed a-points at lattice points."""

    func: Optional[ZeroFunc]
    poles: Callable[[float], List[Tuple[complex, int]]] = lambda radius: []
    cancel: Optional["_ZeroProblem"] = None
    fixed: Callable[[float], List[Tuple[complex, int]]] = lambda radius: []


def _exp_problem(f: RationalOfExp, a) -> _ZeroProblem:
    A = np.asarray(f.R.A.complex_coeffs(), dtype=complex)
    D = np.asarray(f.R.D.complex_coeffs(), dtype=complex)
    q = D if is_infinite(a) else _combine(A, D, a)
    deg = _degree(q)
    if deg < 0:
        raise ValueError(f"函数恒等于 {value_label(a)}")
    if deg == 0:
        return _ZeroProblem(None)
    q = q[:deg + 1]
    dq = q * np.arange(len(q))

    def func(z):
        u = np.exp(z)
        return _polyval(q, u), _polyval(dq, u)

    return _ZeroProblem(func)


def _elliptic_numerator(uniform, A: np.ndarray, B: np.ndarray) -> Tuple[Optional[ZeroFunc], int]:
    """(h, h') for A(u) + B(u)·u' with its pole order at the lattice points."""
    degA, degB = _degree(A), _degree(B)
    if degA < 0 and degB < 0:
        return None, 0
    order = max(2 * degA if degA >= 0 else 0, 2 * degB + 3 if degB >= 0 else 0)
    if order == 0:
        return None, 0
    A = A[:degA + 1] if degA >= 0 else np.zeros(1, dtype=complex)
    B = B[:degB + 1] if degB >= 0 else np.zeros(1, dtype=complex)
    dA, dB = _polyder(A), _polyder(B)

    def func(z):
        u, du, d2u = uniform.u(z)
        bu = _polyval(B, u)
        h = _polyval(A, u) + bu * du
        dh = _polyval(dA, u) * du + _polyval(dB, u) * du * du + bu * d2u
        return h, dh

    return func, order


def _elliptic_problem(f: EllipticRat, a) -> _ZeroProblem:
    uniform = f.uniform
    A = np.asarray(f.expr.A.complex_coeffs(), dtype=complex)
    B = np.asarray(f.expr.B.complex_coeffs(), dtype=complex)
    D = np.asarray(f.expr.D.complex_coeffs(), dtype=complex)
    empty = np.zeros(1, dtype=complex)
    if is_infinite(a):
        main, main_order = _elliptic_numerator(uniform, D, empty)
        cancel, cancel_order = _elliptic_numerator(uniform, A, B)
    else:
        numerator = _combine(A, D, a)
        if _degree(numerator) < 0 and _degree(B) < 0:
            raise ValueError(f"函数恒等于 {value_label(a)}")
        main, main_order = _elliptic_numerator(uniform, numerator, B)
        cancel, cancel_order = _elliptic_numerator(uniform, D, empty)
    # order of f − a (or of 1/f) at the lattice points
    lattice_order = cancel_order - main_order

    def lattice_poles(order):
        return lambda radius: [(p, order) for p in uniform.lattice_points(radius)]

    def fixed(radius):
        if lattice_order <= 0:
            return []
        return [(p, lattice_order) for p in uniform.lattice_points(radius)]

    cancel_problem = _ZeroProblem(cancel, lattice_poles(cancel_order)) if cancel is not None else None
    return _ZeroProblem(main, lattice_poles(main_order), cancel_problem, fixed)


def _branch_pole_orders(f: TripleBranch, radius: float) -> List[Tuple[complex, int]]:
    """Pole orders of a tracked branch at the lattice points of v, by local winding."""
    cache: Dict[complex, int] = f.pole_orders
    small = 0.05 * f.uniform.min_period

    def func(z):
        w, dw, _ = f.evaluate(z)
        return w, dw

    result = []
    for point in f.uniform.lattice_points(radius):
        key = complex(round(point.real, 9), round(point.imag, 9))
        if key not in cache:
            cache[key] = -int(round(circle_winding(func, point, small)))
        if cache[key] > 0:
            result.append((point, cache[key]))
    return result


def _triple_problem(f: TripleBranch, a) -> _ZeroProblem:
    poles = lambda radius: _branch_pole_orders(f, radius)
    if is_infinite(a):
        return _ZeroProblem(None, fixed=poles)
    c = complex(a)

    def func(z):
        w, dw, _ = f.evaluate(z)
        return w - c, dw

    return _ZeroProblem(func, poles)


def _problem(f: MeroFunc, a) -> _ZeroProblem:
    a = _numeric(a)
    if isinstance(f, ConstantFunc):
        if not is_infinite(a) and complex(f.c) == a:
            raise ValueError(f"函数恒等于 {value_label(a)}")
        return _ZeroProblem(None)
    if isinstance(f, RationalOfExp):
        return _exp_problem(f, a)
    if isinstance(f, EllipticRat):
        return _elliptic_problem(f, a)
    if isinstance(f, TripleBranch):
        return _triple_problem(f, a)
    raise TypeError(f"不支持的函数类型: {type(f).__name__}")


def _zeros_in_square(problem: _ZeroProblem, half: float, tol_root: float) -> List[Tuple[complex, int]]:
    if problem.func is None:
        return []
    region = Rect.square(0j, half)
    return locate_zeros(problem.func, region, problem.poles(half * math.sqrt(2) + 1.0), tol_root)


def _solve(problem: _ZeroProblem, half: float, tol_root: float) -> List[Tuple[complex, int]]:
    points = _zeros_in_square(problem, half, tol_root)
    if problem.cancel is not None and points:
        removed = _zeros_in_square(problem.cancel, half, tol_root)
        kept = []
        for z, m in points:
            for w, k in removed:
                if abs(z - w) <= MATCH_TOL * max(1.0, abs(z)):
                    m -= k
                    break
            if m > 0:
                kept.append((z, m))
        points = kept
    return points + problem.fixed(half)


def locate_apoints(f: MeroFunc, a, r: float, tol_root: float = 1e-12) -> APointList:
    """All a-points of f in |z| ≤ r, sorted by modulus then argument."""
    if r <= 0:
        raise ValueError(f"半径必须为正: {r}")
    problem = _problem(f, a)
    points = None
    last_error: Optional[NumericalError] = None
    for scale in SEARCH_SCALES:
        try:
            points = _solve(problem, scale * r, tol_root)
            break
        except NumericalError as exc:
            logger.debug("search square %.4g·r rejected: %s", scale, exc)
            last_error = exc
    if points is None:
        raise ContourError(f"{f.name} 的 {value_label(a)} 值点定位失败 (r = {r})") from last_error
    radius = r
    for attempt in range(NUDGE_LIMIT + 1):
        if not any(abs(abs(z) - radius) < BOUNDARY_GAP for z, _ in points):
            break
        if attempt == NUDGE_LIMIT:
            raise ContourError(f"{value_label(a)} 值点贴近圆周 |z| = {radius}")
        radius *= 1 + NUDGE_FACTOR
        logger.debug("a-point near |z| = r, radius nudged to %.12g", radius)
    inside = sorted(((complex(z), int(m)) for z, m in points if abs(z) <= radius),
                    key=lambda item: (round(abs(item[0]), 12), math.atan2(item[0].imag, item[0].real)))
    return APointList(a, radius, tuple(inside))


def paired_points(first: APointList, second: APointList,
                  limit: Optional[float] = None) -> List[Tuple[complex, int, int]]:
    """Common a-points as (z, mult_first, mult_second); raises if the sets differ."""
    limit = min(first.radius, second.radius) if limit is None else limit
    pool = [(z, m) for z, m in second.points]
    pairs = []
    for z, m in first.points:
        best = min(range(len(pool)), key=lambda i: abs(pool[i][0] - z), default=None)
        if best is not None and abs(pool[best][0] - z) <= MATCH_TOL * max(1.0, abs(z)):
            w, k = pool.pop(best)
            if abs(z) <= limit:
                pairs.append((z, m, k))
        elif abs(z) < limit - 10 * BOUNDARY_GAP:
            raise SharingInconsistencyError(f"{value_label(first.value)} 值点 {z} 没有对应点")
    for w, _ in pool:
        if abs(w) < limit - 10 * BOUNDARY_GAP:
            raise SharingInconsistencyError(f"{value_label(second.value)} 值点 {w} 没有对应点")
    return pairs


def counting_from_points(points: Iterable[Tuple[complex, int]], r_grid: Sequence[float],
                         distinct: bool = False) -> np.ndarray:
    """N(r) = Σ m·log(r/|z|) + n(0)·log r over the points with |z| ≤ r."""
    r = np.asarray(r_grid, dtype=float)
    log_r = np.log(r)
    total = np.zeros_like(r)
    for z, m in points:
        weight = 1 if distinct else m
        rho = abs(z)
        if rho <= 1e-10:
            total += weight * log_r
        else:
            total += weight * np.maximum(log_r - math.log(rho), 0.0)
    return total


def counting_N(f: MeroFunc, a, r_grid: Sequence[float],
               tol_root: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """(N(r, a), N̄(r, a)) on the grid from one localisation at the largest radius."""
    points = locate_apoints(f, a, max(r_grid), tol_root)
    return counting_from_points(points.points, r_grid), counting_from_points(points.points, r_grid, True)


def _circle_mean(integrand: Callable[[np.ndarray], np.ndarray], r: float, tol: float,
                 nodes: int = 256, what: str = "m") -> float:
    previous = None
    while nodes <= 1 << 17:
        theta = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
        values = integrand(r * np.exp(1j * theta))
        if not np.all(np.isfinite(values)):
            raise QuadratureError(f"{what}(r) 的被积函数在 r = {r} 处奇异")
        current = float(np.mean(values))
        if previous is not None and abs(current - previous) < tol:
            return current
        previous = current
        nodes *= 2
    raise QuadratureError(f"{what}(r) 在 r = {r} 处不收敛")


def _log_plus_abs(f: MeroFunc, z: np.ndarray) -> np.ndarray:
    value = f.value(z)
    inv, _ = f.reciprocal(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = ~np.isfinite(value) | (np.abs(value) > 1)
        return np.where(big, -np.log(np.abs(inv)), 0.0)


def _refined_circle_mean(integrand: Callable[[np.ndarray], np.ndarray], r: float, tol: float,
                         angles: Sequence[float], what: str = "m") -> float:
    """Adaptive circle mean with break points at the arguments of nearby singularities."""
    start = angles[0]
    inner = sorted(start + (theta - start) % (2 * math.pi) for theta in angles[1:])
    inner = [theta for theta in inner if start < theta < start + 2 * math.pi]

    def scalar(theta: float) -> float:
        value = float(integrand(np.array([r * cmath.exp(1j * theta)]))[0])
        if not math.isfinite(value):
            raise QuadratureError(f"{what}(r) 的被积函数在 r = {r}, θ = {theta} 处奇异")
        return value

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            total, _ = integrate.quad(scalar, start, start + 2 * math.pi, points=inner or None,
                                      epsabs=tol * math.pi, epsrel=0.0, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what}(r) 在 r = {r} 处不收敛: {exc}") from exc
    return total / (2 * math.pi)


def _near_angles(points: Iterable[Tuple[complex, int]], r: float) -> List[float]:
    return [cmath.phase(z) for z, _ in points if abs(abs(z) - r) < NEAR_BAND * r and z != 0]


def proximity_m(f: MeroFunc, a, r: float, tol: float = 1e-4,
                points: Optional[Iterable[Tuple[complex, int]]] = None) -> float:
    """m(r, a) = (1/2π)∫ log⁺ 1/|f − a| dθ, or log⁺|f| for a = ∞.

    a-points (poles for a = ∞) within a thin annulus around |z| = r become
    break points of an adaptive quadrature; ``points`` may carry them in from
    an earlier search, otherwise they are located here.
    """
    a = _numeric(a)

    def integrand(z):
        if is_infinite(a):
            return _log_plus_abs(f, z)
        value = f.value(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = np.abs(value - a)
            return np.where(np.isfinite(value), np.maximum(-np.log(gap), 0.0), 0.0)

    if points is None:
        points = _points_for_proximity(f, a, r)
    angles = _near_angles(points, r)
    if not angles:
        return _circle_mean(integrand, r, tol)
    logger.debug("m(r, %s): %d singular arguments near |z| = %.6g", value_label(a), len(angles), r)
    return _refined_circle_mean(integrand, r, tol, angles)


def _points_for_proximity(f: MeroFunc, a, r: float) -> Tuple[Tuple[complex, int], ...]:
    try:
        return locate_apoints(f, a, r * (1 + 2 * NEAR_BAND)).points
    except ValueError:
        # f ≡ a has no isolated a-points; the integrand is then infinite everywhere
        return ()


def _proximity_series(f: MeroFunc, a, r: np.ndarray, tol: float) -> np.ndarray:
    points = _points_for_proximity(f, _numeric(a), float(r[-1]))
    return np.array([proximity_m(f, a, radius, tol, points) for radius in r])


def spherical_proximity(f: MeroFunc, r: float, tol: float = 1e-6) -> float:
    """m̊(r, ∞) = (1/2π)∫ log √(1 + |f|²) dθ."""

    def integrand(z):
        value = f.value(z)
        inv, _ = f.reciprocal(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            small = 0.5 * np.log1p(np.abs(value) ** 2)
            large = -np.log(np.abs(inv)) + 0.5 * np.log1p(np.abs(inv) ** 2)
        big = ~np.isfinite(value) | (np.abs(value) > 1)
        return np.where(big, large, small)

    return _circle_mean(integrand, r, tol, what="m̊")


def _origin_pole_order(f: MeroFunc) -> int:
    def func(z):
        value, dvalue, _ = f.evaluate(z)
        return value, dvalue

    winding = circle_winding(func, 0j, ORIGIN_RADIUS)
    return max(0, -int(round(winding)))


_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panels(r_grid: Sequence[float], width: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes on [0, max r] with panel edges on every grid radius.

    Returns nodes, weights and, per node, the index of the first grid radius
    at or beyond its panel.
    """
    nodes, weights, owner = [], [], []
    start = 0.0
    for index, r in enumerate(r_grid):
        pieces = max(1, math.ceil((r - start) / width))
        edges = np.linspace(start, r, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = (hi - lo) / 2
            nodes.extend(lo + half * (_GL8_NODES + 1))
            weights.extend(half * _GL8_WEIGHTS)
            owner.extend([index] * len(_GL8_NODES))
        start = r
    return np.array(nodes), np.array(weights), np.array(owner)


def _ring_integral(f: MeroFunc, rho: float, theta_step: float) -> float:
    """∫₀^{2π} f^#(ρe^{iθ})² dθ by the trapezoid rule."""
    count = max(64, 8 * math.ceil(2 * math.pi * rho / theta_step / 8))
    theta = 2 * math.pi * (np.arange(count) + 0.5) / count
    sharp = spherical_derivative(f, rho * np.exp(1j * theta))
    return float(2 * math.pi * np.mean(sharp * sharp))


def characteristic_T(f: MeroFunc, r_grid: Sequence[float], theta_step: float = 0.05,
                     panel: float = 0.25, rho0: float = 1e-4) -> np.ndarray:
    """Ahlfors–Shimizu characteristic on an increasing grid.

    T₀(r) = (1/π)∫₀^r ρ·I(ρ)·log(r/ρ) dρ with I(ρ) = ∫ f^#(ρe^{iθ})² dθ,
    then T = T₀ + m̊(ρ₀, ∞) + n(0, ∞)·log ρ₀.
    """
    r = np.asarray(r_grid, dtype=float)
    if np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("半径网格必须为正且严格递增")
    if isinstance(f, ConstantFunc):
        return np.zeros_like(r)
    nodes, weights, owner = _panels(r, panel)
    ring = np.array([_ring_integral(f, rho, theta_step) for rho in nodes])
    if not np.all(np.isfinite(ring)):
        raise QuadratureError(f"T(r, {f.name}) 的球面面积积分不收敛")
    j1 = weights * nodes * ring
    j2 = j1 * np.log(nodes)
    T0 = np.empty_like(r)
    for index, radius in enumerate(r):
        mask = owner <= index
        T0[index] = (math.log(radius) * j1[mask].sum() - j2[mask].sum()) / math.pi
    c0 = spherical_proximity(f, rho0) + _origin_pole_order(f) * math.log(rho0)
    logger.debug("T(r, %s): c0 = %.6g, T(rmax) = %.6g", f.name, c0, T0[-1] + c0)
    return T0 + c0


def simultaneous_simple_Ns(f: MeroFunc, g: MeroFunc, a, r_grid: Sequence[float],
                           tol_root: float = 1e-12) -> np.ndarray:
    """Integrated count of the a-points that are simple for both f and g."""
    r_max = max(r_grid)
    first = locate_apoints(f, a, r_max, tol_root)
    second = locate_apoints(g, a, first.radius, tol_root)
    return _simple_from_pairs(paired_points(first, second, r_max), r_grid)


def _simple_from_pairs(pairs: Sequence[Tuple[complex, int, int]], r_grid: Sequence[float]) -> np.ndarray:
    return counting_from_points(((z, 1) for z, m, k in pairs if m == 1 and k == 1), r_grid)


def _top_half(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[len(values) // 2:]


def deficiency_estimate(f: MeroFunc, a, r_grid: Sequence[float], T: Optional[np.ndarray] = None,
                        tol: float = 1e-4) -> float:
    """min over the upper half of the grid of m(r, a)/T(r, f), clipped to [0, 1]."""
    r = np.asarray(r_grid, dtype=float)
    T = characteristic_T(f, r) if T is None else np.asarray(T, dtype=float)
    upper = range(len(r) // 2, len(r))
    points = _points_for_proximity(f, _numeric(a), float(r[-1]))
    ratios = [proximity_m(f, a, r[i], tol, points) / T[i] for i in upper if T[i] > 0]
    if not ratios:
        return 0.0
    return float(min(1.0, max(0.0, min(ratios))))


@dataclass(frozen=True)
class NevProfile:
    """Per-radius functionals of one or two functions at a set of tracked values.

    Keys of ``m``, ``N`` and ``Nbar`` are (function name, value label);
    ``Ns`` is keyed by value label and only present for pairs.
    """

    r_grid: Tuple[float, ...]
    functions: Tuple[str, ...]
    values: Tuple[str, ...]
    T: Dict[str, np.ndarray] = field(default_factory=dict)
    m: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    N: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    Nbar: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    Ns: Dict[str, np.ndarray] = field(default_factory=dict)
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    points: Dict[Tuple[str, str], APointList] = field(default_factory=dict, repr=False)
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.r_grid, dtype=float)

    @property
    def T_pair(self) -> np.ndarray:
        """T(r) = max over the profiled functions of T(r, ·)."""
        if not self.T:
            raise KeyError("T")
        return np.max(np.stack([self.T[name] for name in self.functions if name in self.T]), axis=0)

    def shared_Nbar(self, label: str) -> np.ndarray:
        """N̄(r, a) of the first function; equal for all functions sharing a."""
        return self.Nbar[(self.functions[0], label)]

    def series(self) -> Dict[str, np.ndarray]:
        """Flat columns in a fixed order, as exported."""
        columns: Dict[str, np.ndarray] = {"r": self.radii}
        for name in self.functions:
            if name in self.T:
                columns[f"T_{name}"] = self.T[name]
        if len(self.T) > 1:
            columns["T"] = self.T_pair
        for label in self.values:
            for name in self.functions:
                for key, table in (("m", self.m), ("N", self.N), ("Nbar", self.Nbar)):
                    if (name, label) in table:
                        columns[f"{key}_{name}[{label}]"] = table[(name, label)]
            if label in self.Ns:
                columns[f"Ns[{label}]"] = self.Ns[label]
        for key in sorted(self.extra):
            columns[key] = self.extra[key]
        return columns


def worker_count() -> int:
    """Thread pool size: ``NEVLAB_THREADS`` if set, else min(4, cpu count)."""
    raw = os.environ.get("NEVLAB_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        value = int(raw)
        if value < 1:
            raise ValueError(raw)
    except ValueError:
        logger.warning("NEVLAB_THREADS=%r 无效, 使用单线程", raw)
        return 1
    return value


def compute_profile(functions: Mapping[str, MeroFunc], values: Sequence[Tuple[str, object]],
                    r_grid: Sequence[float], *, functionals: Sequence[str] = ("T", "m", "N", "Ns"),
                    extras: Optional[Mapping[str, Tuple[MeroFunc, object]]] = None,
                    tol_quad: float = 1e-4, tol_root: float = 1e-12, threads: Optional[int] = None,
                    metadata: Optional[Mapping[str, object]] = None) -> NevProfile:
    """Evaluate the requested functionals for every (function, value).

    ``values`` holds (label, value) pairs; ``extras`` maps a column name to a
    (function, value) whose N̄ is recorded, e.g. the zeros of f − g.
    """
    r = np.asarray(r_grid, dtype=float)
    if len(r) == 0 or np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("半径网格必须为正且严格递增")
    wanted = set(functionals)
    unknown = wanted - {"T", "m", "N", "Ns"}
    if unknown:
        raise ValueError(f"未知的泛函: {sorted(unknown)}")
    names = tuple(functions)
    labels = tuple(label for label, _ in values)
    r_max = float(r[-1])
    extras = dict(extras or {})

    jobs: Dict[Tuple[str, ...], Callable[[], object]] = {}
    if "T" in wanted:
        for name, f in functions.items():
            jobs[("T", name)] = lambda f=f: characteristic_T(f, r)
    if wanted & {"N", "Ns"}:
        for name, f in functions.items():
            for label, a in values:
                jobs[("points", name, label)] = lambda f=f, a=a: locate_apoints(f, a, r_max, tol_root)
    if "m" in wanted:
        for name, f in functions.items():
            for label, a in values:
                jobs[("m", name, label)] = lambda f=f, a=a: _proximity_series(f, a, r, tol_quad)
    for key, (f, a) in extras.items():
        jobs[("extra", key)] = lambda f=f, a=a: locate_apoints(f, a, r_max, tol_root)

    workers = max(1, min(threads or worker_count(), len(jobs) or 1))
    logger.info("profile of %s: %d jobs on %d threads, r ≤ %.4g", ", ".join(names), len(jobs), workers, r_max)
    keys = list(jobs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = dict(zip(keys, pool.map(lambda key: jobs[key](), keys)))

    profile = NevProfile(tuple(float(x) for x in r), names, labels,
                         metadata=dict(metadata or {}, tol_quad=tol_quad, tol_root=tol_root,
                                        function_ids=[f.name for f in functions.values()]))
    for key, result in results.items():
        kind = key[0]
        if kind == "T":
            profile.T[key[1]] = result
        elif kind == "m":
            profile.m[(key[1], key[2])] = result
        elif kind == "points":
            profile.points[(key[1], key[2])] = result
            profile.N[(key[1], key[2])] = counting_from_points(result.points, r)
            profile.Nbar[(key[1], key[2])] = counting_from_points(result.points, r, True)
        elif kind == "extra":
            profile.extra[key[1]] = counting_from_points(result.points, r, True)
    if "Ns" in wanted and len(names) == 2:
        for label in labels:
            pairs = paired_points(profile.points[(names[0], label)], profile.points[(names[1], label)], r_max)
            profile.Ns[label] = _simple_from_pairs(pairs, r)
    return profile


def tau_estimate(profile: NevProfile, label: str) -> float:
    """min over the upper half of the grid of N_s/N̄; 1 when N̄ vanishes there."""
    Ns = _top_half(profile.Ns[label])
    Nbar = _top_half(profile.shared_Nbar(label))
    mask = Nbar > 0
    if not np.any(mask):
        return 1.0
    return float(min(1.0, np.min(Ns[mask] / Nbar[mask])))
