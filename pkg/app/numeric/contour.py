"""Argument-principle zero localisation on rectangles.

A function is given as ``func(z) -> (h, h')``; poles are not located here but
supplied by the caller as (point, order) pairs so that every cell count
``zeros − poles`` can be turned into a zero count.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ZeroFunc = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
PoleList = Sequence[Tuple[complex, int]]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
MAX_DEPTH = 14
INTEGER_TOL = 0.1
SPLIT_RATIOS = (0.5, 0.471, 0.529, 0.443, 0.557, 0.417)


class NumericalError(RuntimeError):
    """Raised when a numerical functional does not converge."""


class ContourError(NumericalError):
    """Raised when a contour passes (too close to) a zero or a pole."""


class QuadratureError(NumericalError):
    """Raised when adaptive quadrature does not reach its tolerance."""


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @classmethod
    def square(cls, center: complex, half: float) -> "Rect":
        return cls(center.real - half, center.real + half, center.imag - half, center.imag + half)

    @property
    def center(self) -> complex:
        return complex((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    @property
    def diameter(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def corners(self) -> List[complex]:
        return [complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1)]

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.x0 - margin <= z.real <= self.x1 + margin
                and self.y0 - margin <= z.imag <= self.y1 + margin)

    def boundary_distance(self, z: complex) -> float:
        dx = min(abs(z.real - self.x0), abs(z.real - self.x1))
        dy = min(abs(z.imag - self.y0), abs(z.imag - self.y1))
        inside_x = self.x0 <= z.real <= self.x1
        inside_y = self.y0 <= z.imag <= self.y1
        if inside_x and inside_y:
            return min(dx, dy)
        if inside_x:
            return dy
        if inside_y:
            return dx
        return math.hypot(dx, dy)

    def split(self, ratio: float) -> List["Rect"]:
        xm = self.x0 + ratio * (self.x1 - self.x0)
        ym = self.y0 + ratio * (self.y1 - self.y0)
        return [Rect(self.x0, xm, self.y0, ym), Rect(xm, self.x1, self.y0, ym),
                Rect(self.x0, xm, ym, self.y1), Rect(xm, self.x1, ym, self.y1)]


def _gauss(func: ZeroFunc, a: complex, b: complex, moment: int = 0) -> complex:
    mid, half = (a + b) / 2, (b - a) / 2
    nodes = mid + half * _GL_NODES
    h, dh = func(nodes)
    with np.errstate(all="ignore"):
        ratio = dh / h * nodes ** moment
    if not np.all(np.isfinite(ratio)):
        raise ContourError(f"积分路径经过零点或极点: [{a}, {b}]")
    return complex(np.sum(_GL_WEIGHTS * ratio) * half)


def side_integral(func: ZeroFunc, a: complex, b: complex, tol: float = 1e-8, moment: int = 0) -> complex:
    """∫ z^moment·h'/h dz along [a, b] with recursive bisection."""
    pending = [(a, b, _gauss(func, a, b, moment), 0)]
    total = 0j
    while pending:
        left, right, whole, depth = pending.pop()
        mid = (left + right) / 2
        first, second = _gauss(func, left, mid, moment), _gauss(func, mid, right, moment)
        if abs(first + second - whole) <= tol * max(1.0, abs(whole)):
            total += first + second
        elif depth >= MAX_DEPTH:
            raise QuadratureError(f"边积分不收敛: [{a}, {b}]")
        else:
            pending.append((left, mid, first, depth + 1))
            pending.append((mid, right, second, depth + 1))
    return total


def winding(func: ZeroFunc, corners: Sequence[complex], tol: float = 1e-8) -> float:
    """(1/2πi)∮ h'/h dz around a closed polygon."""
    total = 0j
    for k, a in enumerate(corners):
        total += side_integral(func, a, corners[(k + 1) % len(corners)], tol)
    return (total / (2j * math.pi)).real if abs((total / (2j * math.pi)).imag) < INTEGER_TOL else math.nan


def circle_winding(func: ZeroFunc, center: complex, radius: float, nodes: int = 256) -> float:
    """(1/2πi)∮ h'/h dz over a circle by the trapezoid rule, doubled until stable."""
    previous = None
    while nodes <= 1 << 16:
        theta = 2 * math.pi * np.arange(nodes) / nodes
        z = center + radius * np.exp(1j * theta)
        h, dh = func(z)
        with np.errstate(all="ignore"):
            value = complex(np.mean(dh / h * (z - center)))
        if not np.isfinite(value):
            raise ContourError(f"圆周 |z - {center}| = {radius} 经过零点或极点")
        if previous is not None and abs(value - previous) < 1e-6:
            return value.real
        previous = value
        nodes *= 2
    raise QuadratureError(f"圆周积分不收敛: r = {radius}")


def _poles_inside(poles: PoleList, rect: Rect) -> int:
    return sum(order for point, order in poles if rect.contains(point))


def count_zeros(func: ZeroFunc, rect: Rect, poles: PoleList, tol: float = 1e-8) -> int:
    """Number of zeros in rect with multiplicity; rejects non-integer windings."""
    margin = 1e-9 * max(rect.diameter, 1e-300)
    for point, _ in poles:
        if rect.contains(point, margin) and rect.boundary_distance(point) <= margin:
            raise ContourError(f"极点 {point} 位于单元边界上")
    value = winding(func, rect.corners(), tol)
    nearest = round(value) if math.isfinite(value) else None
    if nearest is None or abs(value - nearest) > INTEGER_TOL:
        raise ContourError(f"辐角原理积分不是整数: {value}")
    return int(nearest) + _poles_inside(poles, rect)


def zero_centroid(func: ZeroFunc, rect: Rect, poles: PoleList, count: int, tol: float = 1e-8) -> complex:
    """Mean location of the ``count`` zeros in rect from the first moment of h'/h on its boundary."""
    corners = rect.corners()
    total = sum(side_integral(func, a, corners[(k + 1) % 4], tol, moment=1) for k, a in enumerate(corners))
    pole_sum = sum(order * point for point, order in poles if rect.contains(point))
    return complex(total / (2j * math.pi) + pole_sum) / count


def _newton(func: ZeroFunc, start: complex, multiplicity: int, tol: float,
            max_iter: int = 60) -> Tuple[complex, bool, float]:
    z = complex(start)
    step = math.inf
    for _ in range(max_iter):
        h, dh = func(np.array([z]))
        h, dh = complex(h[0]), complex(dh[0])
        if h == 0:
            return z, True, 0.0
        if dh == 0 or not (math.isfinite(abs(h)) and math.isfinite(abs(dh))):
            return z, False, step
        delta = multiplicity * h / dh
        z -= delta
        step = abs(delta)
        if step <= tol * max(1.0, abs(z)):
            return z, True, step
    return z, False, step


def locate_zeros(func: ZeroFunc, region: Rect, poles: PoleList,
                 tol_root: float = 1e-12, min_cell: float = 1e-8) -> List[Tuple[complex, int]]:
    """Zeros of h in region with multiplicities, by quadrisection and Newton refinement."""
    scale = max(region.diameter, 1.0)
    total = count_zeros(func, region, poles)
    logger.debug("region %s holds %d zeros", region, total)
    found: List[Tuple[complex, int]] = []
    stack: List[Tuple[Rect, int]] = [(region, total)] if total > 0 else []
    while stack:
        cell, count = stack.pop()
        small = cell.diameter < 1e-3 * scale
        if count == 1 or small:
            root, converged, step = _newton(func, cell.center, count, tol_root)
            if converged and cell.contains(root, 1e-12 * scale):
                if count == 1:
                    found.append((root, 1))
                    continue
                box = Rect.square(root, max(1e3 * step, 1e-7 * scale))
                try:
                    if count_zeros(func, box, poles) == count:
                        found.append((root, count))
                        continue
                except (ContourError, QuadratureError):
                    pass
            if cell.diameter < min_cell * scale:
                logger.debug("cluster of multiplicity %d at %s", count, cell.center)
                found.append((root if converged else cell.center, count))
                continue
        for ratio in SPLIT_RATIOS:
            children = cell.split(ratio)
            try:
                counts = [count_zeros(func, child, poles) for child in children]
            except (ContourError, QuadratureError) as exc:
                logger.debug("split ratio %.3f rejected: %s", ratio, exc)
                continue
            if sum(counts) != count:
                logger.debug("split ratio %.3f: child counts %s do not sum to %d", ratio, counts, count)
                continue
            stack.extend((child, n) for child, n in zip(children, counts) if n > 0)
            break
        else:
            if not small:
                raise ContourError(f"无法细分单元 {cell}")
            # no split of this cell counts cleanly; its own boundary did
            center = zero_centroid(func, cell, poles, count)
            logger.debug("zeros of multiplicity %d at %s from the boundary moment", count, center)
            found.append((center, count))
    return found
