"""Continuous branch tracking for the roots of a parametrised cubic in w.

The cubic has coefficients that are polynomials in u(z); the three roots are
followed from a base point by predictor steps and an optimal matching of the
new roots in the chordal metric.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

_PERMS = np.array(list(permutations(range(3))))
ACCEPT_RATIO = 0.3
SEPARATION_FLOOR = 1e-6
STALL_STEP = 1e-6
SNAP = 1e-3
DETOUR = 0.15
MAX_DETOURS = 6


class BranchTrackingError(RuntimeError):
    """Raised when continuation cannot resolve the branches along a path."""


class _Stall(Exception):
    def __init__(self, z: complex) -> None:
        super().__init__(z)
        self.z = z


def chordal(a, b) -> np.ndarray:
    """Chordal distance on the Riemann sphere; ∞ is allowed on either side."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        fin_a, fin_b = np.isfinite(a), np.isfinite(b)
        na = np.sqrt(1 + np.abs(np.where(fin_a, a, 0)) ** 2)
        nb = np.sqrt(1 + np.abs(np.where(fin_b, b, 0)) ** 2)
        both = np.abs(np.where(fin_a, a, 0) - np.where(fin_b, b, 0)) / (na * nb)
        only_a = 1 / na
        only_b = 1 / nb
    return np.where(fin_a & fin_b, both, np.where(fin_a, only_a, np.where(fin_b, only_b, 0.0)))


def cubic_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of monic cubics w³ + c2·w² + c1·w + c0, one row (c2, c1, c0) per point."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    n = coeffs.shape[0]
    companion = np.zeros((n, 3, 3), dtype=complex)
    companion[:, 0, :] = -coeffs
    companion[:, 1, 0] = 1
    companion[:, 2, 1] = 1
    return np.linalg.eigvals(companion)


def _min_separation(roots: np.ndarray) -> np.ndarray:
    d01 = chordal(roots[..., 0], roots[..., 1])
    d02 = chordal(roots[..., 0], roots[..., 2])
    d12 = chordal(roots[..., 1], roots[..., 2])
    return np.minimum(np.minimum(d01, d02), d12)


def _match(predicted: np.ndarray, candidates: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best permutation of candidate roots per row; returns (ordered, cost, accepted)."""
    permuted = candidates[..., _PERMS]
    costs = chordal(predicted[..., None, :], permuted).max(axis=-1)
    best = np.argmin(costs, axis=-1)
    rows = np.arange(candidates.shape[0])
    ordered = permuted[rows, best]
    cost = costs[rows, best]
    accepted = cost < ACCEPT_RATIO * np.maximum(_min_separation(ordered), SEPARATION_FLOOR)
    return ordered, cost, accepted


@dataclass
class _Anchor:
    z: complex
    roots: np.ndarray


class BranchTracker:
    """Follows the three roots of ``coefficients(u(z))`` as functions of z.

    ``u_of_z`` evaluates u on arrays; ``coefficients`` maps u-arrays to rows
    (c2, c1, c0) of the monic cubic. Results are cached on an anchor grid of
    spacing ``spacing`` around ``base``; the cache belongs to this tracker only.
    """

    def __init__(self, u_of_z: Callable[[np.ndarray], np.ndarray],
                 coefficients: Callable[[np.ndarray], np.ndarray],
                 base: complex, spacing: float) -> None:
        self._u = u_of_z
        self._coefficients = coefficients
        self.base = complex(base)
        self.spacing = float(spacing)
        self._lock = threading.RLock()
        roots = self._roots(np.array([self.base]))[0]
        order = np.lexsort((np.round(roots.imag, 12), np.round(roots.real, 12)))
        self._anchors: Dict[Tuple[int, int], _Anchor] = {(0, 0): _Anchor(self.base, roots[order])}

    def _roots(self, z: np.ndarray) -> np.ndarray:
        u = self._u(np.asarray(z, dtype=complex))
        return cubic_roots(self._coefficients(u))

    # -- scalar continuation ----------------------------------------------

    def continue_segment(self, z_from: complex, roots_from: np.ndarray, z_to: complex,
                         depth: int = 0) -> np.ndarray:
        """Continuation of an ordered root triple from z_from to z_to.

        The roots are single-valued functions of z, so when the straight
        segment stalls next to a coincidence of roots or a pole of u the path
        is bent around the stall point; the result does not depend on the path.
        """
        try:
            return self._straight(complex(z_from), np.asarray(roots_from, dtype=complex), complex(z_to))
        except _Stall as stall:
            if depth >= MAX_DETOURS:
                raise BranchTrackingError(f"分支追踪失败: 在 z = {stall.z} 附近步长过小") from None
            direction = (z_to - z_from) / abs(z_to - z_from)
            sign = 1 if depth % 2 == 0 else -1
            waypoint = stall.z + sign * 1j * direction * DETOUR * self.spacing * (1 + depth / 2)
            logger.debug("branch path detour at %s via %s", stall.z, waypoint)
            middle = self.continue_segment(z_from, roots_from, waypoint, depth + 1)
            return self.continue_segment(waypoint, middle, z_to, depth + 1)

    def _straight(self, z_from: complex, roots: np.ndarray, z_to: complex) -> np.ndarray:
        length = abs(z_to - z_from)
        if length == 0:
            return roots
        h_max = min(0.25, self.spacing / length)
        step = h_max
        previous: Optional[np.ndarray] = None
        last_h = step
        t = 0.0
        while t < 1.0:
            h = min(step, 1.0 - t)
            z_next = z_from + (t + h) * (z_to - z_from)
            predicted = roots if previous is None else roots + (roots - previous) * (h / last_h)
            predicted = np.where(np.isfinite(predicted), predicted, roots)
            candidates = self._roots(np.array([z_next]))
            ordered, _, accepted = _match(predicted[None, :], candidates)
            if accepted[0]:
                previous, roots = roots, ordered[0]
                last_h = h
                t += h
                step = min(2 * h, h_max)
            else:
                step = h / 2
                previous = None
                if step * length < STALL_STEP * self.spacing:
                    if (1.0 - t) * length <= SNAP * self.spacing:
                        # the end point sits on a coincidence of roots; nearest ordering is all there is
                        ordered, _, _ = _match(roots[None, :], self._roots(np.array([z_to])))
                        return ordered[0]
                    raise _Stall(z_from + t * (z_to - z_from))
        return roots

    # -- anchor grid --------------------------------------------------------

    def _grid_index(self, z: complex) -> Tuple[int, int]:
        offset = (complex(z) - self.base) / self.spacing
        return int(round(offset.real)), int(round(offset.imag))

    def _grid_point(self, index: Tuple[int, int]) -> complex:
        return self.base + self.spacing * complex(index[0], index[1])

    def anchor(self, index: Tuple[int, int]) -> _Anchor:
        with self._lock:
            return self._anchor(index)

    def _anchor(self, index: Tuple[int, int]) -> _Anchor:
        chain: List[Tuple[int, int]] = []
        current = index
        while current not in self._anchors:
            chain.append(current)
            i, j = current
            if j != 0:
                current = (i, j - (1 if j > 0 else -1))
            else:
                current = (i - (1 if i > 0 else -1), j)
        source = self._anchors[current]
        for target in reversed(chain):
            z_to = self._grid_point(target)
            roots = self.continue_segment(source.z, source.roots, z_to)
            source = _Anchor(z_to, roots)
            self._anchors[target] = source
        return source

    # -- batch evaluation ---------------------------------------------------

    def roots(self, z: Sequence[complex], substeps: int = 4) -> np.ndarray:
        """Ordered root triples at each point (shape (n, 3))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = z.shape[0]
        starts = np.empty(n, dtype=complex)
        current = np.empty((n, 3), dtype=complex)
        for k, point in enumerate(z):
            anchor = self.anchor(self._grid_index(point))
            starts[k] = anchor.z
            current[k] = anchor.roots
        ok = np.ones(n, dtype=bool)
        previous = current.copy()
        for s in range(1, substeps + 1):
            t = s / substeps
            points = starts + t * (z - starts)
            candidates = self._roots(points)
            predicted = current if s == 1 else current + (current - previous)
            predicted = np.where(np.isfinite(predicted), predicted, current)
            ordered, _, accepted = _match(predicted, candidates)
            ok &= accepted
            previous, current = current, np.where(ok[:, None], ordered, current)
        for k in np.flatnonzero(~ok):
            anchor = self.anchor(self._grid_index(z[k]))
            current[k] = self.continue_segment(anchor.z, anchor.roots, complex(z[k]))
        return current

    def monodromy(self, period: complex) -> Tuple[int, int, int]:
        """Permutation σ with root k at base + period equal to root σ(k) at base."""
        base_roots = self._anchors[(0, 0)].roots
        moved = self.continue_segment(self.base, base_roots, self.base + period)
        sigma = []
        for value in moved:
            distances = chordal(value, base_roots)
            sigma.append(int(np.argmin(distances)))
        if sorted(sigma) != [0, 1, 2]:
            raise BranchTrackingError(f"周期 {period} 的单值化置换无法确定")
        return tuple(sigma)
