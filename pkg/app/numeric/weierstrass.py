"""Weierstrass ℘ and ℘' for the lattice of a depressed cubic.

Half-periods come from the period integrals between pairs of roots; values are
computed by reduction to the centered period parallelogram, the Laurent series
near the origin and repeated duplication.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

LAURENT_TERMS = 18
LAURENT_RADIUS = 0.25


class LatticeError(ValueError):
    """Raised when the cubic does not define a period lattice."""


def _laurent_coefficients(g2: complex, g3: complex, terms: int = LAURENT_TERMS) -> List[complex]:
    coeffs = [0j, 0j, g2 / 20, g3 / 28]
    for k in range(4, terms + 1):
        acc = sum(coeffs[m] * coeffs[k - m] for m in range(2, k - 1))
        coeffs.append(3 * acc / ((2 * k + 1) * (k - 3)))
    return coeffs


@dataclass(frozen=True)
class Lattice:
    """Period lattice with half-periods omega1, omega2 and invariants g2, g3."""

    omega1: complex
    omega2: complex
    g2: complex
    g3: complex
    roots: Tuple[complex, complex, complex]

    @property
    def periods(self) -> Tuple[complex, complex]:
        return 2 * self.omega1, 2 * self.omega2

    @property
    def min_period(self) -> float:
        p1, p2 = self.periods
        return min(abs(p1), abs(p2), abs(p1 + p2), abs(p1 - p2))

    @property
    def covolume(self) -> float:
        p1, p2 = self.periods
        return abs((p1.conjugate() * p2).imag)

    def coordinates(self, z) -> Tuple[np.ndarray, np.ndarray]:
        """Real (x, y) with z = x·p1 + y·p2."""
        p1, p2 = self.periods
        z = np.asarray(z, dtype=complex)
        x = np.imag(z * np.conj(p2)) / (p1 * np.conj(p2)).imag
        y = np.imag(z * np.conj(p1)) / (p2 * np.conj(p1)).imag
        return x, y

    def reduce(self, z) -> np.ndarray:
        """Representative of z in the centered period parallelogram."""
        p1, p2 = self.periods
        x, y = self.coordinates(z)
        return np.asarray(z, dtype=complex) - np.round(x) * p1 - np.round(y) * p2

    def points_in_disk(self, radius: float, center: complex = 0j) -> List[complex]:
        """Lattice points with |w − center| ≤ radius."""
        p1, p2 = self.periods
        span = int(math.ceil((radius + abs(center)) / self.min_period * 2)) + 2
        x0, y0 = self.coordinates(center)
        i0, j0 = int(round(float(x0))), int(round(float(y0)))
        points = []
        for i in range(i0 - span, i0 + span + 1):
            for j in range(j0 - span, j0 + span + 1):
                w = i * p1 + j * p2
                if abs(w - center) <= radius:
                    points.append(complex(w))
        return points


def _wp_small(z: np.ndarray, g2: complex, g3: complex, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """℘, ℘' for z with no nonzero lattice point closer than 1/LAURENT_RADIUS·radius."""
    coeffs = _laurent_coefficients(g2, g3)
    modulus = np.abs(z)
    with np.errstate(divide="ignore"):
        ratio = np.where(modulus > radius, modulus / radius, 1.0)
    halvings = np.ceil(np.log2(ratio)).astype(int)
    w = z / np.power(2.0, halvings)
    w2 = w * w
    p = np.zeros_like(w)
    dp = np.zeros_like(w)
    for k in range(LAURENT_TERMS, 1, -1):
        p = p * w2 + coeffs[k]
        dp = dp * w2 + (2 * k - 2) * coeffs[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = 1 / w2 + p * w2
        dp = -2 / (w2 * w) + dp * w
    for step in range(int(halvings.max(initial=0))):
        mask = halvings > step
        if not mask.any():
            break
        pm, dpm = p[mask], dp[mask]
        slope = (6 * pm * pm - g2 / 2) / dpm
        p2 = slope * slope / 4 - 2 * pm
        dp2 = -slope * (p2 - pm) - dpm
        p[mask], dp[mask] = p2, dp2
    return p, dp


def wp(z, lat: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    """(℘(z), ℘'(z)); lattice points give (inf, inf)."""
    scalar = np.ndim(z) == 0
    zr = np.atleast_1d(lat.reduce(z)).astype(complex)
    pole = np.abs(zr) < 1e-13 * lat.min_period
    safe = np.where(pole, lat.min_period / 4, zr)
    p, dp = _wp_small(safe, lat.g2, lat.g3, LAURENT_RADIUS * lat.min_period)
    p = np.where(pole, complex(np.inf), p)
    dp = np.where(pole, complex(np.inf), dp)
    if scalar:
        return complex(p[0]), complex(dp[0])
    return p.reshape(np.shape(z)), dp.reshape(np.shape(z))


def wp_second(p, g2: complex):
    """℘'' expressed through ℘."""
    return 6 * np.asarray(p) ** 2 - g2 / 2


def _continuous_sqrt(start: complex, end: complex):
    """A branch of √w continuous along the segment from start to end."""
    pivot = start / abs(start) + end / abs(end)
    pivot = pivot / abs(pivot)
    root = cmath.sqrt(pivot)
    return lambda w: np.sqrt(w / pivot) * root


def _half_period(ei: complex, ej: complex, ek: complex) -> complex:
    """∫ from e_i to e_j of dt / √(4(t−e1)(t−e2)(t−e3)), up to sign."""
    start, end = ei - ek, ej - ek
    sqrt = _continuous_sqrt(start, end)

    def integrand(phi: float) -> complex:
        return 1 / sqrt(start + (end - start) * math.sin(phi) ** 2)

    re, _ = integrate.quad(lambda t: integrand(t).real, 0, math.pi / 2, epsabs=1e-15, epsrel=1e-13, limit=200)
    im, _ = integrate.quad(lambda t: integrand(t).imag, 0, math.pi / 2, epsabs=1e-15, epsrel=1e-13, limit=200)
    return complex(re, im) / 1j


def _segment_distance(point: complex, a: complex, b: complex) -> float:
    direction = b - a
    t = ((point - a) * direction.conjugate()).real / abs(direction) ** 2
    t = min(max(t, 0.0), 1.0)
    return abs(point - (a + t * direction))


def _gauss_reduce(p1: complex, p2: complex) -> Tuple[complex, complex]:
    while True:
        if abs(p2) < abs(p1):
            p1, p2 = p2, p1
        m = round((p2 * p1.conjugate()).real / abs(p1) ** 2)
        p2 = p2 - m * p1
        if abs(p2) >= abs(p1) - 1e-15 * abs(p1):
            break
    if (p2 / p1).imag < 0:
        p2 = -p2
    return p1, p2


def lattice_from_cubic(roots: Sequence[complex], tol: float = 1e-9) -> Lattice:
    """Lattice of (℘')² = 4(℘ − e1)(℘ − e2)(℘ − e3)."""
    e = [complex(r) for r in roots]
    if len(e) != 3:
        raise LatticeError(f"需要三个根, 实际为 {len(e)}")
    scale = max(abs(x) for x in e) or 1.0
    if abs(sum(e)) > 1e-12 * max(scale, 1.0):
        raise LatticeError(f"根之和必须为零: {sum(e)}")
    if min(abs(a - b) for a, b in combinations(e, 2)) < 1e-12 * scale:
        raise LatticeError(f"根不能重合: {e}")
    g2 = -4 * (e[0] * e[1] + e[1] * e[2] + e[2] * e[0])
    g3 = 4 * e[0] * e[1] * e[2]

    candidates = []
    for i, j in combinations(range(3), 2):
        k = 3 - i - j
        if _segment_distance(e[k], e[i], e[j]) < 1e-3 * abs(e[j] - e[i]):
            continue
        candidates.append((_half_period(e[i], e[j], e[k]), e[k]))
    best: Optional[Tuple[complex, complex]] = None
    for (w1, _), (w2, _) in combinations(candidates, 2):
        if abs((w2 / w1).imag) < 1e-8:
            continue
        if best is None or abs((w2 * w1.conjugate()).imag) < abs((best[1] * best[0].conjugate()).imag):
            best = (w1, w2)
    if best is None:
        raise LatticeError(f"无法从根 {e} 得到两个独立的半周期")
    p1, p2 = _gauss_reduce(2 * best[0], 2 * best[1])
    lat = Lattice(p1 / 2, p2 / 2, g2, g3, (e[0], e[1], e[2]))
    for half in (lat.omega1, lat.omega2, lat.omega1 + lat.omega2):
        value, _ = wp(half, lat)
        if min(abs(value - r) for r in e) > tol * max(scale, 1.0):
            raise LatticeError(f"半周期校验失败: ℘({half}) = {value}")
    samples = np.array([0.31, 0.17 + 0.29j, -0.23 + 0.41j]) * lat.omega1 + np.array([0.12, -0.27, 0.36]) * lat.omega2
    if float(np.max(ode_residual(samples, lat))) > tol:
        raise LatticeError(f"格的微分方程校验失败: {e}")
    logger.debug("lattice: omega1=%s omega2=%s g2=%s g3=%s", lat.omega1, lat.omega2, g2, g3)
    return lat


def ode_residual(z, lat: Lattice) -> np.ndarray:
    """Relative residual of (℘')² = 4℘³ − g2℘ − g3."""
    p, dp = wp(z, lat)
    p, dp = np.asarray(p), np.asarray(dp)
    rhs = 4 * p ** 3 - lat.g2 * p - lat.g3
    return np.abs(dp ** 2 - rhs) / np.maximum(np.abs(rhs) + np.abs(dp) ** 2, 1.0)
