"""
Exact probability that two independent uniform points of the unit square
are within distance r, boundary effects included.
"""

import math

from scipy import integrate

from errors import DomainError
from geometry.grid import SQRT2


def _closed_form(r: float) -> float:
    return math.pi * r ** 2 - (8.0 / 3.0) * r ** 3 + 0.5 * r ** 4


def _quadrature(r: float) -> float:
    # |dx| and |dy| are independent with density 2(1 - t) on [0, 1]
    def inner(a: float) -> float:
        s = min(1.0, math.sqrt(max(0.0, r * r - a * a)))
        return 2.0 * (1.0 - a) * (2.0 * s - s * s)

    if r > 1.0:
        breaks = [math.sqrt(r * r - 1.0)]
    elif 0.0 < r < 1.0:
        breaks = [r]
    else:
        breaks = None
    value, _ = integrate.quad(inner, 0.0, 1.0, points=breaks, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


def pair_adjacency_probability(r: float) -> float:
    """Pr(dist(U, V) <= r) for U, V uniform on [0,1]^2."""
    r = float(r)
    if not (0.0 <= r <= SQRT2):
        raise DomainError(f"radius must lie in [0, sqrt(2)], got {r}")
    if r == SQRT2:
        return 1.0
    if r <= 1.0:
        return _closed_form(r)
    return min(1.0, max(0.0, _quadrature(r)))


def pair_probability_by_quadrature(r: float) -> float:
    """Independent numeric evaluation, valid on the whole range [0, sqrt(2)]."""
    r = float(r)
    if not (0.0 <= r <= SQRT2):
        raise DomainError(f"radius must lie in [0, sqrt(2)], got {r}")
    return _quadrature(r)


def pair_probability_lower_bound(r: float) -> float:
    """pi r^2 (1 - 3r + 3r^2): the boundary-corrected lower bound, meaningful for r <= 1/2."""
    r = float(r)
    if r < 0.0:
        raise DomainError(f"radius must be non-negative, got {r}")
    return math.pi * r * r * (1.0 - 3.0 * r + 3.0 * r * r)
