"""
Closed-form threshold formulas, constants and reference values.

All logarithms are natural.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import List, Optional

from errors import DomainError
from graph.multilayer import MAX_LAYERS

H2_B_LOWER = 0.68
H2_C_UPPER = 0.56

SOURCE_GENERAL = "general theorem"
SOURCE_H2 = "h=2 special"


@dataclass(frozen=True)
class ThresholdConstants:
    h: int
    b_lower: float
    c_upper: float
    source: str


@dataclass(frozen=True)
class LayerBounds:
    """Layer counts from the corollary; None means undefined, see notes."""

    n: int
    r: float
    h0: Optional[int]
    h1: Optional[int]
    h0_quotient: Optional[float]
    h1_quotient: Optional[float]
    notes: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class ReferenceFormulas:
    r_c: float
    diameter_estimate: float


def _check_layers(h: int) -> None:
    if not 2 <= h <= MAX_LAYERS:
        raise DomainError(f"threshold formulas need 2 <= h <= {MAX_LAYERS}, got h={h}")


def threshold_radius(n: int, h: int) -> float:
    """(ln n / n^(h-1))^(1/(2h)), the base threshold scaling without constants."""
    _check_layers(h)
    if n < 2:
        raise DomainError(f"threshold radius needs n >= 2, got n={n}")
    return math.exp((math.log(math.log(n)) - (h - 1) * math.log(n)) / (2 * h))


def theorem_constants(h: int, general: bool = False) -> ThresholdConstants:
    """
    b_lower and c_upper for h layers. h=2 uses the sharper special-case
    constants unless general=True asks for the general-formula values.
    """
    _check_layers(h)
    if h == 2 and not general:
        return ThresholdConstants(h, H2_B_LOWER, H2_C_UPPER, SOURCE_H2)
    b = (2.0 ** (2 + 3 * (h - 1)) / math.pi ** 3) ** (1.0 / (2 * h))
    c = (2.0 / (3.0 * math.pi)) * (1.0 / (2.0 * math.pi)) ** (h - 1)
    return ThresholdConstants(h, b, c, SOURCE_GENERAL)


def corollary_layer_bounds(n: int, r: float) -> LayerBounds:
    """
    Literal evaluation of

        h0 = floor((ln n + ln ln n) / (2 ln r + ln n - ln 4 + ln 3pi))
        h1 = ceil((ln n + ln ln n - ln 2pi^3) / (2 ln r - ln n - ln 8))

    A non-positive denominator or result is reported as undefined.
    """
    if n < 3:
        raise DomainError(f"layer bounds need n >= 3, got n={n}")
    if not 0.0 < r < 1.0:
        raise DomainError(f"layer bounds need 0 < r < 1, got r={r}")

    ln_n = math.log(n)
    head = ln_n + math.log(ln_n)
    notes: List[str] = []

    def evaluate(name, numerator, denominator, rounding):
        quotient = numerator / denominator if denominator != 0.0 else None
        if denominator <= 0.0:
            notes.append(f"{name} denominator {denominator:.6g} is not positive")
            return None, quotient
        value = rounding(quotient)
        if value <= 0:
            notes.append(f"{name} = {value} is not positive")
            return None, quotient
        return value, quotient

    h0, h0_q = evaluate(
        "h0", head, 2.0 * math.log(r) + ln_n - math.log(4.0) + math.log(3.0 * math.pi), math.floor
    )
    h1, h1_q = evaluate(
        "h1", head - math.log(2.0 * math.pi ** 3), 2.0 * math.log(r) - ln_n - math.log(8.0), math.ceil
    )
    return LayerBounds(n, r, h0, h1, h0_q, h1_q, notes)


def reference_formulas(n: int, r: float) -> ReferenceFormulas:
    """Single-layer connectivity radius r_c(n) and the diameter estimate sqrt(2)/r."""
    if n < 3:
        raise DomainError(f"reference formulas need n >= 3, got n={n}")
    if r <= 0.0:
        raise DomainError(f"reference formulas need r > 0, got r={r}")
    ln_n = math.log(n)
    return ReferenceFormulas(
        r_c=math.sqrt((ln_n - math.log(ln_n)) / (math.pi * n)),
        diameter_estimate=math.sqrt(2.0) / r,
    )


def expected_image_size(m: int, k: int) -> float:
    """E|g([m])| = k (1 - (1 - 1/k)^m) for a uniform random map g: [m] -> [k]."""
    if m < 1 or k < 1:
        raise DomainError(f"image size needs m, k >= 1, got m={m}, k={k}")
    if k == 1:
        return 1.0
    return k * -math.expm1(m * math.log1p(-1.0 / k))


def expected_image_size_exact(m: int, k: int) -> Fraction:
    if m < 1 or k < 1:
        raise DomainError(f"image size needs m, k >= 1, got m={m}, k={k}")
    return k * (1 - (1 - Fraction(1, k)) ** m)


def enumerated_image_size(m: int, k: int) -> Fraction:
    """Mean image size over all k^m maps, by enumeration."""
    total = sum(len(set(images)) for images in product(range(k), repeat=m))
    return Fraction(total, k ** m)
