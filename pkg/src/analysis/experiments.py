"""
Experiments that check the expansion bounds, the random-map occupancy
concentration, and the ball-size expectation and concentration.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from analysis.formulas import expected_image_size, threshold_radius
from errors import ConfigError
from geometry.probability import pair_adjacency_probability
from geometry.sampling import substream
from graph.multilayer import GraphParams, generate_random
from rainbow.engine import ColorPermutation, all_permutations, rainbow_engine

logger = logging.getLogger(__name__)

# Sampling stream for sources and permutations; graph layers use (seed, k).
_SAMPLER_KEY = (0, 0)
_MAX_ENUMERATED_LAYERS = 8
_OCCUPANCY_CELLS = 4_000_000


def expansion_bounds(n: int, r: float, ell: int) -> tuple:
    """[(1/4^l)(pi/2)(nr^2)^l, (3pi/2)^l (nr^2)^l]."""
    x = n * r * r
    return (math.pi / 2.0) * (x / 4.0) ** ell, (1.5 * math.pi * x) ** ell


def growth_bounds(n: int, r: float) -> tuple:
    x = n * r * r
    return x / 4.0, 1.5 * math.pi * x


@dataclass
class ExpansionRow:
    source: int
    sigma: str
    ell: int
    size: int
    lower: float
    upper: float
    within: bool
    growth_ratio: Optional[float]
    growth_within: Optional[bool]


@dataclass
class ExpansionResult:
    n: int
    r: float
    h: int
    seed: int
    regime_factor: Optional[float]
    in_regime: bool
    rows: List[ExpansionRow] = field(default_factory=list)
    satisfaction: Dict[int, float] = field(default_factory=dict)
    growth_satisfaction: Dict[int, float] = field(default_factory=dict)
    profiles: int = 0


def _sigma_label(sigma: ColorPermutation) -> str:
    return "-".join(str(c) for c in sigma)


def expansion_experiment(
    n: int,
    r: float,
    h: int,
    source_samples: int,
    seed: int,
    permutations_per_source: Optional[int] = None,
) -> ExpansionResult:
    """
    Sizes of the sigma-ordered neighbourhoods N_l for sampled sources and
    permutations, checked against the expansion bounds for l = 1..h-1.
    """
    params = GraphParams(n, r, h)
    if source_samples < 1:
        raise ConfigError(f"source_samples must be >= 1, got {source_samples}")
    if n < 1:
        raise ConfigError("expansion experiment needs at least one vertex")
    if permutations_per_source is None and h > _MAX_ENUMERATED_LAYERS:
        raise ConfigError(
            f"enumerating all {h}! permutations is not supported; set permutations_per_source"
        )

    regime_factor = r / threshold_radius(n, h) if h >= 2 and n >= 2 else None
    in_regime = h >= 3 and regime_factor is not None and 0.25 <= regime_factor <= 4.0
    if not in_regime:
        logger.warning(f"Expansion run n={n}, r={r:.6g}, h={h} is outside the bounds' regime")

    logger.info(f"Expansion experiment: n={n}, r={r:.6g}, h={h}, {source_samples} sources")
    g = generate_random(params, seed)
    rng = substream(seed, *_SAMPLER_KEY)
    sources = rng.choice(n, size=source_samples, replace=source_samples > n)
    result = ExpansionResult(n, r, h, seed, regime_factor, in_regime)

    every = all_permutations(h) if permutations_per_source is None else None
    low_growth, high_growth = growth_bounds(n, r)
    for u in sources:
        if every is not None:
            sigmas = every
        else:
            sigmas = [ColorPermutation(tuple(rng.permutation(h))) for _ in range(permutations_per_source)]
        for sigma in sigmas:
            profile = rainbow_engine.sigma_neighborhoods(g, int(u), sigma)
            result.profiles += 1
            for ell in range(1, h):
                size = profile.sizes[ell]
                lower, upper = expansion_bounds(n, r, ell)
                ratio = growth_ok = None
                if ell >= 2 and profile.sizes[ell - 1] > 0:
                    ratio = size / profile.sizes[ell - 1]
                    growth_ok = low_growth <= ratio <= high_growth
                result.rows.append(ExpansionRow(
                    int(u), _sigma_label(sigma), ell, size, lower, upper,
                    lower <= size <= upper, ratio, growth_ok,
                ))

    for ell in range(1, h):
        rows = [row for row in result.rows if row.ell == ell]
        result.satisfaction[ell] = sum(row.within for row in rows) / len(rows)
        checked = [row for row in rows if row.growth_within is not None]
        if checked:
            result.growth_satisfaction[ell] = sum(row.growth_within for row in checked) / len(checked)
    logger.info(f"Expansion bounds held at rates {result.satisfaction}")
    return result


@dataclass
class TailRow:
    a: float
    frequency: float
    std_error: float
    mcdiarmid_bound: float
    shifted_frequency: float
    shifted_bound: float


@dataclass
class OccupancyStats:
    m: int
    k: int
    expected: float
    trials: int
    empirical_mean: float
    max_observed_deviation: float
    seed: int
    tails: List[TailRow] = field(default_factory=list)
    image_sizes: Optional[np.ndarray] = field(default=None, repr=False)


def _image_sizes(m: int, k: int, trials: int, seed: int) -> np.ndarray:
    sizes = np.empty(trials, dtype=np.int64)
    chunk = max(1, _OCCUPANCY_CELLS // m)
    for index, start in enumerate(range(0, trials, chunk)):
        stop = min(trials, start + chunk)
        maps = substream(seed, index).integers(0, k, size=(stop - start, m))
        maps.sort(axis=1)
        sizes[start:stop] = 1 + np.count_nonzero(np.diff(maps, axis=1), axis=1)
    return sizes


def occupancy_experiment(
    m: int,
    k: int,
    trials: int,
    seed: int,
    a_values: Optional[Sequence[float]] = None,
) -> OccupancyStats:
    """
    Image sizes Y of uniform random maps [m] -> [k]. For each deviation a,
    reports Pr(|Y - EY| >= a) next to 2exp(-2a^2/m), and Pr(|Y - m| >= a)
    next to the shifted bound 2exp(-2(a - m^2/2k)^2/m), which is trivial
    for a <= m^2/2k.
    """
    if m < 1 or k < 1 or trials < 1:
        raise ConfigError(f"occupancy needs m, k, trials >= 1, got m={m}, k={k}, trials={trials}")
    if a_values is None:
        a_values = [math.sqrt(m) * c for c in (1, 2, 3)]

    expected = expected_image_size(m, k)
    sizes = _image_sizes(m, k, trials, seed)
    deviation = np.abs(sizes - expected)
    stats = OccupancyStats(
        m, k, expected, trials, float(sizes.mean()), float(deviation.max()), seed, image_sizes=sizes
    )
    shift = m * m / (2.0 * k)
    for a in a_values:
        frequency = float(np.mean(deviation >= a))
        shifted = min(1.0, 2.0 * math.exp(-2.0 * (a - shift) ** 2 / m)) if a > shift else 1.0
        stats.tails.append(TailRow(
            a=float(a),
            frequency=frequency,
            std_error=math.sqrt(frequency * (1.0 - frequency) / trials),
            mcdiarmid_bound=min(1.0, 2.0 * math.exp(-2.0 * a * a / m)),
            shifted_frequency=float(np.mean(np.abs(sizes - m) >= a)),
            shifted_bound=shifted,
        ))
    logger.info(f"Occupancy m={m}, k={k}: mean {stats.empirical_mean:.4f} vs expected {expected:.4f}")
    return stats


@dataclass
class BallTrial:
    trial: int
    mean_z: float
    violation_rate: float


@dataclass
class BallStats:
    n: int
    r: float
    trials: int
    seed: int
    mean_z: float
    predicted_mean: float
    lower_bound: float
    upper_bound: float
    violation_rate: float
    concentration_bound: float
    per_trial: List[BallTrial] = field(default_factory=list)


def ball_statistics_experiment(n: int, r: float, trials: int, seed: int) -> BallStats:
    """
    Ball sizes Z_v over single-layer graphs: the pooled mean against
    (n-1)p(r) and the window [pi n r^2/4, pi n r^2], and the share of
    vertices with |Z_v - EZ| > EZ/2 against 2exp(-EZ/12).
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    params = GraphParams(n, r, 1)
    predicted = (n - 1) * pair_adjacency_probability(r) if n >= 1 else 0.0

    per_trial = []
    total_z = 0
    total_violations = 0
    for trial in range(trials):
        z = generate_random(params, seed, stream=(trial,)).degrees(0)
        violations = int(np.count_nonzero(np.abs(z - predicted) > 0.5 * predicted)) if predicted > 0 else 0
        total_z += int(z.sum())
        total_violations += violations
        per_trial.append(BallTrial(
            trial, float(z.mean()) if n else 0.0, violations / n if n else 0.0
        ))
        logger.debug(f"Ball trial {trial}: mean Z {per_trial[-1].mean_z:.4f}")

    samples = n * trials
    return BallStats(
        n=n,
        r=r,
        trials=trials,
        seed=seed,
        mean_z=total_z / samples if samples else 0.0,
        predicted_mean=predicted,
        lower_bound=math.pi * n * r * r / 4.0,
        upper_bound=math.pi * n * r * r,
        violation_rate=total_violations / samples if samples else 0.0,
        concentration_bound=2.0 * math.exp(-predicted / 12.0),
        per_trial=per_trial,
    )
