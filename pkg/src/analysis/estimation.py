"""
Monte Carlo estimation of Pr(G(n, r, h) is rainbow connected), and the
bisection that locates the radius where it crosses 1/2.

Trial t of an estimate draws layer k from substream (seed, *stream, t, k),
so an estimate does not depend on how trials are split across workers:
outcomes are collected per trial and reduced in trial order.
"""

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

from scipy import stats

from analysis.formulas import LayerBounds, corollary_layer_bounds
from errors import ConfigError
from geometry.grid import SQRT2
from graph.multilayer import GraphParams, generate_random
from rainbow.engine import RainbowEngine
from settings import settings

logger = logging.getLogger(__name__)

MIN_BISECTION_TRIALS = 50
NOISE_HALF_WIDTHS = 3.0
_CHUNKS_PER_WORKER = 4


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ConfigError(f"successes must lie in [0, {trials}], got {successes}")
    z = stats.norm.ppf(1.0 - (1.0 - confidence) / 2.0)
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


@dataclass
class ProbabilityEstimate:
    n: int
    r: float
    h: int
    p_hat: float
    trials: int
    successes: int
    ci_low: float
    ci_high: float
    seed: int
    mean_unconnected_pairs: Optional[float] = None
    mean_max_source_unconnected: Optional[float] = None

    @property
    def half_width(self) -> float:
        return max(self.p_hat - self.ci_low, self.ci_high - self.p_hat)


@dataclass
class ThresholdEstimate:
    n: int
    h: int
    r_hat: float
    bracket: Tuple[float, float]
    trials_per_point: int
    r_tolerance: float
    seed: int
    trace: List[ProbabilityEstimate] = field(default_factory=list)
    degenerate: bool = False
    noisy: bool = False
    flags: List[str] = field(default_factory=list)


@dataclass
class LayerThresholdEstimate:
    n: int
    r: float
    h_max: int
    seed: int
    estimates: List[ProbabilityEstimate]
    h_hat: Optional[int]
    bounds: Optional[LayerBounds]


class TrialOutcome(NamedTuple):
    trial: int
    connected: bool
    unconnected_pairs: Optional[int]
    max_source_unconnected: Optional[int]


class _TrialTask(NamedTuple):
    n: int
    r: float
    h: int
    seed: int
    stream: Tuple[int, ...]
    start: int
    stop: int
    full_report: bool
    memory_budget_bytes: int
    scratch_bytes: int
    bit_rows_max_n: int


def _run_trials(task: _TrialTask) -> List[TrialOutcome]:
    engine = RainbowEngine(task.memory_budget_bytes, task.scratch_bytes)
    params = GraphParams(task.n, task.r, task.h)
    outcomes = []
    for trial in range(task.start, task.stop):
        g = generate_random(params, task.seed, stream=(*task.stream, trial))
        g.bit_rows_max_n = task.bit_rows_max_n
        if task.full_report:
            report = engine.is_rainbow_connected(g)
            worst = max(report.per_source_unconnected, default=0)
            outcomes.append(TrialOutcome(trial, report.connected, report.unconnected_pairs, worst))
        else:
            connected, _ = engine.verdict(g)
            outcomes.append(TrialOutcome(trial, connected, None, None))
    return outcomes


def _chunks(trials: int, workers: int) -> List[Tuple[int, int]]:
    count = max(1, min(trials, workers * _CHUNKS_PER_WORKER))
    bounds = [trials * i // count for i in range(count + 1)]
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def run_trials(
    n: int,
    r: float,
    h: int,
    trials: int,
    seed: int,
    stream: Tuple[int, ...] = (),
    full_report: bool = False,
    workers: Optional[int] = None,
) -> List[TrialOutcome]:
    """Per-trial outcomes in trial order, whatever the worker count."""
    engine = RainbowEngine()
    bit_rows_max_n = settings.simulation.bit_rows_max_n
    engine.check_budget_for(n, h, bit_rows_max_n)
    workers = workers or settings.simulation.resolved_workers()
    tasks = [
        _TrialTask(n, r, h, seed, tuple(stream), a, b, full_report,
                   engine.memory_budget_bytes, engine.scratch_bytes, bit_rows_max_n)
        for a, b in _chunks(trials, workers)
    ]
    if workers < 2 or len(tasks) < 2:
        results = [_run_trials(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_run_trials, tasks))
    return sorted((o for chunk in results for o in chunk), key=lambda o: o.trial)


def estimate_rainbow_probability(
    n: int,
    r: float,
    h: int,
    trials: int,
    seed: int,
    stream: Tuple[int, ...] = (),
    full_report: bool = False,
    workers: Optional[int] = None,
) -> ProbabilityEstimate:
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    GraphParams(n, r, h)
    outcomes = run_trials(n, r, h, trials, seed, stream, full_report, workers)
    successes = sum(1 for o in outcomes if o.connected)
    low, high = wilson_interval(successes, trials)
    estimate = ProbabilityEstimate(n, r, h, successes / trials, trials, successes, low, high, seed)
    if full_report:
        estimate.mean_unconnected_pairs = sum(o.unconnected_pairs for o in outcomes) / trials
        estimate.mean_max_source_unconnected = sum(o.max_source_unconnected for o in outcomes) / trials
    logger.debug(f"n={n} r={r:.6g} h={h}: {successes}/{trials} connected")
    return estimate


def probability_sweep(
    n: int,
    h: int,
    radii: Sequence[float],
    trials: int,
    seed: int,
    full_report: bool = False,
    workers: Optional[int] = None,
) -> List[ProbabilityEstimate]:
    """
    Estimates over a radius grid, ascending. Every grid point reuses the same
    trial positions, so p_hat is nondecreasing in r.
    """
    logger.info(f"Sweeping {len(radii)} radii at n={n}, h={h}, {trials} trials each")
    return [
        estimate_rainbow_probability(n, r, h, trials, seed, full_report=full_report, workers=workers)
        for r in sorted(float(r) for r in radii)
    ]


def _noise_flags(trace: List[ProbabilityEstimate]) -> List[str]:
    flags = []
    ordered = sorted(trace, key=lambda e: e.r)
    for lower, upper in zip(ordered, ordered[1:]):
        drop = lower.p_hat - upper.p_hat
        if drop > NOISE_HALF_WIDTHS * max(lower.half_width, upper.half_width):
            flags.append(
                f"non-monotone estimates: p={lower.p_hat:.4f} at r={lower.r:.6g} "
                f"but p={upper.p_hat:.4f} at r={upper.r:.6g}"
            )
    return flags


def estimate_threshold(
    n: int,
    h: int,
    trials_per_point: int,
    r_tolerance: float,
    seed: int,
    workers: Optional[int] = None,
) -> ThresholdEstimate:
    """
    Bisection on [0, sqrt(2)] for the radius where Pr(rainbow connected)
    crosses 1/2. The endpoints are exact (edgeless at 0, complete at
    sqrt(2)); each midpoint is estimated afresh with streams keyed by
    (seed, iteration, trial). r_hat interpolates linearly inside the final
    bracket.
    """
    if trials_per_point < MIN_BISECTION_TRIALS:
        raise ConfigError(f"trials_per_point must be >= {MIN_BISECTION_TRIALS}, got {trials_per_point}")
    if not r_tolerance > 0:
        raise ConfigError(f"r_tolerance must be positive, got {r_tolerance}")
    GraphParams(n, 0.0, h)

    result = ThresholdEstimate(n, h, 0.0, (0.0, 0.0), trials_per_point, r_tolerance, seed)
    if n <= 1:
        result.degenerate = True
        result.flags.append(f"n={n}: rainbow connected at every radius")
        logger.warning(f"Threshold search at n={n} is degenerate")
        return result

    lo, hi = 0.0, SQRT2
    p_lo, p_hi = 0.0, 1.0
    iteration = 0
    while hi - lo > r_tolerance:
        mid = (lo + hi) / 2.0
        estimate = estimate_rainbow_probability(
            n, mid, h, trials_per_point, seed, stream=(iteration,), workers=workers
        )
        result.trace.append(estimate)
        logger.info(
            f"Bisection step {iteration}: r={mid:.6g} p={estimate.p_hat:.4f} "
            f"[{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]"
        )
        if estimate.p_hat >= 0.5:
            hi, p_hi = mid, estimate.p_hat
        else:
            lo, p_lo = mid, estimate.p_hat
        iteration += 1

    if p_hi > p_lo:
        r_hat = lo + (0.5 - p_lo) / (p_hi - p_lo) * (hi - lo)
    else:
        r_hat = (lo + hi) / 2.0
    result.r_hat = min(hi, max(lo, r_hat))
    result.bracket = (lo, hi)
    result.flags = _noise_flags(result.trace)
    result.noisy = bool(result.flags)
    for flag in result.flags:
        logger.warning(flag)
    return result


def estimate_layer_threshold(
    n: int,
    r: float,
    h_max: int,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> LayerThresholdEstimate:
    """
    Pr(rainbow connected) for h = 1..h_max at fixed (n, r). Layer k of trial
    t comes from the same stream for every h, so adding a layer only adds
    paths and the estimates are nondecreasing in h.
    """
    GraphParams(n, r, h_max)
    estimates = [
        estimate_rainbow_probability(n, r, h, trials, seed, workers=workers)
        for h in range(1, h_max + 1)
    ]
    h_hat = next((e.h for e in estimates if e.p_hat >= 0.5), None)
    bounds = corollary_layer_bounds(n, r) if n >= 3 and 0.0 < r < 1.0 else None
    logger.info(f"Layer threshold at n={n}, r={r:.6g}: h_hat={h_hat}")
    return LayerThresholdEstimate(n, r, h_max, seed, estimates, h_hat, bounds)
