"""Monte Carlo estimation of P(X_1 X_2 ... X_n has only real eigenvalues).

Trial ``t`` draws from the counter space keyed by ``derive_key(seed, n)``, so
a tally depends on ``(seed, n, trial range)`` and nothing else. Trials are
processed in fixed-size chunks that threads pick up in any order; merging is
integer addition.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import reduce
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .matrix_core import multiply, product_rescaled_batch
from .measures import MatrixMeasure, NotEnumerableError, draw_batch
from .rng import derive_key
from .spectra import Policy, SpectrumClass, classify_exact, classify_float_batch

CHUNK = 8192
DEFAULT_TRIALS = 100_000


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    z2n = z * z / trials
    denom = 1 + z2n
    center = (p + z2n / 2) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z2n / (4 * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class TrialConfig:
    k: int
    n: int
    measure: MatrixMeasure
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    policy: Policy = field(default_factory=Policy)
    confidence: float = 0.95

    def __post_init__(self):
        if self.trials < 1 or self.n < 1:
            raise ValueError("trials and n must be at least 1")
        if not 1 <= self.k <= 8:
            raise ValueError("k must lie in [1, 8]")
        if self.measure.k != self.k:
            raise ValueError(f"measure is {self.measure.k}x{self.measure.k}, config says k={self.k}")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class Tally:
    all_real: int = 0
    complex_pair: int = 0
    indeterminate: int = 0
    min_log_scale: float = math.inf
    max_log_scale: float = -math.inf

    def __add__(self, other: Tally) -> Tally:
        return Tally(
            self.all_real + other.all_real,
            self.complex_pair + other.complex_pair,
            self.indeterminate + other.indeterminate,
            min(self.min_log_scale, other.min_log_scale),
            max(self.max_log_scale, other.max_log_scale),
        )


@dataclass(frozen=True)
class EstimateResult:
    all_real: int
    complex_pair: int
    indeterminate: int
    confidence: float = 0.95
    min_log_scale: float = math.nan
    max_log_scale: float = math.nan

    @property
    def trials(self) -> int:
        return self.all_real + self.complex_pair + self.indeterminate

    @property
    def p_hat(self) -> float:
        return self.all_real / self.trials

    @property
    def p_hat_upper(self) -> float:
        return (self.all_real + self.indeterminate) / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.all_real, self.trials, self.confidence)

    @property
    def ci_lo(self) -> float:
        return self.ci[0]

    @property
    def ci_hi(self) -> float:
        return self.ci[1]

    def interval(self, confidence: float, upper: bool = False) -> tuple[float, float]:
        successes = self.all_real + (self.indeterminate if upper else 0)
        return wilson_interval(successes, self.trials, confidence)


@dataclass(frozen=True)
class SweepResult:
    k: int
    seed: int
    measure: MatrixMeasure
    points: tuple  # ((n, EstimateResult), ...)

    @property
    def n_values(self) -> list[int]:
        return [n for n, _ in self.points]


def _exact_verdicts(cfg: TrialConfig, key: int, trials: np.ndarray, cache: dict) -> np.ndarray:
    """Exact verdict codes for the given trials, regenerated from their counters."""
    measure = cfg.measure
    if len(trials) == 0:
        return np.zeros(0, dtype=np.int8)
    codes = [measure.draw_codes(key, trials, f) for f in range(cfg.n)]
    out = np.empty(len(trials), dtype=np.int8)
    for i in range(len(trials)):
        product = reduce(multiply, (measure.exact_from_codes(c[i]) for c in codes))
        verdict = cache.get(product)
        if verdict is None:
            verdict = cache[product] = classify_exact(product)
        out[i] = int(verdict)
    return out


def _run_chunk(cfg: TrialConfig, key: int, start: int, stop: int) -> Tally:
    trials = np.arange(start, stop, dtype=np.uint64)
    policy = cfg.policy
    cache: dict = {}
    if cfg.k == 1:
        return Tally(all_real=stop - start)
    if policy.kind == "exact":
        if not cfg.measure.is_finite:
            raise NotEnumerableError("exact policy needs a finitely supported measure")
        codes = _exact_verdicts(cfg, key, trials, cache)
        return Tally(*(int(np.sum(codes == c)) for c in range(3)))

    cur, log_scale, zero = product_rescaled_batch(
        draw_batch(cfg.measure, key, trials, f) for f in range(cfg.n)
    )
    codes = classify_float_batch(cur, policy.tau, policy.rank_tol)
    codes[zero] = int(SpectrumClass.ALL_REAL)
    if policy.kind == "fallback" and cfg.measure.is_finite:
        undecided = np.flatnonzero(codes == int(SpectrumClass.INDETERMINATE))
        codes[undecided] = _exact_verdicts(cfg, key, trials[undecided], cache)
    live = log_scale[~zero]
    return Tally(
        *(int(np.sum(codes == c)) for c in range(3)),
        float(live.min()) if live.size else math.inf,
        float(live.max()) if live.size else -math.inf,
    )


def resolve_workers(workers: int) -> int:
    return max(1, os.cpu_count() or 1) if workers <= 0 else workers


def run_trials(cfg: TrialConfig, workers: int = 1) -> EstimateResult:
    """Estimate p_n for one configuration; identical for any ``workers``."""
    key = derive_key(cfg.seed, cfg.n)
    chunks = [(s, min(s + CHUNK, cfg.trials)) for s in range(0, cfg.trials, CHUNK)]
    workers = resolve_workers(workers)
    if workers == 1 or len(chunks) == 1:
        tallies = [_run_chunk(cfg, key, s, e) for s, e in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(lambda se: _run_chunk(cfg, key, *se), chunks))
    total = reduce(lambda a, b: a + b, tallies, Tally())
    finite = math.isfinite(total.min_log_scale)
    return EstimateResult(
        total.all_real,
        total.complex_pair,
        total.indeterminate,
        cfg.confidence,
        total.min_log_scale if finite else math.nan,
        total.max_log_scale if finite else math.nan,
    )


def sweep(cfg: TrialConfig, n_values: Sequence[int], workers: int = 1) -> SweepResult:
    """run_trials at each n; the n-th run is keyed by (seed, n)."""
    n_values = list(n_values)
    if not n_values:
        raise ValueError("n_values must be nonempty")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    points = tuple((n, run_trials(replace(cfg, n=n), workers)) for n in n_values)
    return SweepResult(cfg.k, cfg.seed, cfg.measure, points)
