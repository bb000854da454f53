"""Closed-form lower bounds, the 2x2 discriminant identity, and exact oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .matrix_core import ExactMatrix, _exact_mul, multiply, rank_le_one_batch
from .measures import (
    DEFAULT_ENUMERATION_BUDGET,
    BudgetExceededError,
    IidEntries,
    MatrixMeasure,
    draw_batch,
    enumerate_support,
    exact_rank_le_one_probability,
)
from .montecarlo import EstimateResult, TrialConfig, run_trials, wilson_interval
from .rng import derive_key
from .spectra import SpectrumClass, classify_exact

CHECK_CONFIDENCE = 0.999
# label mixed into the seed for auxiliary streams, keeping them apart from run_trials
_RANK_TALLY_LABEL = 0x52414E4B
_LEMMA_LABEL = 0x4C454D4D


def theorem1_bound(p1, n: int):
    """1 - (1 - p1)^n; exact for Fraction input, expm1/log1p otherwise."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(p1, Fraction) or isinstance(p1, int):
        p1 = Fraction(p1)
        if not 0 <= p1 <= 1:
            raise ValueError("p1 must lie in [0, 1]")
        return 1 - (1 - p1) ** n
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must lie in [0, 1]")
    if p1 == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p1))


def exact_real_probability(measure: MatrixMeasure, n: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> Fraction:
    """Exact P(X_1 ... X_n has only real eigenvalues) for a finite law.

    Equal to the sum over all n-tuples of support matrices, but tuples are
    merged by their partial product, so the work is (distinct partial
    products) x (support size) per step. ``budget`` caps that work.
    """
    support = [(m.rows, w) for m, w in enumerate_support(measure, budget)]
    states = {ExactMatrix.identity(measure.k).rows: Fraction(1)}
    work = 0
    for _ in range(n):
        work += len(states) * len(support)
        if work > budget:
            raise BudgetExceededError(f"enumeration work exceeds budget {budget}")
        nxt: dict = {}
        for rows, w in states.items():
            for f, wf in support:
                prod = _exact_mul(rows, f)
                nxt[prod] = nxt.get(prod, 0) + w * wf
        states = nxt
    return sum(
        (w for rows, w in states.items() if classify_exact(ExactMatrix(rows)) is SpectrumClass.ALL_REAL),
        Fraction(0),
    )


def exact_real_probability_tuples(measure: MatrixMeasure, n: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> Fraction:
    """Same quantity by brute force over every n-tuple; slow, kept as a cross-check."""
    support = enumerate_support(measure, budget)
    if len(support) ** n > budget:
        raise BudgetExceededError(f"{len(support)}^{n} tuples exceed budget {budget}")
    total = Fraction(0)
    for combo in itertools.product(support, repeat=n):
        prod = combo[0][0]
        mass = combo[0][1]
        for mat, w in combo[1:]:
            prod = multiply(prod, mat)
            mass *= w
        if classify_exact(prod) is SpectrumClass.ALL_REAL:
            total += mass
    return total


@dataclass(frozen=True)
class BoundReport:
    n: int
    p1: object  # Fraction when exact, float otherwise
    bound: object
    estimate: object  # EstimateResult or Fraction
    satisfied: bool
    margin: float

    @property
    def exact(self) -> bool:
        return isinstance(self.estimate, Fraction)


def rank_one_tally(measure: MatrixMeasure, trials: int, seed: int, tol: float = 1e-10) -> tuple[int, int]:
    """Monte Carlo count of single draws with rank <= 1 (float minor test)."""
    key = derive_key(seed, _RANK_TALLY_LABEL)
    hits = 0
    for start in range(0, trials, 65536):
        idx = np.arange(start, min(start + 65536, trials), dtype=np.uint64)
        hits += int(rank_le_one_batch(draw_batch(measure, key, idx, 0), tol).sum())
    return hits, trials


def rank_one_probability(measure: MatrixMeasure, *, trials: int = 100_000, seed: int = 0,
                         budget: int = DEFAULT_ENUMERATION_BUDGET):
    """Exact rank-<=1 mass when enumerable; otherwise a conservative Monte Carlo value.

    The Monte Carlo value is the lower end of the 99.9% Wilson interval, so
    the resulting bound stays a lower bound with high confidence.
    """
    if measure.k == 1:
        return Fraction(1)
    if measure.is_finite:
        try:
            return exact_rank_le_one_probability(measure, budget)
        except BudgetExceededError:
            pass
    hits, total = rank_one_tally(measure, trials, seed)
    return wilson_interval(hits, total, CHECK_CONFIDENCE)[0]


def check_theorem1(measure: MatrixMeasure, n: int, estimate, p1=None) -> BoundReport:
    """Compare an exact probability or a Monte Carlo estimate with 1 - (1 - p1)^n.

    Exact inputs are compared as rationals. For estimates, the bound is
    violated only if the 99.9% Wilson upper limit of (all real + indeterminate)
    falls below it; indeterminate outcomes therefore never cause a false alarm.
    """
    if p1 is None:
        p1 = rank_one_probability(measure)
    bound = theorem1_bound(p1, n)
    if isinstance(estimate, Fraction):
        bound_q = Fraction(bound)
        return BoundReport(n, p1, bound, estimate, estimate >= bound_q, float(estimate - bound_q))
    hi = estimate.interval(CHECK_CONFIDENCE, upper=True)[1]
    lo = estimate.interval(CHECK_CONFIDENCE)[0]
    return BoundReport(n, p1, bound, estimate, hi >= float(bound), lo - float(bound))


def discriminant_pair(a, b, c, d):
    """Discriminants of [[a, b], [c, d]] and of its row swap [[c, d], [a, b]]."""
    d1 = (a + d) ** 2 - 4 * (a * d - b * c)
    d2 = (b + c) ** 2 - 4 * (b * c - a * d)
    return d1, d2


@dataclass(frozen=True)
class LemmaReport:
    samples: int
    d1_nonneg: int
    d2_nonneg: int
    either_nonneg: int
    confidence: float

    @property
    def p_d1(self) -> float:
        return self.d1_nonneg / self.samples

    @property
    def p_d2(self) -> float:
        return self.d2_nonneg / self.samples

    @property
    def ci_d1(self) -> tuple[float, float]:
        return wilson_interval(self.d1_nonneg, self.samples, self.confidence)

    @property
    def ci_d2(self) -> tuple[float, float]:
        return wilson_interval(self.d2_nonneg, self.samples, self.confidence)

    @property
    def exchangeable(self) -> bool:
        (a, b), (c, d) = self.ci_d1, self.ci_d2
        return a <= d and c <= b

    @property
    def sure_event(self) -> bool:
        return self.either_nonneg == self.samples

    @property
    def half_bound(self) -> bool:
        return self.ci_d1[1] >= 0.5

    @property
    def passed(self) -> bool:
        return self.exchangeable and self.sure_event and self.half_bound


def _exact_signs(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # floats are dyadic rationals, so Fraction arithmetic on them is exact
    d1s, d2s = [], []
    for a, b, c, d in entries.tolist():
        d1, d2 = discriminant_pair(*(Fraction(x) for x in (a, b, c, d)))
        d1s.append(d1 >= 0)
        d2s.append(d2 >= 0)
    return np.array(d1s, dtype=bool), np.array(d2s, dtype=bool)


def lemma_exchangeable_check(measure: MatrixMeasure, samples: int, seed: int = 0, n: int = 1,
                             confidence: float = CHECK_CONFIDENCE) -> LemmaReport:
    """Empirical check of the averaging argument on 2x2 products of length ``n``.

    Samples whose discriminants are near zero in floating point are re-signed
    exactly from their (rational) float entries, so the sure-event count is
    exact for the sampled matrices.
    """
    if measure.k != 2:
        raise ValueError("the discriminant pair is defined for 2x2 matrices")
    from .matrix_core import product_rescaled_batch

    key = derive_key(seed, _LEMMA_LABEL, n)
    d1_count = d2_count = either = 0
    for start in range(0, samples, 65536):
        idx = np.arange(start, min(start + 65536, samples), dtype=np.uint64)
        mats, _, _ = product_rescaled_batch(draw_batch(measure, key, idx, f) for f in range(n))
        e = mats.reshape(len(idx), 4)
        a, b, c, d = e.T
        d1, d2 = discriminant_pair(a, b, c, d)
        pos1, pos2 = d1 >= 0, d2 >= 0
        scale = np.max(np.abs(e), axis=1) ** 2
        near = (np.abs(d1) <= 1e-12 * scale) | (np.abs(d2) <= 1e-12 * scale) | ~(pos1 | pos2)
        if near.any():
            pos1[near], pos2[near] = _exact_signs(e[near])
        d1_count += int(pos1.sum())
        d2_count += int(pos2.sum())
        either += int((pos1 | pos2).sum())
    return LemmaReport(samples, d1_count, d2_count, either, confidence)


def proposition_check(estimate: EstimateResult, trials: Optional[int] = None) -> bool:
    """k = 2 lower bound of one half, not rejected at 99.9% and p_hat within 5 sigma."""
    trials = trials or estimate.trials
    hi = estimate.interval(CHECK_CONFIDENCE, upper=True)[1]
    return hi >= 0.5 and estimate.p_hat >= 0.5 - 5 * math.sqrt(0.25 / trials)


def exhaustive_identity_check(radius: int = 5) -> tuple[int, int]:
    """Check D1 + D2 == (a+d)^2 + (b+c)^2 and max(D1, D2) >= 0 over [-r, r]^4.

    Returns ``(cases, failures)``.
    """
    cases = failures = 0
    rng = range(-radius, radius + 1)
    for a, b, c, d in itertools.product(rng, repeat=4):
        d1, d2 = discriminant_pair(a, b, c, d)
        cases += 1
        if d1 + d2 != (a + d) ** 2 + (b + c) ** 2 or max(d1, d2) < 0:
            failures += 1
    return cases, failures


def estimate_for(measure: MatrixMeasure, n: int, trials: int, seed: int, policy=None,
                 workers: int = 1) -> EstimateResult:
    kwargs = {} if policy is None else {"policy": policy}
    return run_trials(TrialConfig(measure.k, n, measure, trials, seed, **kwargs), workers)
