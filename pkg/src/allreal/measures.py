"""Laws of a single factor matrix and how to sample or enumerate them.

Sampling is counter based: entry ``e`` of factor ``f`` in trial ``t`` reads
the uniforms at counter ``(slot, f, t)``, so any trial can be regenerated in
isolation (the exact fallback relies on this).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .matrix_core import MAX_K, ExactMatrix, SquareMatrix, rank_le_one
from .rng import TrialStream, uniforms

DEFAULT_ENUMERATION_BUDGET = 10**7
MASS_TOL = 1e-12


class MeasureError(ValueError):
    pass


class MassSumError(MeasureError):
    """Masses of a measure do not add up to 1."""


class NotEnumerableError(MeasureError, TypeError):
    """The measure has no exact finite representation."""


class BudgetExceededError(RuntimeError):
    """An exact enumeration would exceed its work budget."""


def _mass(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if not self.std > 0:
            raise MeasureError("Gaussian std must be positive")


@dataclass(frozen=True)
class Uniform:
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise MeasureError("Uniform needs lo < hi")


@dataclass(frozen=True)
class AtomicMixture:
    """Atoms ``(value, mass)`` plus an optional continuous part of weight ``1 - sum(masses)``."""

    atoms: tuple = ()
    continuous: Gaussian | Uniform | None = None

    def __post_init__(self):
        atoms = tuple((_mass(v), _mass(w)) for v, w in self.atoms)
        if any(w <= 0 for _, w in atoms):
            raise MeasureError("atom masses must be positive")
        if len({v for v, _ in atoms}) != len(atoms):
            raise MeasureError("atom values must be distinct")
        total = sum((w for _, w in atoms), Fraction(0))
        if self.continuous is None:
            if abs(total - 1) > MASS_TOL:
                raise MassSumError(f"mass sum {total} != 1")
        elif not 0 <= total < 1:
            raise MassSumError(f"atom mass {total} leaves no room for the continuous part")
        object.__setattr__(self, "atoms", atoms)

    @property
    def continuous_weight(self) -> Fraction:
        if self.continuous is None:
            return Fraction(0)
        return 1 - sum((w for _, w in self.atoms), Fraction(0))

    @property
    def is_finite(self) -> bool:
        return self.continuous is None


def Rademacher() -> AtomicMixture:
    return AtomicMixture(((1, Fraction(1, 2)), (-1, Fraction(1, 2))))


EntryMeasure = Union[Gaussian, Uniform, AtomicMixture]


def _sample_continuous(law, u1, u2):
    if isinstance(law, Gaussian):
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        return law.mean + law.std * radius * np.cos(2.0 * np.pi * u2)
    return law.lo + (law.hi - law.lo) * u1


def _pick(u, masses: Sequence[Fraction]) -> np.ndarray:
    cdf = np.cumsum([float(w) for w in masses])
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(masses) - 1)


@dataclass(frozen=True)
class IidEntries:
    entry: EntryMeasure
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= MAX_K:
            raise MeasureError(f"k={self.k} outside [1, {MAX_K}]")

    @property
    def slots(self) -> int:
        return 2 * self.k * self.k

    def draw(self, key: int, trials: np.ndarray, factor: int, slot0: int = 0) -> np.ndarray:
        k2 = self.k * self.k
        shape = (len(trials), k2)
        t = np.asarray(trials, dtype=np.uint64)[:, None]
        e = np.arange(k2, dtype=np.uint64)[None, :]
        u1, u2 = uniforms(key, t, factor, slot0 + e)
        law = self.entry
        if isinstance(law, AtomicMixture):
            values = np.zeros(shape)
            if law.atoms:
                u3, _ = uniforms(key, t, factor, slot0 + k2 + e)
                masses = [w for _, w in law.atoms]
                if law.continuous is not None:
                    masses.append(law.continuous_weight)
                choice = _pick(u3, masses)
                atom_vals = np.array([float(v) for v, _ in law.atoms] + [0.0])
                values = atom_vals[np.minimum(choice, len(law.atoms))]
                if law.continuous is not None:
                    cont = choice == len(law.atoms)
                    values = np.where(cont, _sample_continuous(law.continuous, u1, u2), values)
            else:
                values = _sample_continuous(law.continuous, u1, u2)
        else:
            values = _sample_continuous(law, u1, u2)
        return values.reshape(len(trials), self.k, self.k)

    def draw_codes(self, key: int, trials: np.ndarray, factor: int, slot0: int = 0) -> np.ndarray:
        """Atom indices behind :meth:`draw` (finite entry laws only)."""
        law = self.entry
        k2 = self.k * self.k
        t = np.asarray(trials, dtype=np.uint64)[:, None]
        e = np.arange(k2, dtype=np.uint64)[None, :]
        u3, _ = uniforms(key, t, factor, slot0 + k2 + e)
        return _pick(u3, [w for _, w in law.atoms]).reshape(len(trials), self.k, self.k)

    @property
    def is_finite(self) -> bool:
        return isinstance(self.entry, AtomicMixture) and self.entry.is_finite

    def exact_from_codes(self, codes: np.ndarray) -> ExactMatrix:
        key = codes.tobytes()
        cache = self.__dict__.setdefault("_exact_cache", {})
        mat = cache.get(key)
        if mat is None:
            values = [v for v, _ in self.entry.atoms]
            mat = cache[key] = ExactMatrix(tuple(tuple(values[c] for c in row) for row in codes.tolist()))
        return mat


def gaussian_outer_product(key: int, trials: np.ndarray, factor: int, k: int, slot0: int) -> np.ndarray:
    """Default rank-one sampler: u v^T with independent standard Gaussian u, v."""
    t = np.asarray(trials, dtype=np.uint64)[:, None]
    idx = np.arange(k, dtype=np.uint64)[None, :]
    g = Gaussian()
    u1, u2 = uniforms(key, t, factor, slot0 + idx)
    v1, v2 = uniforms(key, t, factor, slot0 + k + idx)
    u = _sample_continuous(g, u1, u2)
    v = _sample_continuous(g, v1, v2)
    return u[:, :, None] * v[:, None, :]


@dataclass(frozen=True)
class RankOneMixture:
    """With probability ``p1`` a rank-one draw, otherwise a draw from ``generic``."""

    p1: Fraction
    generic: IidEntries
    rank_one_sampler: Callable = field(default=gaussian_outer_product, compare=False)

    def __post_init__(self):
        p1 = _mass(self.p1)
        if not 0 < p1 <= 1:
            raise MeasureError("p1 must lie in (0, 1]")
        object.__setattr__(self, "p1", p1)

    @property
    def k(self) -> int:
        return self.generic.k

    is_finite = False

    def draw(self, key: int, trials: np.ndarray, factor: int) -> np.ndarray:
        base = self.generic.slots
        t = np.asarray(trials, dtype=np.uint64)
        coin, _ = uniforms(key, t, factor, base)
        r1 = self.rank_one_sampler(key, trials, factor, self.k, base + 1)
        gen = self.generic.draw(key, trials, factor)
        return np.where((coin < float(self.p1))[:, None, None], r1, gen)


@dataclass(frozen=True)
class FiniteSupport:
    """Explicit list of ``(matrix, mass)`` pairs."""

    support: tuple

    def __post_init__(self):
        items = []
        for mat, w in self.support:
            if not isinstance(mat, (ExactMatrix, SquareMatrix)):
                mat = ExactMatrix(tuple(tuple(r) for r in mat))
            items.append((mat, _mass(w)))
        if not items:
            raise MeasureError("finite support cannot be empty")
        if any(w <= 0 for _, w in items):
            raise MeasureError("support masses must be positive")
        if sum((w for _, w in items), Fraction(0)) != 1:
            raise MassSumError("support masses must sum to exactly 1")
        if len({m.k for m, _ in items}) != 1:
            raise MeasureError("support matrices must share one dimension")
        object.__setattr__(self, "support", tuple(items))
        floats = np.stack([(m.to_float() if isinstance(m, ExactMatrix) else m).data for m, _ in items])
        object.__setattr__(self, "_floats", floats)

    @property
    def k(self) -> int:
        return self.support[0][0].k

    @property
    def is_finite(self) -> bool:
        return all(isinstance(m, ExactMatrix) for m, _ in self.support)

    def draw_codes(self, key: int, trials: np.ndarray, factor: int) -> np.ndarray:
        u, _ = uniforms(key, np.asarray(trials, dtype=np.uint64), factor, 0)
        return _pick(u, [w for _, w in self.support])

    def draw(self, key: int, trials: np.ndarray, factor: int) -> np.ndarray:
        return self._floats[self.draw_codes(key, trials, factor)]

    def exact_from_codes(self, code) -> ExactMatrix:
        return self.support[int(code)][0]


MatrixMeasure = Union[IidEntries, RankOneMixture, FiniteSupport]


def draw_batch(measure: MatrixMeasure, key: int, trials: np.ndarray, factor: int) -> np.ndarray:
    """Float draws of factor ``factor`` for every trial index in ``trials``."""
    return measure.draw(key, np.asarray(trials, dtype=np.uint64), factor)


def draw_exact(measure: MatrixMeasure, key: int, trial: int, factor: int) -> ExactMatrix:
    """The exact matrix behind ``draw_batch(measure, key, [trial], factor)``."""
    if not measure.is_finite:
        raise NotEnumerableError("measure has no exact representation")
    codes = measure.draw_codes(key, np.array([trial], dtype=np.uint64), factor)
    return measure.exact_from_codes(codes[0])


def sample_matrix(measure: MatrixMeasure, stream: TrialStream):
    """One draw at the stream's current (trial, factor); advances the stream.

    Finite (exactly representable) laws yield an :class:`ExactMatrix`.
    """
    trial, factor = stream.trial, stream.factor
    stream.advance_factor()
    if measure.is_finite:
        return draw_exact(measure, stream.key, trial, factor)
    return SquareMatrix(draw_batch(measure, stream.key, np.array([trial]), factor)[0])


def atom_rank_one_lower_bound(measure: IidEntries) -> Fraction:
    """P(all k^2 entries equal one atom): a certified lower bound on P(rank <= 1)."""
    law = measure.entry
    if not isinstance(law, AtomicMixture):
        return Fraction(0)
    n = measure.k * measure.k
    return sum((w ** n for _, w in law.atoms), Fraction(0))


def _support_size(measure: MatrixMeasure) -> int:
    if isinstance(measure, FiniteSupport):
        return len(measure.support)
    if isinstance(measure, IidEntries) and measure.is_finite:
        return len(measure.entry.atoms) ** (measure.k * measure.k)
    raise NotEnumerableError("only finitely supported measures can be enumerated")


def enumerate_support(measure: MatrixMeasure, budget: int = DEFAULT_ENUMERATION_BUDGET) -> list:
    """All ``(ExactMatrix, Fraction mass)`` pairs of a finite law; masses sum to 1."""
    size = _support_size(measure)
    if size > budget:
        raise BudgetExceededError(f"support of {size} matrices exceeds budget {budget}")
    if isinstance(measure, FiniteSupport):
        if not measure.is_finite:
            raise NotEnumerableError("support contains float matrices; no exact enumeration")
        return list(measure.support)
    k = measure.k
    atoms = measure.entry.atoms
    out = []
    for combo in itertools.product(atoms, repeat=k * k):
        mass = math.prod((w for _, w in combo), start=Fraction(1))
        out.append((ExactMatrix.from_entries(k, [v for v, _ in combo]), mass))
    return out


def exact_rank_le_one_probability(measure: MatrixMeasure, budget: int = DEFAULT_ENUMERATION_BUDGET) -> Fraction:
    """Exact P(rank X <= 1) by enumerating the support."""
    return sum((w for m, w in enumerate_support(measure, budget) if rank_le_one(m)), Fraction(0))
