"""Small fixed-size matrices: float, log-rescaled float, and exact integer.

Float matrices are immutable numpy arrays wrapped in :class:`SquareMatrix`;
exact matrices keep Python ints, which never overflow. Batched helpers
operating on ``(batch, k, k)`` arrays back the Monte Carlo engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_K = 8
DEFAULT_RANK_TOL = 1e-10


class DimensionError(ValueError):
    """Matrices of different (or unsupported) sizes were combined."""


def _check_k(k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise DimensionError(f"dimension k={k} outside [1, {MAX_K}]")


@dataclass(frozen=True, eq=False)
class SquareMatrix:
    """A k x k real matrix with finite entries."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
        _check_k(arr.shape[0])
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_entries(cls, k: int, entries: Sequence[float]) -> SquareMatrix:
        if len(entries) != k * k:
            raise DimensionError(f"{len(entries)} entries do not fill a {k}x{k} matrix")
        return cls(np.asarray(entries, dtype=np.float64).reshape(k, k))

    @classmethod
    def identity(cls, k: int) -> SquareMatrix:
        return cls(np.eye(k))

    @property
    def k(self) -> int:
        return self.data.shape[0]

    @property
    def entries(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.data.reshape(-1))

    def __eq__(self, other):
        if not isinstance(other, SquareMatrix):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"SquareMatrix({self.data.tolist()})"


@dataclass(frozen=True)
class ScaledMatrix:
    """``exp(log_scale) * matrix`` with ``matrix`` of unit Frobenius norm.

    When ``is_zero`` is set the represented product is the zero matrix and
    ``log_scale`` is pinned to 0.
    """

    matrix: SquareMatrix
    log_scale: float = 0.0
    is_zero: bool = False

    @property
    def k(self) -> int:
        return self.matrix.k

    def reconstruct(self) -> np.ndarray:
        if self.is_zero:
            return np.zeros((self.k, self.k))
        return math.exp(self.log_scale) * self.matrix.data


def _exact_number(x):
    if isinstance(x, int):
        return int(x)
    f = Fraction(x)
    return f.numerator if f.denominator == 1 else f


@dataclass(frozen=True)
class ExactMatrix:
    """A k x k matrix of arbitrary-precision integers (row-major tuples).

    Rational entries are accepted too; they stay :class:`fractions.Fraction`.
    """

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_exact_number(x) for x in row) for row in self.rows)
        k = len(rows)
        _check_k(k)
        if any(len(row) != k for row in rows):
            raise DimensionError("rows of an ExactMatrix must all have length k")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_entries(cls, k: int, entries: Sequence[int]) -> ExactMatrix:
        if len(entries) != k * k:
            raise DimensionError(f"{len(entries)} entries do not fill a {k}x{k} matrix")
        return cls(tuple(tuple(entries[i * k:(i + 1) * k]) for i in range(k)))

    @classmethod
    def identity(cls, k: int) -> ExactMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(k)) for i in range(k)))

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(x for row in self.rows for x in row)

    def scale(self, c: int) -> ExactMatrix:
        return ExactMatrix(tuple(tuple(c * x for x in row) for row in self.rows))

    def to_float(self) -> SquareMatrix:
        return SquareMatrix(np.array(self.rows, dtype=np.float64))

    def is_zero(self) -> bool:
        return not any(self.entries)


def _exact_mul(a: tuple, b: tuple) -> tuple:
    cols = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def multiply(a, b):
    """Matrix product of two SquareMatrix or two ExactMatrix values."""
    if a.k != b.k:
        raise DimensionError(f"cannot multiply {a.k}x{a.k} by {b.k}x{b.k}")
    if isinstance(a, ExactMatrix) and isinstance(b, ExactMatrix):
        return ExactMatrix(_exact_mul(a.rows, b.rows))
    if isinstance(a, SquareMatrix) and isinstance(b, SquareMatrix):
        return SquareMatrix(a.data @ b.data)
    raise TypeError("multiply expects two matrices of the same kind")


def exact_product(factors: Iterable[ExactMatrix]) -> ExactMatrix:
    """Left-to-right exact product; a single factor is returned unchanged."""
    return reduce(multiply, factors)


def product_rescaled(factors: Sequence[SquareMatrix]) -> ScaledMatrix:
    """Left-to-right product, renormalised to unit Frobenius norm after each step."""
    if not factors:
        raise ValueError("product_rescaled needs at least one factor")
    k = factors[0].k
    if any(f.k != k for f in factors):
        raise DimensionError("all factors must share one dimension")
    mats, logs, zero = product_rescaled_batch(f.data[None] for f in factors)
    if zero[0]:
        return ScaledMatrix(SquareMatrix(np.zeros((k, k))), 0.0, True)
    return ScaledMatrix(SquareMatrix(mats[0]), float(logs[0]), False)


def product_rescaled_batch(factors: Iterable[np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rescaled products for a batch.

    ``factors`` yields ``(batch, k, k)`` arrays; column ``b`` of the result is
    the product ``factors[0][b] @ factors[1][b] @ ...``. Returns ``(matrices,
    log_scales, is_zero)``; zero products carry a zero matrix and log-scale 0.
    """
    cur = log_scale = zero = None
    for f in factors:
        f = np.asarray(f, dtype=np.float64)
        if cur is None:
            cur = f.copy()
            log_scale = np.zeros(len(f))
            zero = np.zeros(len(f), dtype=bool)
        else:
            if f.shape != cur.shape:
                raise DimensionError("all factors must share one dimension")
            cur = np.matmul(cur, f)
        norm = np.sqrt(np.einsum("bij,bij->b", cur, cur))
        if np.isnan(norm).any():
            raise FloatingPointError("NaN encountered while forming a matrix product")
        zero |= norm == 0.0
        safe = np.where(zero, 1.0, norm)
        cur /= safe[:, None, None]
        cur[zero] = 0.0
        log_scale += np.where(zero, 0.0, np.log(safe))
    if cur is None:
        raise ValueError("product needs at least one factor")
    log_scale[zero] = 0.0
    return cur, log_scale, zero


def _minors2(rows) -> Iterable:
    k = len(rows)
    for i in range(k):
        for j in range(i + 1, k):
            for p in range(k):
                for q in range(p + 1, k):
                    yield rows[i][p] * rows[j][q] - rows[i][q] * rows[j][p]


def rank_le_one(m, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Whether ``m`` has rank at most one, via its 2x2 minors.

    Exact matrices need every minor to vanish. Float matrices need every minor
    within ``tol * max|entry|**2``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(m, ExactMatrix):
        return all(x == 0 for x in _minors2(m.rows))
    if isinstance(m, ScaledMatrix):
        if m.is_zero:
            return True
        m = m.matrix
    return bool(rank_le_one_batch(m.data[None], tol)[0])


def rank_le_one_batch(mats: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Vectorised float :func:`rank_le_one` over a ``(batch, k, k)`` array."""
    from ._kernels import rank_le_one_batch as kernel

    return kernel(np.ascontiguousarray(mats, dtype=np.float64), tol)


def exact_rank(m: ExactMatrix) -> int:
    """Rank by fraction-free Gaussian elimination (Bareiss)."""
    rows = [list(r) for r in m.rows]
    k = len(rows)
    rank, prev = 0, 1
    for col in range(k):
        pivot = next((r for r in range(rank, k) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(rank + 1, k):
            for c in range(col + 1, k):
                num = rows[r][c] * rows[rank][col] - rows[rank][c] * rows[r][col]
                rows[r][c] = num // prev if isinstance(num, int) and isinstance(prev, int) else num / prev
            rows[r][col] = 0
        prev = rows[rank][col]
        rank += 1
    return rank
