"""Is the spectrum of a matrix entirely real?

Two routes: an exact one (characteristic polynomial plus Sturm counting over
the rationals, never inconclusive) and a floating-point one (Hessenberg + QR
to quasi-triangular form, classifying each 2x2 diagonal block by the sign of
its discriminant, with an explicit indeterminate band).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Sequence

import numpy as np

from . import _kernels
from .matrix_core import DEFAULT_RANK_TOL, ExactMatrix, ScaledMatrix, SquareMatrix, rank_le_one

DEFAULT_TAU = 1e-9
QR_SWEEPS_PER_DIM = 40


class SpectrumClass(enum.IntEnum):
    ALL_REAL = _kernels.ALL_REAL
    HAS_COMPLEX_PAIR = _kernels.COMPLEX_PAIR
    INDETERMINATE = _kernels.INDETERMINATE


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial, coefficients from the leading 1 down to the constant."""

    coefficients: tuple

    def __post_init__(self):
        if not self.coefficients or self.coefficients[0] != 1:
            raise ValueError("characteristic polynomial must be monic")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Rational) for c in self.coefficients)

    def __call__(self, x):
        acc = 0
        for c in self.coefficients:
            acc = acc * x + c
        return acc


def char_poly(m: SquareMatrix | ExactMatrix) -> CharPoly:
    """det(xI - M) by the Faddeev-LeVerrier trace recursion.

    Exact matrices give exact coefficients: with integer entries every
    division in the recursion is exact.
    """
    if isinstance(m, ScaledMatrix):
        raise TypeError("pass m.matrix (the scale does not change realness)")
    if isinstance(m, ExactMatrix):
        rows = [list(r) for r in m.rows]
        k = m.k
        integral = all(isinstance(x, int) for r in rows for x in r)
        coeffs = [1]
        cur = [[0] * k for _ in range(k)]  # M_0
        for step in range(1, k + 1):
            # M_step = A M_{step-1} + c I ; c_{k-step} = -tr(A M_step) / step
            c_prev = coeffs[-1]
            cur = [[sum(rows[i][l] * cur[l][j] for l in range(k)) + (c_prev if i == j else 0)
                    for j in range(k)] for i in range(k)]
            tr = sum(rows[i][l] * cur[l][i] for i in range(k) for l in range(k))
            if integral:
                q, rem = divmod(-tr, step)
                assert rem == 0
                coeffs.append(q)
            else:
                coeffs.append(Fraction(-tr, step) if isinstance(tr, int) else -tr / step)
        return CharPoly(tuple(coeffs))
    a = m.data
    k = m.k
    coeffs = [1.0]
    cur = np.zeros((k, k))
    eye = np.eye(k)
    for step in range(1, k + 1):
        cur = a @ cur + coeffs[-1] * eye
        coeffs.append(-float(np.trace(a @ cur)) / step)
    coeffs[0] = 1
    return CharPoly(tuple(coeffs))


def discriminant_2x2(a, b, c, d):
    """(a + d)^2 - 4(ad - bc); nonnegative iff [[a, b], [c, d]] has real eigenvalues."""
    return (a + d) ** 2 - 4 * (a * d - b * c)


# -- exact polynomial arithmetic on descending coefficient lists of Fractions --

def _trim(p: list) -> list:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _derivative(p: list) -> list:
    n = len(p) - 1
    return _trim([c * (n - i) for i, c in enumerate(p[:-1])]) or [Fraction(0)]


def _rem(a: list, b: list) -> list:
    a = list(a)
    db = len(b) - 1
    lead = b[0]
    while len(a) - 1 >= db and any(a):
        f = a[0] / lead
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
        if not a:
            return [Fraction(0)]
    return _trim(a) if a else [Fraction(0)]


def _quo(a: list, b: list) -> list:
    a = list(a)
    db = len(b) - 1
    out = []
    while len(a) - 1 >= db:
        f = a[0] / b[0]
        out.append(f)
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
    return _trim(out) if out else [Fraction(0)]


def _is_zero(p: list) -> bool:
    return all(c == 0 for c in p)


def _gcd(a: list, b: list) -> list:
    while not _is_zero(b):
        a, b = b, _rem(a, b)
    return [c / a[0] for c in a]


def square_free_part(coefficients: Sequence) -> list:
    p = _trim([Fraction(c) for c in coefficients])
    if _is_zero(p):
        raise ValueError("the zero polynomial has no square-free part")
    if len(p) == 1:
        return p
    return _quo(p, _gcd(p, _derivative(p)))


@dataclass(frozen=True)
class SturmChain:
    polynomials: tuple

    @classmethod
    def of(cls, square_free: Sequence) -> SturmChain:
        chain = [list(square_free), _derivative(list(square_free))]
        while len(chain[-1]) > 1:
            r = _rem(chain[-2], chain[-1])
            if _is_zero(r):
                break
            chain.append([-c for c in r])
        return cls(tuple(tuple(p) for p in chain))

    def variations_at_infinity(self, sign: int) -> int:
        signs = []
        for p in self.polynomials:
            lead = p[0]
            if lead == 0:
                continue
            s = 1 if lead > 0 else -1
            if sign < 0 and (len(p) - 1) % 2 == 1:
                s = -s
            signs.append(s)
        return sum(1 for x, y in zip(signs, signs[1:]) if x != y)


def _exact_coeffs(p) -> tuple:
    coeffs = p.coefficients if isinstance(p, CharPoly) else tuple(p)
    if not all(isinstance(c, Rational) for c in coeffs):
        raise TypeError("Sturm counting needs exact (integer or rational) coefficients")
    return coeffs


@lru_cache(maxsize=65536)
def _count_real_roots(coeffs: tuple) -> tuple[int, int]:
    q = square_free_part(coeffs)
    if len(q) == 1:
        return 0, 0
    chain = SturmChain.of(q)
    return chain.variations_at_infinity(-1) - chain.variations_at_infinity(+1), len(q) - 1


def sturm_real_root_count(p) -> int:
    """Number of distinct real roots of an exact polynomial."""
    coeffs = _exact_coeffs(p)
    if all(c == 0 for c in coeffs):
        raise ValueError("the zero polynomial has infinitely many roots")
    return _count_real_roots(coeffs)[0]


def all_roots_real_exact(p) -> bool:
    """True iff every complex root of ``p`` is real (multiplicities ignored)."""
    coeffs = _exact_coeffs(p)
    count, degree = _count_real_roots(coeffs)
    return count == degree


def classify_exact(m: ExactMatrix) -> SpectrumClass:
    if m.k == 1 or rank_le_one(m):
        # eigenvalues are 0 (k-1 times) and the trace
        return SpectrumClass.ALL_REAL
    den = math.lcm(*(x.denominator for row in m.rows for x in row))
    if den != 1:
        # a positive multiple has the same verdict; integer arithmetic is cheaper
        m = ExactMatrix(tuple(tuple(int(x * den) for x in row) for row in m.rows))
    if all_roots_real_exact(char_poly(m)):
        return SpectrumClass.ALL_REAL
    return SpectrumClass.HAS_COMPLEX_PAIR


def classify_spectrum_float(m: ScaledMatrix | SquareMatrix, tau: float = DEFAULT_TAU,
                            rank_tol: float = DEFAULT_RANK_TOL) -> SpectrumClass:
    """Float verdict from the 2x2 blocks of a quasi-triangular form.

    A block is real if its discriminant is at least ``tau * s**2`` (``s`` its
    largest entry), complex below ``-tau * s**2``, undecided in between; QR
    non-convergence is undecided too. Matrices passing the relative rank-<=1
    minor test at ``rank_tol`` are real outright: their eigenvalues are zero
    and the trace, while rounding would make the zero cluster look random.
    """
    if tau <= 0 or rank_tol <= 0:
        raise ValueError("tolerances must be positive")
    if isinstance(m, ScaledMatrix):
        if m.is_zero:
            return SpectrumClass.ALL_REAL
        m = m.matrix
    if np.isnan(m.data).any():
        raise ValueError("NaN matrix")
    return SpectrumClass(int(classify_float_batch(m.data[None], tau, rank_tol)[0]))


def classify_float_batch(mats: np.ndarray, tau: float = DEFAULT_TAU,
                         rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Verdict codes (``SpectrumClass`` ordinals) for a ``(batch, k, k)`` array."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.shape[1] == 1:
        return np.zeros(mats.shape[0], dtype=np.int8)
    return _kernels.classify_batch(mats, tau, rank_tol, QR_SWEEPS_PER_DIM)


@dataclass(frozen=True)
class Policy:
    """How to classify: ``"float"``, ``"exact"`` or ``"fallback"`` (float, exact on ties)."""

    kind: str = "fallback"
    tau: float = DEFAULT_TAU
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if self.kind not in ("float", "exact", "fallback"):
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.tau <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def float_only(cls, tau: float = DEFAULT_TAU, rank_tol: float = DEFAULT_RANK_TOL) -> Policy:
        return cls("float", tau, rank_tol)

    @classmethod
    def exact_only(cls) -> Policy:
        return cls("exact")

    @classmethod
    def float_with_exact_fallback(cls, tau: float = DEFAULT_TAU, rank_tol: float = DEFAULT_RANK_TOL) -> Policy:
        return cls("fallback", tau, rank_tol)


def classify_spectrum(m, policy: Policy = Policy(), exact: ExactMatrix | None = None) -> SpectrumClass:
    """Dispatch on ``policy``.

    ``m`` may be an :class:`ExactMatrix`, a :class:`ScaledMatrix` or a
    :class:`SquareMatrix`. ``exact`` optionally supplies the exact twin of a
    float input for the fallback route.
    """
    if isinstance(m, ExactMatrix):
        if policy.kind == "float":
            return classify_spectrum_float(m.to_float(), policy.tau, policy.rank_tol)
        return classify_exact(m)
    if policy.kind == "exact":
        if exact is None:
            raise TypeError("exact policy requested for a matrix with no exact representation")
        return classify_exact(exact)
    verdict = classify_spectrum_float(m, policy.tau, policy.rank_tol)
    if verdict is SpectrumClass.INDETERMINATE and policy.kind == "fallback" and exact is not None:
        return classify_exact(exact)
    return verdict
