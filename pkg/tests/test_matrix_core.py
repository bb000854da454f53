import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from allreal.matrix_core import (
    DimensionError,
    ExactMatrix,
    ScaledMatrix,
    SquareMatrix,
    exact_product,
    exact_rank,
    multiply,
    product_rescaled,
    product_rescaled_batch,
    rank_le_one,
    rank_le_one_batch,
)

int_matrices = st.integers(min_value=1, max_value=5).flatmap(
    lambda k: st.lists(st.integers(-3, 3), min_size=k * k, max_size=k * k).map(
        lambda xs, k=k: ExactMatrix.from_entries(k, xs)
    )
)


def sympy_rank(m: ExactMatrix) -> int:
    return sympy.Matrix(m.rows).rank()


def test_square_matrix_rejects_nonfinite_and_bad_shapes():
    with pytest.raises(ValueError):
        SquareMatrix([[1.0, math.nan], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        SquareMatrix.from_entries(2, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionError):
        SquareMatrix(np.eye(9))


def test_square_matrix_is_immutable():
    m = SquareMatrix(np.eye(2))
    with pytest.raises(ValueError):
        m.data[0, 0] = 5.0


def test_multiply_identity():
    m = SquareMatrix([[1.5, -2.0], [0.25, 3.0]])
    assert multiply(SquareMatrix.identity(2), m) == m
    e = ExactMatrix(((1, 2), (3, 4)))
    assert multiply(ExactMatrix.identity(2), e) == e


def test_multiply_hand_example():
    a = ExactMatrix(((1, 1), (0, 1)))
    b = ExactMatrix(((1, 0), (1, 1)))
    assert multiply(a, b) == ExactMatrix(((2, 1), (1, 1)))
    assert multiply(a.to_float(), b.to_float()) == SquareMatrix([[2.0, 1.0], [1.0, 1.0]])


def test_multiply_dimension_mismatch():
    with pytest.raises(DimensionError):
        multiply(ExactMatrix.identity(2), ExactMatrix.identity(3))


def test_rank_of_product_bounded_by_factors():
    # sympy's rank is the independent oracle here
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = ExactMatrix(rng.integers(-2, 3, size=(3, 3)).tolist())
        b = ExactMatrix(rng.integers(-2, 3, size=(3, 3)).tolist())
        assert sympy_rank(multiply(a, b)) <= min(sympy_rank(a), sympy_rank(b))


@settings(max_examples=200, deadline=None)
@given(int_matrices)
def test_exact_rank_matches_sympy(m):
    assert exact_rank(m) == sympy_rank(m)


def test_product_rescaled_single_identity():
    out = product_rescaled([SquareMatrix.identity(2)])
    np.testing.assert_allclose(out.matrix.data, np.eye(2) / math.sqrt(2), rtol=1e-15)
    assert out.log_scale == pytest.approx(0.5 * math.log(2), rel=1e-15)
    assert not out.is_zero


def test_product_rescaled_zero_absorbs():
    factors = [SquareMatrix([[1.0, 2.0], [3.0, 4.0]]), SquareMatrix(np.zeros((2, 2))),
               SquareMatrix([[5.0, 1.0], [1.0, 5.0]])]
    out = product_rescaled(factors)
    assert out.is_zero and out.log_scale == 0.0
    assert not out.matrix.data.any()


def test_product_rescaled_powers_of_two():
    out = product_rescaled([SquareMatrix(2 * np.eye(2))] * 100)
    np.testing.assert_allclose(out.matrix.data, np.eye(2) / math.sqrt(2), rtol=1e-14)
    assert out.log_scale == pytest.approx(100 * math.log(2) + 0.5 * math.log(2), rel=1e-14)


def test_product_rescaled_survives_overflowing_lengths():
    out = product_rescaled([SquareMatrix(1e30 * np.eye(3))] * 200)
    assert math.isfinite(out.log_scale)
    assert abs(np.linalg.norm(out.matrix.data) - 1) <= 1e-12


def test_product_rescaled_rejects_mixed_dims():
    with pytest.raises(DimensionError):
        product_rescaled([SquareMatrix.identity(2), SquareMatrix.identity(3)])


def test_product_rescaled_nan_is_an_error():
    with pytest.raises(FloatingPointError):
        product_rescaled_batch([np.full((1, 2, 2), np.nan)])


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_rescaled_and_exact_products_agree(k):
    rng = np.random.default_rng(100 + k)
    for _ in range(50):
        n = int(rng.integers(1, 21))
        factors = [ExactMatrix(rng.integers(-1, 2, size=(k, k)).tolist()) for _ in range(n)]
        exact = exact_product(factors)
        scaled = product_rescaled([f.to_float() for f in factors])
        ref = np.array(exact.rows, dtype=float)
        if not ref.any():
            assert scaled.is_zero
            continue
        assert abs(np.linalg.norm(scaled.matrix.data) - 1) <= 1e-12
        err = np.linalg.norm(scaled.reconstruct() - ref) / np.linalg.norm(ref)
        assert err <= 1e-9


def test_exact_product_has_no_overflow():
    out = exact_product([ExactMatrix(((2, 0), (0, 2)))] * 64)
    assert out == ExactMatrix(((2**64, 0), (0, 2**64)))


def test_exact_product_single_factor_unchanged():
    m = ExactMatrix(((1, -7), (3, 2)))
    assert exact_product([m]) is m


@pytest.mark.parametrize("make", [
    lambda: np.outer([1, 2, 3], [4, 5, 6]),
    lambda: np.full((3, 3), 2.5),
    lambda: np.zeros((4, 4)),
])
def test_rank_le_one_true_cases(make):
    arr = make()
    assert rank_le_one(SquareMatrix(arr))
    assert rank_le_one(ExactMatrix(np.rint(arr * 2).astype(int).tolist()))


def test_rank_le_one_false_for_identity():
    assert not rank_le_one(SquareMatrix.identity(2))
    assert not rank_le_one(ExactMatrix.identity(2))


def test_rank_le_one_tolerance_is_relative():
    m = np.outer([1.0, 2.0], [3.0, 4.0]) * 1e-200
    assert rank_le_one(SquareMatrix(m))
    assert not rank_le_one(SquareMatrix(np.diag([1e-200, 1e-201])))


def test_rank_le_one_batch_matches_scalar():
    rng = np.random.default_rng(3)
    mats = rng.integers(-1, 2, size=(500, 3, 3)).astype(float)
    got = rank_le_one_batch(mats)
    want = [rank_le_one(SquareMatrix(m)) for m in mats]
    assert got.tolist() == want


@settings(max_examples=200, deadline=None)
@given(int_matrices, int_matrices)
def test_rank_le_one_is_absorbing_under_products(a, b):
    if a.k != b.k:
        return
    prod = multiply(a, b)
    if rank_le_one(a) or rank_le_one(b):
        assert rank_le_one(prod)


def test_scaled_matrix_zero_reconstructs_zero():
    z = ScaledMatrix(SquareMatrix(np.zeros((2, 2))), 0.0, True)
    assert not z.reconstruct().any()
