#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from scaling.errors import DimensionTooLarge, NearSingular
from scaling.numerics import (
    Infeasible, LPCertificate, bit_complexity, flatten, inv_sqrt_psd, is_hermitian_psd, kron, lp_strict_feasible,
    permanent_exact, rational_rank, to_fraction,
)
from scaling.tensor_scaling import ghz


def brute_permanent(rows):
    n = len(rows)
    total = Fraction(0)
    for sigma in permutations(range(n)):
        term = Fraction(1)
        for i, j in enumerate(sigma):
            term *= Fraction(rows[i][j])
        total += term
    return total


def test_to_fraction_accepts_strings_and_floats():
    assert to_fraction("3/4") == Fraction(3, 4)
    assert to_fraction(" 7 ") == 7
    assert to_fraction(0.5) == Fraction(1, 2)
    with pytest.raises(TypeError):
        to_fraction(True)
    with pytest.raises(ValueError):
        to_fraction(float("nan"))


def test_bit_complexity_takes_largest_numerator_or_denominator():
    assert bit_complexity(["3/4", 5]) == 3
    assert bit_complexity([0]) == 1
    assert bit_complexity(["1/1024"]) == 11


def test_inv_sqrt_psd_diagonal():
    result = inv_sqrt_psd(np.diag([4.0, 9.0]))
    assert np.allclose(result, np.diag([0.5, 1 / 3]))


def test_inv_sqrt_psd_random_psd(rng):
    X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    M = X @ X.conj().T + np.eye(4)
    R = inv_sqrt_psd(M)
    assert np.allclose(R @ M @ R, np.eye(4), atol=1e-10)
    assert is_hermitian_psd(R)


def test_inv_sqrt_psd_rejects_singular():
    with pytest.raises(NearSingular) as info:
        inv_sqrt_psd(np.diag([1.0, 0.0]))
    assert info.value.min_eigenvalue == pytest.approx(0.0)
    with pytest.raises(NearSingular):
        inv_sqrt_psd(np.zeros((2, 2)))


def test_kron_index_arithmetic():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(np.diag([2, 3]), np.diag([5, 7])), np.diag([10, 14, 15, 21]))
    E12, E21 = np.zeros((2, 2)), np.zeros((2, 2))
    E12[0, 1] = E21[1, 0] = 1
    product = kron(E12, E21)
    assert product[1, 2] == 1 and product.sum() == 1


def test_flatten_ghz_is_two_by_four():
    B = flatten(ghz(3, 2), 0)
    expected = np.zeros((2, 4))
    expected[0, 0] = expected[1, 3] = 1 / np.sqrt(2)
    assert B.shape == (2, 4)
    assert np.allclose(B, expected)


def test_flatten_rejects_bad_axis():
    with pytest.raises(ValueError):
        flatten(ghz(3, 2), 3)


@pytest.mark.parametrize("k, n", [(1, 1), (2, 3), (3, 2), (4, 4), (2, 4)])
def test_kron_determinant_identity(rng, k, n):
    B = rng.standard_normal((n, n))
    lhs = np.linalg.det(kron(np.eye(k), B))
    rhs = np.linalg.det(B) ** k
    assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1e-300)


@pytest.mark.parametrize("shape", [(1, 2, 2, 2), (2, 3, 2), (3, 2, 3, 4), (1, 5)])
def test_flatten_preserves_norm_on_every_axis(rng, shape):
    A = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    total = np.linalg.norm(A) ** 2
    for axis in range(len(shape) - 1):
        B = flatten(A, axis)
        assert B.shape[0] == shape[axis + 1]
        assert np.trace(B @ B.conj().T).real == pytest.approx(total, rel=1e-10)
        assert np.linalg.norm(B) ** 2 == pytest.approx(total, rel=1e-10)


@pytest.mark.parametrize("rows, value", [
    ([[1, 2], [3, 4]], 10),
    (np.eye(4, dtype=int).tolist(), 1),
    ([[1] * 3] * 3, 6),
    ([["1/2", "1/3"], [1, 1]], Fraction(5, 6)),
])
def test_permanent_exact_known_values(rows, value):
    assert permanent_exact(rows) == value


def test_permanent_exact_matches_permutation_sum(rng):
    for n in range(1, 6):
        rows = rng.integers(-3, 6, size=(n, n)).tolist()
        assert permanent_exact(rows) == brute_permanent(rows)


def test_permanent_exact_size_limit():
    with pytest.raises(DimensionTooLarge):
        permanent_exact(np.ones((13, 13), dtype=int).tolist())


def test_rational_rank():
    assert rational_rank([[1, 2], [2, 4]]) == 1
    assert rational_rank(np.eye(3, dtype=int).tolist()) == 3
    assert rational_rank([["1/3", "2/3", 1], [1, 2, 3]]) == 1
    assert rational_rank([]) == 0


def test_lp_feasible_orthant():
    rows = [[1, 0], [0, 1]]
    result = lp_strict_feasible(rows)
    assert isinstance(result, LPCertificate)
    assert result.verify(rows)
    assert result.margin == 1


def test_lp_infeasible_opposite_rows():
    rows = [[1], [-1]]
    result = lp_strict_feasible(rows)
    assert isinstance(result, Infeasible)
    assert result.weights == (Fraction(1, 2), Fraction(1, 2))
    assert result.verify(rows)


def test_lp_infeasible_against_equalities():
    strict, equalities = [[1, 1]], [[1, 1]]
    result = lp_strict_feasible(strict, equalities)
    assert isinstance(result, Infeasible)
    assert result.verify(strict, equalities)


def test_lp_feasible_with_equalities():
    strict = [[1, 0, 1, 0], [0, 1, 0, 1]]
    equalities = [[1, 1, 0, 0], [0, 0, 1, 1]]
    result = lp_strict_feasible(strict, equalities)
    assert isinstance(result, LPCertificate)
    assert result.verify(strict, equalities)


def test_lp_no_strict_rows_is_trivially_feasible():
    result = lp_strict_feasible([], [[1, 1]])
    assert isinstance(result, LPCertificate)


def test_lp_size_limit():
    with pytest.raises(DimensionTooLarge):
        lp_strict_feasible([[1] * 65])


def test_farkas_exclusivity_on_random_weight_systems(rng):
    for _ in range(500):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 7))
        rows = rng.integers(-3, 4, size=(m, n)).tolist()
        result = lp_strict_feasible(rows)
        assert isinstance(result, (LPCertificate, Infeasible))
        assert result.verify(rows)
        if isinstance(result, LPCertificate):
            assert not any(all(x == 0 for x in row) for row in rows)
