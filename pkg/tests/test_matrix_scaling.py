#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from scaling.errors import MarginalMismatch, NotScalable, PreconditionViolated
from scaling.invariant_core import PotentialTracker
from scaling.matrix_scaling import (
    DiagonalScaling, MatchingCertificate, MatrixScalingAdapter, NonNegMatrix, ds, is_scalable, is_scalable_by_scaling,
    kl_divergence, permanent_approx, sinkhorn, sinkhorn_budget, sinkhorn_rc, support_nullcone,
)
from scaling.numerics import permanent_exact
from scaling.report import Status


def binary_supports(n):
    for bits in product((0, 1), repeat=n * n):
        yield np.array(bits, dtype=float).reshape(n, n)


def random_rational_matrix(rng, n, bits=16):
    top = 2 ** bits - 1
    return NonNegMatrix.from_rows(
        [[Fraction(int(rng.integers(1, top + 1)), top) for _ in range(n)] for _ in range(n)])


def test_identity_converges_without_iterations():
    report = sinkhorn(np.eye(2), 1e-6)
    assert report.status == Status.CONVERGED
    assert report.iterations == 0
    assert report.final_ds == 0.0


def test_zero_column_is_not_scalable():
    A = [[0, 1], [0, 1]]
    report = sinkhorn(A, 1e-6)
    assert report.status == Status.NOT_SCALABLE
    assert report.certificate["type"] == "hall-violator"
    certificate = MatchingCertificate(violator_rows=tuple(report.certificate["rows"]),
                                      neighborhood=tuple(report.certificate["neighborhood"]))
    assert certificate.verify(A)
    assert report.certificate["trivialCheck"]["type"] == "zero-column"


def test_triangular_matrix_converges_slowly():
    report = sinkhorn([[1, 1], [0, 1]], 1e-2)
    assert report.converged
    assert report.iterations > 1
    scaled = DiagonalScaling.from_report(report).apply([[1, 1], [0, 1]])
    assert ds(scaled) <= 1e-2


def test_explicit_budget_exhaustion_is_not_a_verdict():
    report = sinkhorn([[1, 1], [0, 1]], 1e-12, budget=5)
    assert report.status == Status.BUDGET_EXHAUSTED
    assert report.iterations == 5


def test_matrix_decision_on_all_binary_supports():
    n = 3
    eps = 1.0 / (n + 1)
    for A in binary_supports(n):
        scalable, certificate = is_scalable(A)
        assert certificate.verify(A)
        report = sinkhorn(A, eps)
        assert report.converged == scalable
        if report.converged:
            assert report.iterations <= sinkhorn_budget(n, 1, eps, 10)
        else:
            assert report.status == Status.NOT_SCALABLE


def test_sinkhorn_convergence_and_monotone_potential(rng):
    n, eps = 10, 1e-6
    for _ in range(100):
        M = random_rational_matrix(rng, n)
        assert M.bit_complexity <= 16
        scalable, matching = is_scalable(M)
        assert scalable
        report = sinkhorn(M, eps, tracker=PotentialTracker.matching_monomial(matching.permutation))
        assert report.converged
        assert report.iterations <= sinkhorn_budget(n, M.bit_complexity, eps, 10)
        values = report.potential_trace
        assert len(values) == len(report.ds_trace)
        # the first step fixes the total mass; from then on every step gains
        for t in range(1, report.iterations):
            if report.ds_trace[t] > eps:
                assert values[t + 1] > values[t]


def test_scaling_by_reported_scalers(rng):
    A = rng.uniform(0.1, 1.0, size=(4, 4))
    report = sinkhorn(A, 1e-9)
    scaled = DiagonalScaling.from_report(report).apply(A)
    assert np.allclose(scaled.sum(axis=1), 1, atol=1e-4)
    assert np.allclose(scaled.sum(axis=0), 1, atol=1e-4)
    assert ds(scaled) == pytest.approx(report.final_ds, abs=1e-12)


def test_trace_rows_match_iterations():
    report = sinkhorn([[1, 2], [3, 4]], 1e-8)
    rows = report.trace_rows()
    assert len(rows) == report.iterations + 1
    assert rows[0]["iter"] == 0
    assert rows[-1]["ds"] == report.final_ds
    assert {row["side"] for row in rows[1:]} <= {"row", "col"}


def test_scaling_decision_helper():
    assert is_scalable_by_scaling([[1, 1], [0, 1]])
    assert not is_scalable_by_scaling([[1, 1], [0, 0]])


def test_nonneg_matrix_validation():
    with pytest.raises(PreconditionViolated):
        NonNegMatrix.from_rows([[1, -1], [1, 1]])
    with pytest.raises(PreconditionViolated):
        NonNegMatrix.from_rows([[1, 1]])
    assert NonNegMatrix.from_rows([["1/3", 0], [0, "5/2"]]).bit_complexity == 3


def test_support_nullcone_with_matching():
    support = [(0, 0), (0, 1), (1, 1), (2, 2), (2, 0)]
    verdict = support_nullcone(support, 3)
    assert not verdict.in_null_cone
    assert verdict.matching.verify(np.array([[1, 1, 0], [0, 1, 0], [1, 0, 1]]))


def test_support_nullcone_exponents():
    support = [(0, 0), (1, 0)]
    verdict = support_nullcone(support, 2)
    assert verdict.in_null_cone
    a, b = verdict.row_exponents, verdict.col_exponents
    assert sum(a) == 0 and sum(b) == 0
    assert all(a[i] + b[j] > 0 for i, j in support)


@pytest.mark.slow
def test_support_nullcone_agrees_with_hall_on_all_supports():
    n = 3
    for A in binary_supports(n):
        support = [tuple(int(k) for k in idx) for idx in zip(*np.nonzero(A))]
        verdict = support_nullcone(support, n)
        scalable, _ = is_scalable(A)
        assert verdict.in_null_cone == (not scalable)
        if verdict.in_null_cone:
            a, b = verdict.row_exponents, verdict.col_exponents
            assert sum(a) == 0 and sum(b) == 0
            assert all(a[i] + b[j] > 0 for i, j in support)


def test_sinkhorn_rc_minimizes_kl():
    A = np.ones((2, 2))
    r, c = [0.5, 1.5], [1.0, 1.0]
    report = sinkhorn_rc(A, r, c, 1e-12)
    assert report.converged
    scaled = DiagonalScaling.from_report(report).apply(A)
    assert np.allclose(scaled, np.outer(r, c) / 2, atol=1e-6)
    other = np.array([[0.1, 0.4], [0.9, 0.6]])
    assert kl_divergence(scaled, A) < kl_divergence(other, A)


def test_sinkhorn_rc_preconditions():
    with pytest.raises(MarginalMismatch):
        sinkhorn_rc(np.ones((2, 2)), [1, 1], [1, 2], 1e-6)
    with pytest.raises(PreconditionViolated):
        sinkhorn_rc(np.ones((2, 2)), [0, 2], [1, 1], 1e-6)


def test_kl_divergence_support():
    assert kl_divergence([[1, 0], [0, 1]], [[1, 1], [1, 1]]) == pytest.approx(0.0)
    assert kl_divergence([[1, 1], [0, 1]], [[1, 0], [0, 1]]) == math.inf


def test_permanent_identity():
    interval = permanent_approx(np.eye(4), with_exact=True)
    assert interval.contains(1)
    assert interval.exact == 1


def test_permanent_two_by_two():
    interval = permanent_approx([[1, 2], [3, 4]], eps=1e-6, with_exact=True)
    assert interval.exact == 10
    assert interval.contains(10)
    assert interval.hi == pytest.approx(19.8, rel=1e-2)


def test_permanent_sandwich_on_random_matrices(rng):
    for trial in range(25):
        n = 4 + trial % 5
        A = NonNegMatrix.from_rows(
            [[Fraction(int(rng.integers(1, 100)), 10) for _ in range(n)] for _ in range(n)])
        interval = permanent_approx(A, eps=1e-6)
        exact = permanent_exact(A)
        assert interval.report.converged
        assert interval.contains(exact)
        assert interval.hi / interval.lo <= math.exp(n) * 1.01


def test_permanent_without_matching():
    with pytest.raises(NotScalable) as info:
        permanent_approx([[0, 1], [0, 1]])
    assert info.value.certificate["type"] == "hall-violator"


@pytest.mark.parametrize("n", [2, 3, 5])
def test_row_and_column_steps_hit_their_marginals(rng, n):
    adapter = MatrixScalingAdapter(rng.uniform(0.1, 1.0, size=(n, n)), np.ones(n), np.ones(n))
    assert adapter.normalize(1e-14) == "row"
    assert np.max(np.abs(adapter.current.sum(axis=1) - 1)) <= 1e-12
    assert adapter.normalize(1e-14) == "col"
    assert np.max(np.abs(adapter.current.sum(axis=0) - 1)) <= 1e-12


@pytest.mark.parametrize("A", [
    [[1, 1], [0, 1]],
    [[1, 0, 2], [0, 3, 0], [1, 0, 1]],
    [[0, 1, 1, 0], [1, 0, 0, 1], [1, 1, 0, 0], [0, 0, 1, 1]],
])
def test_scaling_keeps_the_support(A):
    report = sinkhorn(A, 1e-3)
    assert report.converged
    scaled = DiagonalScaling.from_report(report).apply(A)
    assert np.array_equal(scaled > 0, np.asarray(A) > 0)


@pytest.mark.slow
def test_matching_and_scaling_decisions_agree_on_sparse_matrices(rng):
    for _ in range(200):
        A = (rng.uniform(size=(5, 5)) < 0.35).astype(float)
        scalable, certificate = is_scalable(A)
        assert certificate.verify(A)
        assert is_scalable_by_scaling(A) == scalable
