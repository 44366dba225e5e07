#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import linprog

from scaling.errors import NotGeneralPosition, PreconditionViolated
from scaling.bl_apps import (
    BLDatum, BLInfeasible, BLOutcome, MatroidPair, PassedNecessary, bl_feasibility_check, bl_scale,
    check_general_position, forster_matrix, forster_scale, geometricity, is_geometric, isotropy_step,
    matroid_datum, matroid_intersection_membership, projection_step,
)

DIAGONAL = 0.7071067811865476


@pytest.fixture
def coordinate_datum():
    return BLDatum(([[1.0, 0.0]], [[0.0, 1.0]]), (1, 1))


@pytest.fixture
def three_lines_datum():
    """Three lines in R^2 with exponent 2/3 each; feasible but not geometric"""
    third = Fraction(2, 3)
    return BLDatum(([[2.0, 0.0]], [[1.0, 1.0]], [[0.0, 3.0]]), (third, third, third))


def test_coordinate_datum_is_geometric(coordinate_datum):
    geometric, report = is_geometric(coordinate_datum)
    assert geometric
    assert report.worst == pytest.approx(0.0)
    assert isinstance(bl_feasibility_check(coordinate_datum), PassedNecessary)
    result = bl_scale(coordinate_datum, 1e-9)
    assert result.converged
    assert result.iterations == 0


def test_exponent_mismatch_is_infeasible():
    datum = BLDatum(([[1.0, 0.0]], [[0.0, 1.0]]), (1, 2))
    verdict = bl_feasibility_check(datum)
    assert isinstance(verdict, BLInfeasible)
    assert verdict.reason.startswith("condition 1")
    assert bl_scale(datum, 1e-6).outcome == BLOutcome.INFEASIBLE


def test_repeated_block_violates_dimension_condition():
    datum = BLDatum(([[1.0, 0.0]], [[1.0, 0.0]]), (1, 1))
    verdict = bl_feasibility_check(datum)
    assert isinstance(verdict, BLInfeasible)
    assert verdict.reason == "condition 2"
    assert verdict.dim > verdict.bound
    assert verdict.to_dict()["dimV"] == verdict.dim


def test_bl_scale_reaches_geometric_position(three_lines_datum):
    assert not is_geometric(three_lines_datum)[0]
    assert isinstance(bl_feasibility_check(three_lines_datum), PassedNecessary)
    result = bl_scale(three_lines_datum, 1e-6)
    assert result.converged
    assert geometricity(three_lines_datum.transformed(result.A, result.C)).worst <= 1e-6
    assert len(result.residual_trace) >= result.iterations + 1


def test_bl_scale_respects_explicit_budget(three_lines_datum):
    result = bl_scale(three_lines_datum, 1e-14, budget=1)
    assert result.outcome in (BLOutcome.BUDGET_EXHAUSTED, BLOutcome.CONVERGED)
    assert result.iterations <= 1


def test_bl_datum_validation():
    with pytest.raises(PreconditionViolated):
        BLDatum(([[1.0, 0.0]],), (1, 1))
    with pytest.raises(PreconditionViolated):
        BLDatum(([[1.0, 0.0]], [[1.0]]), (1, 1))
    with pytest.raises(PreconditionViolated):
        BLDatum(([[1.0, 0.0]],), (-1,))


def test_forster_on_balanced_vectors():
    vectors = np.array([[1, 0], [DIAGONAL, DIAGONAL], [0, 1], [-DIAGONAL, DIAGONAL]])
    result = forster_scale(vectors, 1e-9)
    assert result.converged
    assert result.residual <= 1e-9
    assert np.allclose(result.A, np.eye(2))


def test_forster_on_random_vectors(rng):
    for _ in range(20):
        vectors = rng.standard_normal((5, 2))
        result = forster_scale(vectors, 1e-6)
        assert result.converged
        assert np.linalg.norm(forster_matrix(vectors, result.A) - np.eye(2)) <= 1e-6


def test_forster_requires_general_position():
    with pytest.raises(NotGeneralPosition) as info:
        forster_scale(np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]), 1e-6)
    assert info.value.subset == [0, 1]
    with pytest.raises(PreconditionViolated):
        forster_scale(np.array([[1.0, 0.0]]), 1e-6)
    check_general_position(np.eye(3))


def test_matroid_datum_pads_to_full_rank():
    pair = MatroidPair(np.eye(2), np.eye(2))
    datum = matroid_datum(pair, ["1/2", "0"])
    assert datum.n == 4
    assert len(datum.blocks) == 4
    assert datum.p[2:] == (Fraction(3, 4), Fraction(3, 4))
    assert sum(q * ni for q, ni in zip(datum.p, datum.dims)) == datum.n


def test_matroid_membership_of_interior_point():
    pair = MatroidPair(np.eye(2), np.eye(2))
    verdict = matroid_intersection_membership(pair, ["1/2", "1/2"], eps=1e-2)
    assert verdict.outcome == BLOutcome.IN_POLYTOPE


def test_matroid_membership_rank_violation():
    """Both elements share one vector in the first matroid, so x_1 + x_2 <= 1"""
    pair = MatroidPair([[1.0, 0.0], [1.0, 0.0]], np.eye(2))
    verdict = matroid_intersection_membership(pair, [1, 1])
    assert verdict.outcome == BLOutcome.OUT_OF_POLYTOPE
    assert verdict.reason == "condition 2"
    certificate = verdict.details["certificate"]
    assert certificate["dimV"] > certificate["weightedImageDim"]


def test_matroid_membership_trivial_rejections():
    pair = MatroidPair(np.eye(2), np.eye(2))
    assert matroid_intersection_membership(pair, [-1, 0]).outcome == BLOutcome.OUT_OF_POLYTOPE
    assert matroid_intersection_membership(pair, [2, 1]).outcome == BLOutcome.OUT_OF_POLYTOPE
    with pytest.raises(PreconditionViolated):
        matroid_intersection_membership(pair, [1])


@pytest.mark.parametrize("x, outcome", [
    ([1, 1], BLOutcome.IN_POLYTOPE),
    (["3/2", 0], BLOutcome.OUT_OF_POLYTOPE),
    ([0, 0], BLOutcome.IN_POLYTOPE),
])
def test_matroid_membership_of_identity_pair(x, outcome):
    pair = MatroidPair(np.eye(2), np.eye(2))
    assert matroid_intersection_membership(pair, x, eps=1e-2).outcome == outcome


def common_independent_sets(pair):
    for size in range(pair.m + 1):
        for subset in combinations(range(pair.m), size):
            rows = list(subset)
            if not rows or (np.linalg.matrix_rank(pair.v[rows]) == size
                            and np.linalg.matrix_rank(pair.w[rows]) == size):
                yield subset


def in_hull(vertices, x):
    """Convex-hull membership by an LP feasibility problem"""
    V = np.asarray(vertices, dtype=float).T
    A_eq = np.vstack([V, np.ones((1, V.shape[1]))])
    b_eq = np.append(np.asarray(x, dtype=float), 1.0)
    result = linprog(np.zeros(V.shape[1]), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return result.status == 0


def random_binary_vectors(rng, m, n):
    rows = []
    while len(rows) < m:
        row = rng.integers(0, 2, size=n)
        if row.any():
            rows.append(row)
    return np.array(rows, dtype=float)


@pytest.mark.slow
def test_matroid_membership_agrees_with_hull(rng):
    for _ in range(5):
        m, n = int(rng.integers(2, 5)), int(rng.integers(2, 4))
        pair = MatroidPair(random_binary_vectors(rng, m, n), random_binary_vectors(rng, m, n))
        vertices = [[1 if i in subset else 0 for i in range(m)] for subset in common_independent_sets(pair)]
        points = [list(vertex) for vertex in vertices]
        for _ in range(50):
            weights = rng.dirichlet(np.ones(len(vertices)))
            scale = rng.uniform(0.5, 1.6)
            x = [Fraction(float(q)).limit_denominator(24) for q in scale * weights @ np.array(vertices, float)]
            # keep points that stay on the same side of the boundary under a 10% push
            inside = in_hull(vertices, x)
            if in_hull(vertices, [float(q) * 1.1 for q in x]) == inside == in_hull(vertices, [float(q) * 0.9 for q in x]):
                points.append(x)
        for x in points:
            verdict = matroid_intersection_membership(pair, x, eps=1e-2)
            expected = BLOutcome.IN_POLYTOPE if in_hull(vertices, x) else BLOutcome.OUT_OF_POLYTOPE
            assert verdict.outcome == expected, (pair, x, verdict.reason)


@pytest.mark.parametrize("datum", [
    BLDatum(([[2.0, 0.0]], [[1.0, 1.0]], [[0.0, 3.0]]), ("2/3", "2/3", "2/3")),
    BLDatum(([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]], [[1.0, 0.0, 3.0]]), (1, 1)),
    BLDatum((np.eye(3)[:2], [[1.0, 1.0, 1.0]], [[0.0, 1.0, -1.0]]), ("1/2", 1, 1)),
])
def test_bl_steps_reach_their_targets(datum):
    A = np.eye(datum.n)
    C = [np.eye(ni) for ni in datum.dims]
    for _ in range(5):
        for i in range(len(datum.blocks)):
            projection_step(datum, A, C, i)
            B = C[i] @ datum.blocks[i] @ A
            assert np.linalg.norm(B @ B.T - np.eye(B.shape[0])) <= 1e-10
        A = isotropy_step(datum, A, C)
        assert geometricity(datum.transformed(A, C)).isotropy_residual <= 1e-10
