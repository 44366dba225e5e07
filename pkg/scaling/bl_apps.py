#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space, orth

from config import Config
from scaling.errors import NearSingular, NotGeneralPosition, PreconditionViolated
from scaling.numerics import float_bit_complexity, inv_sqrt_psd, rational_rank, to_fraction

logger = logging.getLogger(__name__)

RANK_TOL = 1e-9
EXACT_GENERAL_POSITION_LIMIT = 12
SAMPLED_SUBSETS = 200


class BLOutcome(str, Enum):
    CONVERGED = "converged"
    INFEASIBLE = "infeasible"
    PASSED_NECESSARY = "passed-necessary"
    BUDGET_EXHAUSTED = "budget-exhausted"
    IN_POLYTOPE = "in-polytope"
    OUT_OF_POLYTOPE = "out-of-polytope"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class BLDatum:
    """Linear maps B_i: R^n -> R^{n_i} with exponents p_i"""

    blocks: Tuple[np.ndarray, ...]
    p: Tuple[Fraction, ...]

    def __post_init__(self):
        blocks = tuple(np.atleast_2d(np.asarray(B, dtype=float)) for B in self.blocks)
        p = tuple(to_fraction(x) for x in self.p)
        if len(blocks) != len(p):
            raise PreconditionViolated(f"{len(blocks)} blocks but {len(p)} exponents")
        if len({B.shape[1] for B in blocks}) > 1:
            raise PreconditionViolated("all blocks must act on the same R^n")
        if any(x < 0 for x in p):
            raise PreconditionViolated("exponents must be non-negative")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(B.shape[0] for B in self.blocks)

    @property
    def bit_complexity(self) -> int:
        return max(float_bit_complexity(np.concatenate([B.ravel() for B in self.blocks])),
                   max((max(abs(q.numerator).bit_length(), q.denominator.bit_length()) for q in self.p), default=1))

    def without_zero_exponents(self) -> "BLDatum":
        kept = [(B, q) for B, q in zip(self.blocks, self.p) if q != 0]
        return BLDatum(tuple(B for B, _ in kept), tuple(q for _, q in kept))

    def transformed(self, A: np.ndarray, C: Sequence[np.ndarray]) -> "BLDatum":
        return BLDatum(tuple(Ci @ B @ A for Ci, B in zip(C, self.blocks)), self.p)


@dataclass(frozen=True)
class GeometricityReport:
    isotropy_residual: float
    projection_residuals: Tuple[float, ...]

    @property
    def worst(self) -> float:
        return max((self.isotropy_residual,) + self.projection_residuals)

    def to_dict(self):
        return {"isotropyResidual": self.isotropy_residual, "projectionResiduals": list(self.projection_residuals)}


def isotropy_matrix(datum: BLDatum) -> np.ndarray:
    """sum p_i B_i^T B_i"""
    return sum(float(q) * B.T @ B for B, q in zip(datum.blocks, datum.p))


def geometricity(datum: BLDatum) -> GeometricityReport:
    isotropy = float(np.linalg.norm(isotropy_matrix(datum) - np.eye(datum.n)))
    projections = tuple(float(np.linalg.norm(B @ B.T - np.eye(B.shape[0]))) for B in datum.blocks)
    return GeometricityReport(isotropy, projections)


def is_geometric(datum: BLDatum, tol: float = 1e-9) -> Tuple[bool, GeometricityReport]:
    report = geometricity(datum)
    return report.worst <= tol, report


@dataclass(frozen=True)
class BLInfeasible:
    reason: str
    subspace: Optional[np.ndarray] = None
    dim: Optional[int] = None
    bound: Optional[Fraction] = None

    outcome = BLOutcome.INFEASIBLE

    def to_dict(self):
        out = {"outcome": self.outcome.value, "reason": self.reason}
        if self.subspace is not None:
            out.update({"subspace": self.subspace, "dimV": self.dim, "weightedImageDim": self.bound})
        return out


@dataclass(frozen=True)
class PassedNecessary:
    subspaces_checked: int

    outcome = BLOutcome.PASSED_NECESSARY

    def to_dict(self):
        return {"outcome": self.outcome.value, "subspacesChecked": self.subspaces_checked}


def _candidate_subspaces(datum: BLDatum, rng: np.random.Generator, random_count: int):
    n = datum.n
    yield np.eye(n)
    stacked = np.concatenate(datum.blocks, axis=0)
    for size in range(1, min(n, 3) + 1):
        for rows in combinations(range(stacked.shape[0]), size):
            V = null_space(stacked[list(rows)], rcond=RANK_TOL)
            if V.shape[1]:
                yield V
    for size in range(1, min(len(datum.blocks), 3) + 1):
        for subset in combinations(range(len(datum.blocks)), size):
            block = np.concatenate([datum.blocks[i] for i in subset], axis=0)
            for V in (orth(block.T, rcond=RANK_TOL), null_space(block, rcond=RANK_TOL)):
                if V.shape[1]:
                    yield V
    for t in range(random_count):
        k = 1 + t % max(1, n - 1)
        yield orth(rng.standard_normal((n, k)))


def bl_feasibility_check(datum: BLDatum, seed: int = 0, random_subspaces: int = 100):
    """Necessary conditions for a finite BL constant: the scaling condition and dimension condition on a finite subspace family"""
    total = sum(q * ni for q, ni in zip(datum.p, datum.dims))
    if total != datum.n:
        logger.info(f"BL datum fails condition 1: sum p_i n_i = {total} != {datum.n}")
        return BLInfeasible(f"condition 1: sum p_i n_i = {total} != n = {datum.n}")
    rng = np.random.default_rng(seed)
    checked = 0
    for V in _candidate_subspaces(datum, rng, random_subspaces):
        checked += 1
        dim = V.shape[1]
        bound = sum(q * int(np.linalg.matrix_rank(B @ V, tol=RANK_TOL)) for B, q in zip(datum.blocks, datum.p))
        if dim > bound:
            logger.info(f"BL datum fails condition 2 on a {dim}-dimensional subspace (bound {bound})")
            return BLInfeasible("condition 2", V, dim, bound)
    return PassedNecessary(checked)


@dataclass
class BLScaleResult:
    outcome: BLOutcome
    A: Optional[np.ndarray] = None
    C: List[np.ndarray] = field(default_factory=list)
    iterations: int = 0
    residual_trace: List[float] = field(default_factory=list)
    reason: str = ""
    budget: int = 0

    @property
    def converged(self) -> bool:
        return self.outcome == BLOutcome.CONVERGED

    def to_dict(self):
        return {"outcome": self.outcome.value, "iterations": self.iterations, "budget": self.budget,
                "A": self.A, "C": self.C, "residualTrace": self.residual_trace, "reason": self.reason}


def bl_budget(datum: BLDatum, eps: float, constant: float = None) -> int:
    constant = Config.BUDGET_CONSTANT if constant is None else constant
    return max(1, math.ceil(constant * datum.n * (datum.bit_complexity + math.log(datum.n + 1)) / eps))


def projection_step(datum: BLDatum, A: np.ndarray, C: List[np.ndarray], i: int) -> np.ndarray:
    """C_i <- (B_i' B_i'^T)^(-1/2) C_i with B_i' = C_i B_i A; afterwards B_i' B_i'^T = I"""
    current = C[i] @ datum.blocks[i] @ A
    C[i] = inv_sqrt_psd(current @ current.T).real @ C[i]
    return C[i]


def isotropy_step(datum: BLDatum, A: np.ndarray, C: Sequence[np.ndarray]) -> np.ndarray:
    """A <- A (sum p_i B_i'^T B_i')^(-1/2); afterwards the transformed datum is isotropic"""
    return A @ inv_sqrt_psd(isotropy_matrix(datum.transformed(A, C))).real


def bl_scale(datum: BLDatum, eps: float, budget: Optional[int] = None, constant: float = None) -> BLScaleResult:
    """Alternate projection steps C_i <- (B_i B_i^T)^(-1/2) C_i and isotropy steps A <- A (sum p_i B_i^T B_i)^(-1/2)"""
    datum = datum.without_zero_exponents()
    if not datum.blocks:
        raise PreconditionViolated("every exponent is zero")
    total = sum(q * ni for q, ni in zip(datum.p, datum.dims))
    if total != datum.n:
        return BLScaleResult(BLOutcome.INFEASIBLE, reason=f"condition 1: sum p_i n_i = {total} != {datum.n}")
    limit = budget if budget is not None else bl_budget(datum, eps, constant)
    A = np.eye(datum.n)
    C = [np.eye(ni) for ni in datum.dims]
    result = BLScaleResult(BLOutcome.BUDGET_EXHAUSTED, A, C, budget=limit)

    def residual() -> float:
        value = geometricity(datum.transformed(A, C)).worst
        result.residual_trace.append(value)
        return value

    if residual() <= eps:
        result.outcome = BLOutcome.CONVERGED
        return result
    try:
        while result.iterations < limit:
            result.iterations += 1
            for i in range(len(datum.blocks)):
                projection_step(datum, A, C, i)
            if residual() <= eps:
                result.outcome = BLOutcome.CONVERGED
                break
            A = isotropy_step(datum, A, C)
            if residual() <= eps:
                result.outcome = BLOutcome.CONVERGED
                break
    except NearSingular as e:
        result.outcome = BLOutcome.INFEASIBLE
        result.reason = f"singular normalization: {e.message}"
    result.A, result.C = A, C
    logger.info(f"bl_scale: {result.outcome.value} after {result.iterations} iterations")
    return result


def check_general_position(vectors: np.ndarray, seed: int = 0):
    """Raise NotGeneralPosition when some n of the vectors are linearly dependent"""
    vectors = np.asarray(vectors, dtype=float)
    m, n = vectors.shape
    if m <= EXACT_GENERAL_POSITION_LIMIT:
        subsets = combinations(range(m), n)
    else:
        rng = np.random.default_rng(seed)
        subsets = (tuple(sorted(rng.choice(m, size=n, replace=False))) for _ in range(SAMPLED_SUBSETS))
    for subset in subsets:
        if rational_rank([[float(x) for x in vectors[i]] for i in subset]) < n:
            raise NotGeneralPosition(subset)


def forster_matrix(vectors: np.ndarray, A: np.ndarray) -> np.ndarray:
    """sum (n/m) (A v_i)(A v_i)^T / ||A v_i||^2"""
    m, n = vectors.shape
    images = vectors @ A.T
    unit = images / np.linalg.norm(images, axis=1, keepdims=True)
    return (n / m) * unit.T @ unit


@dataclass
class ForsterResult:
    A: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def to_dict(self):
        return {"A": self.A, "residual": self.residual, "iterations": self.iterations,
                "outcome": (BLOutcome.CONVERGED if self.converged else BLOutcome.BUDGET_EXHAUSTED).value}


def forster_scale(vectors, eps: float, budget: Optional[int] = None, seed: int = 0) -> ForsterResult:
    """A with sum (n/m)(A v_i)(A v_i)^T/||A v_i||^2 = I, by A <- M^(-1/2) A"""
    vectors = np.asarray(vectors, dtype=float)
    m, n = vectors.shape
    if m < n:
        raise PreconditionViolated(f"need at least n={n} vectors, got {m}")
    check_general_position(vectors, seed)
    limit = budget if budget is not None else max(1, math.ceil(Config.BUDGET_CONSTANT * n / eps))
    A = np.eye(n)
    M = forster_matrix(vectors, A)
    residual = float(np.linalg.norm(M - np.eye(n)))
    iterations = 0
    while residual > eps and iterations < limit:
        A = inv_sqrt_psd(M).real @ A
        M = forster_matrix(vectors, A)
        residual = float(np.linalg.norm(M - np.eye(n)))
        iterations += 1
    logger.info(f"forster_scale: residual {residual:.3e} after {iterations} iterations")
    return ForsterResult(A, residual, iterations, residual <= eps)


@dataclass(frozen=True)
class MatroidPair:
    """Two linear matroids on the same ground set [m], represented by vectors in R^n"""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        if v.shape != w.shape:
            raise PreconditionViolated(f"matroid representations differ in shape: {v.shape} vs {w.shape}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.v.shape[0]

    @property
    def n(self) -> int:
        return self.v.shape[1]


def matroid_block(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """[[0, v^T], [w^T, 0]] acting on R^n x R^n"""
    n = v.size
    return np.block([[np.zeros((1, n)), v.reshape(1, n)], [w.reshape(1, n), np.zeros((1, n))]])


def matroid_datum(pair: MatroidPair, x: Sequence, seed: int = 0) -> BLDatum:
    """BL datum whose polytope, sliced at the given padding, is the common-independent-set polytope.

    n generic elements with weight (n - sum x)/n each extend any common
    independent set to a common base.
    """
    x = [to_fraction(q) for q in x]
    n = pair.n
    rng = np.random.default_rng(seed)
    blocks = [matroid_block(pair.v[i], pair.w[i]) for i in range(pair.m)]
    weights = list(x)
    pad = (n - sum(x)) / n
    if pad > 0:
        for _ in range(n):
            blocks.append(matroid_block(rng.standard_normal(n), rng.standard_normal(n)))
            weights.append(pad)
    return BLDatum(tuple(blocks), tuple(weights))


@dataclass
class MatroidMembership:
    outcome: BLOutcome
    reason: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self):
        return {"outcome": self.outcome.value, "reason": self.reason, **self.details}


def matroid_intersection_membership(pair: MatroidPair, x: Sequence, eps: float = 1e-3,
                                    budget: Optional[int] = None, seed: int = 0) -> MatroidMembership:
    """Membership of x in the common-independent-set polytope of two linear matroids"""
    if len(x) != pair.m:
        raise PreconditionViolated(f"point has {len(x)} coordinates, ground set has {pair.m}")
    x = [to_fraction(q) for q in x]
    if any(q < 0 for q in x):
        return MatroidMembership(BLOutcome.OUT_OF_POLYTOPE, "negative coordinate")
    if sum(x) > pair.n:
        return MatroidMembership(BLOutcome.OUT_OF_POLYTOPE, f"sum x = {sum(x)} exceeds rank bound {pair.n}")
    datum = matroid_datum(pair, x, seed).without_zero_exponents()
    if not datum.blocks:
        return MatroidMembership(BLOutcome.IN_POLYTOPE, "empty datum")
    check = bl_feasibility_check(datum, seed)
    if isinstance(check, BLInfeasible):
        return MatroidMembership(BLOutcome.OUT_OF_POLYTOPE, check.reason, {"certificate": check.to_dict()})
    result = bl_scale(datum, eps, budget if budget is not None else 20000)
    if result.outcome == BLOutcome.CONVERGED:
        return MatroidMembership(BLOutcome.IN_POLYTOPE, "scaled to geometric position",
                                 {"iterations": result.iterations})
    if result.outcome == BLOutcome.INFEASIBLE:
        return MatroidMembership(BLOutcome.OUT_OF_POLYTOPE, result.reason)
    return MatroidMembership(BLOutcome.UNDETERMINED, "scaling budget exhausted",
                             {"iterations": result.iterations, "residual": result.residual_trace[-1]})
