#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from config import Config
from scaling.errors import MarginalMismatch, NotScalable, PreconditionViolated
from scaling.invariant_core import PotentialTracker, ScalingAdapter, integer_direction, run_template
from scaling.numerics import LPCertificate, bit_complexity, lp_strict_feasible, permanent_exact, to_fraction
from scaling.report import ScalingReport, Status

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NonNegMatrix:
    """Square non-negative matrix kept both as exact rationals and as floats"""

    exact: Tuple[Tuple[Fraction, ...], ...]

    @classmethod
    def from_rows(cls, rows) -> "NonNegMatrix":
        exact = tuple(tuple(to_fraction(x) for x in row) for row in rows)
        n = len(exact)
        if any(len(row) != n for row in exact):
            raise PreconditionViolated("matrix must be square")
        if any(x < 0 for row in exact for x in row):
            raise PreconditionViolated("matrix entries must be non-negative")
        return cls(exact)

    @property
    def n(self) -> int:
        return len(self.exact)

    @property
    def values(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.exact], dtype=float).reshape(self.n, self.n)

    @property
    def bit_complexity(self) -> int:
        return bit_complexity(x for row in self.exact for x in row)


def as_matrix(A) -> NonNegMatrix:
    if isinstance(A, NonNegMatrix):
        return A
    return NonNegMatrix.from_rows(np.asarray(A).tolist() if isinstance(A, np.ndarray) else A)


@dataclass(frozen=True)
class DiagonalScaling:
    row_scaler: np.ndarray
    col_scaler: np.ndarray

    @classmethod
    def from_report(cls, report: ScalingReport) -> "DiagonalScaling":
        return cls(np.asarray(report.scalers["row"], float), np.asarray(report.scalers["col"], float))

    def apply(self, A) -> np.ndarray:
        return self.row_scaler[:, None] * as_matrix(A).values * self.col_scaler[None, :]


@dataclass(frozen=True)
class MatchingCertificate:
    """A perfect matching sigma (row i -> column sigma[i]) or a Hall violator"""

    permutation: Optional[Tuple[int, ...]] = None
    violator_rows: Optional[Tuple[int, ...]] = None
    neighborhood: Optional[Tuple[int, ...]] = None

    def verify(self, A) -> bool:
        support = as_matrix(A).values > 0
        if self.permutation is not None:
            return (sorted(self.permutation) == list(range(support.shape[0]))
                    and all(support[i, j] for i, j in enumerate(self.permutation)))
        reached = {j for i in self.violator_rows for j in np.flatnonzero(support[i])}
        return reached <= set(self.neighborhood) and len(self.neighborhood) < len(self.violator_rows)

    def to_dict(self) -> Dict[str, Any]:
        if self.permutation is not None:
            return {"type": "perfect-matching", "permutation": list(self.permutation)}
        return {"type": "hall-violator", "rows": list(self.violator_rows), "neighborhood": list(self.neighborhood)}


def row_sums(A: np.ndarray) -> np.ndarray:
    return np.asarray(A).sum(axis=1)


def col_sums(A: np.ndarray) -> np.ndarray:
    return np.asarray(A).sum(axis=0)


def ds(A) -> float:
    """sum (r_i - 1)^2 + sum (c_j - 1)^2"""
    values = as_matrix(A).values if not isinstance(A, np.ndarray) else np.asarray(A, float)
    return float(np.sum((row_sums(values) - 1) ** 2) + np.sum((col_sums(values) - 1) ** 2))


class MatrixScalingAdapter(ScalingAdapter):
    """Diagonal row/column scaling towards prescribed marginals"""

    flavor = "matrix"

    def __init__(self, values: np.ndarray, row_target: np.ndarray, col_target: np.ndarray,
                 unit_norm: bool = False, flavor: str = "matrix"):
        self.current = np.array(values, dtype=float)
        n = self.current.shape[0]
        self.row_target = np.asarray(row_target, dtype=float)
        self.col_target = np.asarray(col_target, dtype=float)
        self.unit_norm = unit_norm
        self.flavor = flavor
        self.row_scaler = np.ones(n)
        self.col_scaler = np.ones(self.current.shape[1])

    @classmethod
    def template(cls, A) -> "MatrixScalingAdapter":
        """Unit-sum variant with marginals 1/n, as used by the potential analysis"""
        values = as_matrix(A).values
        n = values.shape[0]
        total = values.sum()
        adapter = cls(values / total if total > 0 else values, np.full(n, 1 / n), np.full(n, 1 / n),
                      unit_norm=True, flavor="matrix-template")
        if total > 0:
            adapter.row_scaler /= total
        return adapter

    def trivial_check(self):
        for i, r in enumerate(row_sums(self.current)):
            if r <= 0:
                return {"type": "zero-row", "index": i}
        for j, c in enumerate(col_sums(self.current)):
            if c <= 0:
                return {"type": "zero-column", "index": j}
        return None

    def row_deviation(self) -> float:
        return float(np.sum((row_sums(self.current) - self.row_target) ** 2))

    def col_deviation(self) -> float:
        return float(np.sum((col_sums(self.current) - self.col_target) ** 2))

    def deviation(self) -> float:
        return self.row_deviation() + self.col_deviation()

    def normalize(self, eps: float) -> str:
        if self.row_deviation() > eps / 2:
            factor = self.row_target / row_sums(self.current)
            self.current *= factor[:, None]
            self.row_scaler *= factor
            return "row"
        factor = self.col_target / col_sums(self.current)
        self.current *= factor[None, :]
        self.col_scaler *= factor
        return "col"

    def renormalize(self):
        if self.unit_norm:
            total = self.current.sum()
            self.current /= total
            self.row_scaler /= total

    def norm(self) -> float:
        return float(self.current.sum())

    def scalers(self) -> Dict[str, Any]:
        return {"row": self.row_scaler.tolist(), "col": self.col_scaler.tolist()}

    def instance(self):
        return self.current

    def group_norm(self) -> float:
        log_det = np.mean(np.log(self.row_scaler)) + np.mean(np.log(self.col_scaler))
        return float(self.current.sum() * math.exp(-log_det))


def sinkhorn_budget(n: int, b: int, eps: float, constant: float = None) -> int:
    """T = ceil(C n (b + log n) / eps)"""
    constant = Config.BUDGET_CONSTANT if constant is None else constant
    return max(1, math.ceil(constant * n * (b + math.log(n)) / eps))


def sinkhorn(A, eps: float, budget: Optional[int] = None, tracker: Optional[PotentialTracker] = None,
             constant: float = None) -> ScalingReport:
    """Alternate row and column normalization to doubly stochastic form.

    Without an explicit budget the iteration bound T is used and running out
    of it is a not-scalable verdict.
    """
    M = as_matrix(A)
    b = M.bit_complexity
    limit = budget if budget is not None else sinkhorn_budget(M.n, b, eps, constant)
    adapter = MatrixScalingAdapter(M.values, np.ones(M.n), np.ones(M.n))
    report = run_template(adapter, eps, limit, tracker, verdict_on_exhaustion=budget is None)
    report.bit_complexity = b
    if report.status == Status.NOT_SCALABLE:
        scalable, certificate = is_scalable(M)
        if not scalable:
            report.certificate = {**certificate.to_dict(), "trivialCheck": report.certificate}
        else:
            logger.warning(f"sinkhorn exhausted T={limit} on a matrix with a perfect matching; raise the budget constant")
            report.status = Status.BUDGET_EXHAUSTED
            report.certificate = certificate.to_dict()
    return report


def is_scalable(A) -> Tuple[bool, MatchingCertificate]:
    """Perfect matching on the support (scalable) or a Hall violator (not scalable)"""
    support = as_matrix(A).values > 0
    n = support.shape[0]
    graph = csr_matrix(support.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.all(match >= 0):
        return True, MatchingCertificate(permutation=tuple(int(j) for j in match))

    row_of_col = {int(j): i for i, j in enumerate(match) if j >= 0}
    start = int(np.flatnonzero(match < 0)[0])
    rows, cols = {start}, set()
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(support[i]):
            j = int(j)
            if j in cols:
                continue
            cols.add(j)
            # maximality: every column reached by an alternating path is matched
            k = row_of_col[j]
            if k not in rows:
                rows.add(k)
                queue.append(k)
    certificate = MatchingCertificate(violator_rows=tuple(sorted(rows)), neighborhood=tuple(sorted(cols)))
    logger.debug(f"Hall violator: rows {certificate.violator_rows} see columns {certificate.neighborhood}")
    return False, certificate


def is_scalable_by_scaling(A) -> bool:
    """Scaling-based decision: sinkhorn reaches ds <= 1/(n+1) within its bound"""
    M = as_matrix(A)
    return sinkhorn(M, 1.0 / (M.n + 1)).converged


@dataclass(frozen=True)
class SupportNullcone:
    """Null-cone verdict for a support under the ST(n) x ST(n) torus"""

    in_null_cone: bool
    row_exponents: Optional[Tuple[int, ...]] = None
    col_exponents: Optional[Tuple[int, ...]] = None
    matching: Optional[MatchingCertificate] = None

    def to_dict(self) -> Dict[str, Any]:
        if self.in_null_cone:
            return {"inNullCone": True, "rowExponents": list(self.row_exponents),
                    "colExponents": list(self.col_exponents)}
        return {"inNullCone": False, "matching": self.matching.to_dict()}


def support_nullcone(support: Sequence[Tuple[int, int]], n: int) -> SupportNullcone:
    """Exponents a, b with zero sums and a_i + b_j > 0 on the support, or a perfect matching"""
    cells = sorted(set((int(i), int(j)) for i, j in support))
    strict = []
    for i, j in cells:
        row = [0] * (2 * n)
        row[i] += 1
        row[n + j] += 1
        strict.append(row)
    equalities = [[1] * n + [0] * n, [0] * n + [1] * n]
    result = lp_strict_feasible(strict, equalities)
    if isinstance(result, LPCertificate):
        exponents = integer_direction(result.variables)
        return SupportNullcone(True, exponents[:n], exponents[n:])
    dense = np.zeros((n, n))
    for i, j in cells:
        dense[i, j] = 1
    scalable, certificate = is_scalable(dense)
    if not scalable:
        raise ArithmeticError("LP and matching disagree on a support")
    return SupportNullcone(False, matching=certificate)


def sinkhorn_rc(A, r: Sequence[float], c: Sequence[float], eps: float, budget: Optional[int] = None,
                constant: float = None) -> ScalingReport:
    """Scale to row sums r and column sums c"""
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(r <= 0) or np.any(c <= 0):
        raise PreconditionViolated("target marginals must be positive")
    if abs(r.sum() - c.sum()) > 1e-12:
        raise MarginalMismatch(f"sum(r)={r.sum()} differs from sum(c)={c.sum()}",
                               {"rowTotal": float(r.sum()), "colTotal": float(c.sum())})
    M = as_matrix(A)
    b = M.bit_complexity
    limit = budget if budget is not None else sinkhorn_budget(M.n, b, eps, constant)
    adapter = MatrixScalingAdapter(M.values, r, c, flavor="matrix-rc")
    report = run_template(adapter, eps, limit)
    report.bit_complexity = b
    return report


def kl_divergence(B, A) -> float:
    """sum B log(B/A) over the support of B"""
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    mask = B > 0
    if np.any(A[mask] <= 0):
        return math.inf
    return float(np.sum(B[mask] * np.log(B[mask] / A[mask])))


@dataclass(frozen=True)
class PermanentInterval:
    lo: float
    hi: float
    report: ScalingReport
    exact: Optional[Fraction] = None

    def contains(self, value) -> bool:
        return self.lo <= float(value) <= self.hi

    def to_dict(self) -> Dict[str, Any]:
        out = {"lo": self.lo, "hi": self.hi, "ratio": self.hi / self.lo if self.lo > 0 else math.inf}
        if self.exact is not None:
            out["exact"] = self.exact
        return out


def permanent_approx(A, eps: float = None, budget: Optional[int] = None, constant: float = None,
                     with_exact: bool = False) -> PermanentInterval:
    """Permanent sandwich from a near doubly stochastic scaling BAC.

    perm(A) = perm(BAC) / prod(B_ii C_ii) and n!/n^n <= perm(D) <= 1 for doubly
    stochastic D; the eps-closeness is paid for with the slack n*sqrt(eps) on both ends.
    """
    eps = Config.EPSILON if eps is None else eps
    M = as_matrix(A)
    report = sinkhorn(M, eps, budget, constant=constant)
    if report.status == Status.NOT_SCALABLE:
        raise NotScalable("matrix has no perfect matching; its permanent is 0", report.certificate)
    n = M.n
    exact = permanent_exact(M) if with_exact and n <= 12 else None
    if not report.converged:
        return PermanentInterval(0.0, math.inf, report, exact)
    log_scale = float(np.sum(np.log(report.scalers["row"])) + np.sum(np.log(report.scalers["col"])))
    slack = n * math.sqrt(eps)
    log_vdw = math.lgamma(n + 1) - n * math.log(n)
    hi = math.exp(-log_scale + slack)
    lo = math.exp(-log_scale + log_vdw - slack)
    logger.info(f"permanent interval [{lo:.6g}, {hi:.6g}] after {report.iterations} sinkhorn iterations")
    return PermanentInterval(lo, hi, report, exact)
