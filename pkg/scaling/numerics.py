#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from scaling.errors import DimensionTooLarge, NearSingular

logger = logging.getLogger(__name__)

Rational = Fraction
RationalLike = Union[Fraction, int, float, str]

PERMANENT_MAX_N = 12
LP_MAX_VARIABLES = 64
LP_MAX_CONSTRAINTS = 4096


def to_fraction(value: RationalLike) -> Fraction:
    """Exact rational from an int, float, Fraction or "p/q" / decimal string"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value}")
        return Fraction(float(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def bit_complexity(values: Iterable[RationalLike]) -> int:
    """Largest bit length of any numerator or denominator"""
    bits = 1
    for value in values:
        q = to_fraction(value)
        bits = max(bits, abs(q.numerator).bit_length(), q.denominator.bit_length())
    return bits


def float_bit_complexity(array) -> int:
    """Bit complexity of a float or complex array after exact rationalization"""
    arr = np.asarray(array)
    parts = [arr.real.ravel(), arr.imag.ravel()] if np.iscomplexobj(arr) else [arr.ravel()]
    return bit_complexity(float(x) for part in parts for x in part)


def is_hermitian_psd(M: np.ndarray, tol: float = 1e-10) -> bool:
    """Check Hermitian symmetry and eigenvalues >= -tol"""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if np.max(np.abs(M - M.conj().T), initial=0.0) > tol:
        return False
    return bool(np.linalg.eigvalsh((M + M.conj().T) / 2).min(initial=0.0) >= -tol)


def inv_sqrt_psd(M: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """M^{-1/2} of a Hermitian PSD matrix through its eigendecomposition.

    Raises NearSingular when an eigenvalue falls below tol; the default tol is
    Config.NEAR_SINGULAR_TOL times the largest eigenvalue.
    """
    M = np.asarray(M)
    H = (M + M.conj().T) / 2
    w, V = np.linalg.eigh(H)
    top = float(w[-1]) if w.size else 0.0
    if tol is None:
        tol = Config.NEAR_SINGULAR_TOL * max(top, 0.0)
    if top <= 0.0 or float(w[0]) < tol:
        raise NearSingular(float(w[0]) if w.size else 0.0, tol)
    return (V * (1.0 / np.sqrt(w))) @ V.conj().T


def condition_number(M: np.ndarray) -> float:
    return float(np.linalg.cond(M))


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(A, B)


def flatten(A, axis: int) -> np.ndarray:
    """Flattening of a tensor tuple along one tensor axis (0-based).

    A has shape (m, n_1, ..., n_d). Row r holds every entry whose index on
    `axis` is r, ordered lexicographically by (tuple index, remaining axes).
    """
    entries = np.asarray(getattr(A, "entries", A))
    d = entries.ndim - 1
    if not 0 <= axis < d:
        raise ValueError(f"axis {axis} out of range for a tensor of order {d}")
    moved = np.moveaxis(entries, axis + 1, 0)
    return moved.reshape(entries.shape[axis + 1], -1)


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[int]], int]:
    """Scale each row to integers; returns the rows and the product of the scales"""
    scaled, denominator = [], 1
    for row in rows:
        scale = lcm(*(q.denominator for q in row)) if row else 1
        scaled.append([int(q * scale) for q in row])
        denominator *= scale
    return scaled, denominator


def permanent_exact(A) -> Fraction:
    """Exact permanent by Ryser's formula over a Gray-code subset walk"""
    rows = [[to_fraction(x) for x in row] for row in getattr(A, "exact", A)]
    n = len(rows)
    if n > PERMANENT_MAX_N:
        raise DimensionTooLarge("permanent", n, PERMANENT_MAX_N)
    if n == 0:
        return Fraction(1)
    N, denominator = _integer_rows(rows)
    sums = [0] * n
    total = 0
    members = 0
    previous_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ previous_gray
        j = changed.bit_length() - 1
        if gray & changed:
            members += 1
            for i in range(n):
                sums[i] += N[i][j]
        else:
            members -= 1
            for i in range(n):
                sums[i] -= N[i][j]
        previous_gray = gray
        product = 1
        for s in sums:
            product *= s
            if product == 0:
                break
        total += -product if members % 2 else product
    if n % 2:
        total = -total
    return Fraction(total, denominator)


def rational_rank(rows: Sequence[Sequence[RationalLike]]) -> int:
    """Exact rank by fraction-valued Gaussian elimination"""
    M = [[to_fraction(x) for x in row] for row in rows]
    if not M:
        return 0
    rank, cols = 0, len(M[0])
    for c in range(cols):
        pivot = next((r for r in range(rank, len(M)) if M[r][c] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for r in range(rank + 1, len(M)):
            if M[r][c] != 0:
                f = M[r][c] / M[rank][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
        if rank == len(M):
            break
    return rank


@dataclass(frozen=True)
class LPCertificate:
    """Exact solution of a strict system: L x >= margin > 0 and E x = 0"""

    variables: Tuple[Fraction, ...]
    margin: Fraction

    def verify(self, strict_rows, equality_rows=()) -> bool:
        x = self.variables
        return (
            self.margin > 0
            and all(sum(to_fraction(a) * xi for a, xi in zip(row, x)) >= self.margin for row in strict_rows)
            and all(sum(to_fraction(a) * xi for a, xi in zip(row, x)) == 0 for row in equality_rows)
        )

    def to_dict(self):
        return {"variables": list(self.variables), "margin": self.margin}


@dataclass(frozen=True)
class Infeasible:
    """Convex combination of the strict rows lying in the span of the equality rows.

    sum_j weights[j] * L_j == sum_k multipliers[k] * E_k, weights >= 0, sum(weights) == 1.
    """

    weights: Tuple[Fraction, ...]
    multipliers: Tuple[Fraction, ...]

    def verify(self, strict_rows, equality_rows=()) -> bool:
        if any(w < 0 for w in self.weights) or sum(self.weights) != 1:
            return False
        width = len(strict_rows[0]) if strict_rows else 0
        for i in range(width):
            lhs = sum(w * to_fraction(row[i]) for w, row in zip(self.weights, strict_rows))
            rhs = sum(mu * to_fraction(row[i]) for mu, row in zip(self.multipliers, equality_rows))
            if lhs != rhs:
                return False
        return True

    def to_dict(self):
        return {"weights": list(self.weights), "multipliers": list(self.multipliers)}


class _Tableau:
    """Dense fraction tableau for max c.z s.t. A z <= b, z >= 0, b >= 0"""

    def __init__(self, A: List[List[Fraction]], b: List[Fraction], c: List[Fraction]):
        rows, cols = len(A), len(c)
        self.n_original = cols
        self.rows = [list(A[r]) + [Fraction(int(r == s)) for s in range(rows)] for r in range(rows)]
        self.rhs = list(b)
        self.reduced = list(c) + [Fraction(0)] * rows
        self.value = Fraction(0)
        self.basis = [cols + r for r in range(rows)]
        self.pivots = 0

    def _entering(self) -> Optional[int]:
        for j, r in enumerate(self.reduced):
            if r > 0:
                return j
        return None

    def _leaving(self, e: int) -> Optional[int]:
        best, best_ratio = None, None
        for r, row in enumerate(self.rows):
            if row[e] > 0:
                ratio = self.rhs[r] / row[e]
                if (best_ratio is None or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[r] < self.basis[best])):
                    best, best_ratio = r, ratio
        return best

    def _pivot(self, p: int, e: int):
        pivot_row = self.rows[p]
        inv = 1 / pivot_row[e]
        pivot_row = [a * inv for a in pivot_row]
        self.rows[p] = pivot_row
        self.rhs[p] *= inv
        support = [j for j, a in enumerate(pivot_row) if a != 0]
        for r, row in enumerate(self.rows):
            if r != p and row[e] != 0:
                f = row[e]
                for j in support:
                    row[j] -= f * pivot_row[j]
                self.rhs[r] -= f * self.rhs[p]
        f = self.reduced[e]
        for j in support:
            self.reduced[j] -= f * pivot_row[j]
        self.value += f * self.rhs[p]
        self.basis[p] = e
        self.pivots += 1

    def solve(self):
        """Primal simplex with Bland's rule (terminates on degenerate problems)"""
        while True:
            e = self._entering()
            if e is None:
                return
            p = self._leaving(e)
            if p is None:
                raise ArithmeticError("unbounded linear program")
            self._pivot(p, e)

    def primal(self) -> List[Fraction]:
        z = [Fraction(0)] * self.n_original
        for r, var in enumerate(self.basis):
            if var < self.n_original:
                z[var] = self.rhs[r]
        return z

    def dual(self) -> List[Fraction]:
        return [-self.reduced[self.n_original + r] for r in range(len(self.rows))]


def lp_strict_feasible(strict_rows: Sequence[Sequence[RationalLike]],
                       equality_rows: Sequence[Sequence[RationalLike]] = ()
                       ) -> Union[LPCertificate, Infeasible]:
    """Decide whether L x > 0, E x = 0 has a solution, exactly.

    Solves max t s.t. L x >= t, E x = 0, -1 <= x <= 1 in rational arithmetic.
    A positive optimum gives an LPCertificate; a zero optimum yields the
    optimal dual, which is an exact Infeasible witness.
    """
    L = [[to_fraction(a) for a in row] for row in strict_rows]
    E = [[to_fraction(a) for a in row] for row in equality_rows]
    widths = {len(row) for row in L + E}
    if len(widths) > 1:
        raise ValueError("constraint rows have different lengths")
    nv = widths.pop() if widths else 0
    if nv > LP_MAX_VARIABLES:
        raise DimensionTooLarge("LP variables", nv, LP_MAX_VARIABLES)
    if len(L) + len(E) > LP_MAX_CONSTRAINTS:
        raise DimensionTooLarge("LP constraints", len(L) + len(E), LP_MAX_CONSTRAINTS)
    if not L:
        return LPCertificate(tuple(Fraction(0) for _ in range(nv)), Fraction(1))

    zero, one = Fraction(0), Fraction(1)
    # columns: x+ (nv), x- (nv), t
    A, b = [], []
    for row in L:
        A.append([-a for a in row] + list(row) + [one])
        b.append(zero)
    for row in E:
        A.append(list(row) + [-a for a in row] + [zero])
        b.append(zero)
        A.append([-a for a in row] + list(row) + [zero])
        b.append(zero)
    for i in range(2 * nv):
        A.append([one if j == i else zero for j in range(2 * nv + 1)])
        b.append(one)
    c = [zero] * (2 * nv) + [one]

    tableau = _Tableau(A, b, c)
    tableau.solve()
    logger.debug(f"strict LP solved: {len(L)} strict, {len(E)} equality rows, {tableau.pivots} pivots, t*={tableau.value}")

    if tableau.value > 0:
        z = tableau.primal()
        x = tuple(z[i] - z[nv + i] for i in range(nv))
        return LPCertificate(x, tableau.value)

    y = tableau.dual()
    strict_duals = y[:len(L)]
    total = sum(strict_duals)
    weights = tuple(w / total for w in strict_duals)
    multipliers = tuple(
        (y[len(L) + 2 * k] - y[len(L) + 2 * k + 1]) / total for k in range(len(E))
    )
    return Infeasible(weights, multipliers)
