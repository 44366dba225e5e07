#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import orth

from config import Config
from scaling.errors import BadWitness, DimensionTooLarge, IllConditioned, NearSingular, PreconditionViolated
from scaling.invariant_core import ScalingAdapter, integer_direction, run_template
from scaling.numerics import LPCertificate, Infeasible, flatten, float_bit_complexity, inv_sqrt_psd, lp_strict_feasible
from scaling.report import ScalingReport

logger = logging.getLogger(__name__)

MAX_SUPPORT = 4096


@dataclass(frozen=True)
class TensorTuple:
    """m tensors of shape (n_1, ..., n_d), stored as one array of shape (m, n_1, ..., n_d)"""

    entries: np.ndarray
    bits: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.ndim < 2:
            raise PreconditionViolated(f"expected shape (m, n_1, ..., n_d), got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def single(cls, tensor) -> "TensorTuple":
        return cls(np.asarray(tensor, dtype=complex)[None, ...])

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.entries.shape[1:])

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def bit_complexity(self) -> int:
        if self.bits is not None:
            return self.bits
        return float_bit_complexity(self.entries)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def normalized(self) -> "TensorTuple":
        norm = self.norm()
        if norm == 0:
            raise PreconditionViolated("zero tensor tuple cannot be normalized")
        return TensorTuple(self.entries / norm, self.bits)


def as_tensor(A) -> TensorTuple:
    return A if isinstance(A, TensorTuple) else TensorTuple(A)


@dataclass(frozen=True)
class Marginals:
    rho: Tuple[np.ndarray, ...]

    def traces(self) -> List[float]:
        return [float(np.trace(r).real) for r in self.rho]


@dataclass(frozen=True)
class LocalScaling:
    g: Tuple[np.ndarray, ...]

    @classmethod
    def from_report(cls, report: ScalingReport) -> "LocalScaling":
        return cls(tuple(np.asarray(g) for g in report.scalers["g"]))

    def apply(self, A) -> np.ndarray:
        entries = as_tensor(A).entries
        for axis, g in enumerate(self.g):
            entries = apply_local(entries, axis, g)
        return entries


@dataclass(frozen=True)
class DeficiencyCertificate:
    """Weights a[i][j] with zero sum per factor and sum_i a[i][j_i] > 0 on the support"""

    a: Tuple[Tuple[Fraction, ...], ...]

    def verify(self, support: Sequence[Sequence[int]]) -> bool:
        if any(sum(row) != 0 for row in self.a):
            return False
        return all(sum(self.a[i][j] for i, j in enumerate(x)) > 0 for x in support)

    def to_dict(self):
        return {"type": "deficiency", "a": [list(row) for row in self.a]}


@dataclass(frozen=True)
class NotDeficient:
    """Convex weights on the support whose per-factor indicator sums cancel the zero-sum directions"""

    witness: Infeasible

    def to_dict(self):
        return {"type": "not-deficient", "weights": list(self.witness.weights)}


def apply_local(entries: np.ndarray, axis: int, g: np.ndarray) -> np.ndarray:
    """Apply g to tensor axis `axis` (0-based) of every tensor in the tuple"""
    moved = np.tensordot(g, entries, axes=([1], [axis + 1]))
    return np.moveaxis(moved, 0, axis + 1)


def marginals(A) -> Marginals:
    """rho_i = B_i B_i^+ with B_i the flattening along axis i"""
    A = as_tensor(A)
    rho = []
    for axis in range(A.d):
        B = flatten(A.entries, axis)
        rho.append(B @ B.conj().T)
    return Marginals(tuple(rho))


def axis_deviations(A) -> List[float]:
    A = as_tensor(A)
    return [float(np.linalg.norm(r - np.eye(n) / n) ** 2) for r, n in zip(marginals(A).rho, A.shape)]


def ds_tensor(A) -> float:
    """sum_i ||rho_i - I/n_i||_F^2"""
    return float(sum(axis_deviations(A)))


class TensorScalingAdapter(ScalingAdapter):
    """Local normalization of a unit-norm tensor tuple towards marginals I/n_i"""

    flavor = "tensor"
    decisive_exhaustion = False

    def __init__(self, entries: np.ndarray):
        self.current = np.array(entries, dtype=complex)
        self.shape = self.current.shape[1:]
        self.g = [np.eye(n, dtype=complex) for n in self.shape]

    def trivial_check(self):
        for axis, rho in enumerate(marginals(self.current).rho):
            try:
                inv_sqrt_psd(rho)
            except NearSingular as e:
                return {"type": "singular-marginal", "axis": axis, "minEigenvalue": e.min_eigenvalue}
        return None

    def deviation(self) -> float:
        return ds_tensor(self.current)

    def normalize(self, eps: float) -> str:
        deviations = axis_deviations(self.current)
        axis = int(np.argmax(deviations))
        n = self.shape[axis]
        rho = marginals(self.current).rho[axis]
        step = inv_sqrt_psd(n * rho)
        self.current = apply_local(self.current, axis, step)
        self.g[axis] = step @ self.g[axis]
        condition = float(np.linalg.cond(self.g[axis]))
        if condition > Config.COND_LIMIT:
            raise IllConditioned(f"g{axis}", condition, Config.COND_LIMIT)
        return f"axis{axis}"

    def renormalize(self):
        norm = self.norm()
        self.current /= norm
        self.g[0] /= norm

    def norm(self) -> float:
        return float(np.linalg.norm(self.current))

    def scalers(self) -> Dict[str, Any]:
        return {"g": list(self.g)}

    def instance(self):
        return self.current

    def group_norm(self) -> float:
        log_det = sum(np.linalg.slogdet(g)[1] / n for g, n in zip(self.g, self.shape))
        return float(self.norm() ** 2 * math.exp(-2 * log_det))


def tensor_budget(m: int, shape: Sequence[int], b: int, eps: float, constant: float = None) -> int:
    """T = ceil(C d (b + log(m n_1...n_d)) / (min n_i * eps))"""
    constant = Config.BUDGET_CONSTANT if constant is None else constant
    d = len(shape)
    ell = min(shape)
    return max(1, math.ceil(constant * d * (b + math.log(m * float(np.prod(shape)))) / (ell * eps)))


def tensor_scale(A, eps: float, budget: Optional[int] = None, constant: float = None) -> ScalingReport:
    """Alternating local scaling to d-stochastic position; running out of budget is undetermined"""
    A = as_tensor(A)
    b = A.bit_complexity
    limit = budget if budget is not None else tensor_budget(A.m, A.shape, b, eps, constant)
    adapter = TensorScalingAdapter(A.normalized().entries)
    report = run_template(adapter, eps, limit)
    report.bit_complexity = b
    return report


def deficiency_check(support: Sequence[Sequence[int]], shape: Sequence[int]
                     ) -> Union[DeficiencyCertificate, NotDeficient]:
    """Exact LP for weights with per-factor zero sums that are positive on every support tuple"""
    cells = sorted(set(tuple(int(j) for j in x) for x in support))
    if len(cells) > MAX_SUPPORT:
        raise DimensionTooLarge("support", len(cells), MAX_SUPPORT)
    offsets = np.concatenate([[0], np.cumsum(shape)]).astype(int)
    width = int(offsets[-1])
    strict = []
    for x in cells:
        if len(x) != len(shape) or any(not 0 <= j < n for j, n in zip(x, shape)):
            raise PreconditionViolated(f"support tuple {x} does not fit shape {tuple(shape)}")
        row = [0] * width
        for i, j in enumerate(x):
            row[offsets[i] + j] += 1
        strict.append(row)
    equalities = []
    for i in range(len(shape)):
        row = [0] * width
        for j in range(shape[i]):
            row[offsets[i] + j] = 1
        equalities.append(row)
    result = lp_strict_feasible(strict, equalities)
    if isinstance(result, LPCertificate):
        flat = integer_direction(result.variables)
        a = tuple(tuple(Fraction(v) for v in flat[offsets[i]:offsets[i + 1]]) for i in range(len(shape)))
        return DeficiencyCertificate(a)
    return NotDeficient(result)


def support_of(A, tol: float = 0.0) -> List[Tuple[int, ...]]:
    """Index tuples (over all tensors of the tuple) whose entry exceeds tol in modulus"""
    entries = as_tensor(A).entries
    mask = np.any(np.abs(entries) > tol, axis=0)
    return [tuple(int(j) for j in x) for x in zip(*np.nonzero(mask))]


@dataclass
class SliceTerm:
    """u placed on `axis`, tensored with R over the remaining axes in order"""

    axis: int
    u: np.ndarray
    R: np.ndarray


@dataclass
class SliceRankVerdict:
    consistent: bool
    evidence: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self):
        return {"consistent": self.consistent, "evidence": self.evidence, **self.details}


def slice_reconstruct(terms: Sequence[SliceTerm], shape: Sequence[int]) -> np.ndarray:
    total = np.zeros(tuple(shape), dtype=complex)
    for term in terms:
        outer = np.multiply.outer(np.asarray(term.u, dtype=complex), np.asarray(term.R, dtype=complex))
        total += np.moveaxis(outer, 0, term.axis)
    return total


def _unitary_with_span(U: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unitary whose leading columns span the columns of U"""
    filler = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(np.concatenate([U, filler], axis=1))
    return Q[:, :n]


def slicerank_nullcone_probe(A, terms: Sequence[SliceTerm], eps: float = 1e-3, budget: int = 2000,
                             seed: int = 0) -> SliceRankVerdict:
    """Check that a tensor with a short slice decomposition shows null-cone evidence"""
    tensor = np.asarray(as_tensor(A).entries[0] if isinstance(A, TensorTuple) else A, dtype=complex)
    shape = tensor.shape
    n = min(shape)
    scale = max(1.0, float(np.linalg.norm(tensor)))
    if np.linalg.norm(slice_reconstruct(terms, shape) - tensor) > 1e-10 * scale:
        raise BadWitness("slice decomposition does not reconstruct the tensor", {"terms": len(terms)})
    if len(terms) >= n:
        raise PreconditionViolated(f"decomposition has {len(terms)} terms, need fewer than {n}")

    single = TensorTuple.single(tensor).normalized()
    certificate = TensorScalingAdapter(single.entries).trivial_check()
    if certificate is not None:
        return SliceRankVerdict(True, "trivial-check", {"certificate": certificate})

    rng = np.random.default_rng(seed)
    basis_change = single.entries
    for axis, size in enumerate(shape):
        vectors = [np.asarray(t.u, dtype=complex) for t in terms if t.axis == axis]
        if not vectors:
            continue
        U = orth(np.stack(vectors, axis=1))
        basis_change = apply_local(basis_change, axis, _unitary_with_span(U, size, rng).conj().T)
    support = support_of(basis_change, tol=1e-9 * float(np.abs(basis_change).max()))
    verdict = deficiency_check(support, shape)
    if isinstance(verdict, DeficiencyCertificate):
        return SliceRankVerdict(True, "deficient-support", {"certificate": verdict.to_dict()})

    report = tensor_scale(single, eps, budget)
    if report.converged:
        logger.warning("tensor with short slice decomposition reached d-stochastic position")
        return SliceRankVerdict(False, "scaled", {"finalDs": report.final_ds})
    return SliceRankVerdict(True, "scaling-stalled", {"finalDs": report.final_ds, "status": report.status.value})


def ghz(d: int = 3, n: int = 2) -> TensorTuple:
    """(sum_j e_j x ... x e_j)/sqrt(n)"""
    tensor = np.zeros((n,) * d, dtype=complex)
    for j in range(n):
        tensor[(j,) * d] = 1 / math.sqrt(n)
    return TensorTuple.single(tensor)


def w_state(d: int = 3) -> TensorTuple:
    """Uniform superposition of the d basis tensors with exactly one index equal to 1"""
    tensor = np.zeros((2,) * d, dtype=complex)
    for i in range(d):
        index = [0] * d
        index[i] = 1
        tensor[tuple(index)] = 1 / math.sqrt(d)
    return TensorTuple.single(tensor)


def basis_tensor(index: Sequence[int], shape: Sequence[int]) -> TensorTuple:
    tensor = np.zeros(tuple(shape), dtype=complex)
    tensor[tuple(index)] = 1
    return TensorTuple.single(tensor)


def all_supports(shape: Sequence[int]):
    """Every non-empty support set over the index grid, as sorted tuples"""
    cells = list(product(*(range(n) for n in shape)))
    for mask in range(1, 1 << len(cells)):
        yield [cells[k] for k in range(len(cells)) if mask >> k & 1]
