#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy.linalg import null_space, orth

from config import Config
from scaling.errors import IllConditioned, NearSingular, PreconditionViolated, WitnessDegenerate
from scaling.invariant_core import (
    DET_ZERO_THRESHOLD, PotentialTracker, ScalingAdapter, hadamard_ratio, left_right_block_matrix,
    log_potential, run_template,
)
from scaling.numerics import float_bit_complexity, inv_sqrt_psd
from scaling.report import ScalingReport

logger = logging.getLogger(__name__)

RANK_RCOND = 1e-8


@dataclass(frozen=True)
class MatrixTuple:
    """(A_1, ..., A_m), stored as an array of shape (m, n, n)"""

    matrices: np.ndarray
    bits: Optional[int] = field(default=None, compare=False)  # exact input bit length, when known

    def __post_init__(self):
        arr = np.asarray(self.matrices, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise PreconditionViolated(f"expected m square matrices, got shape {arr.shape}")
        object.__setattr__(self, "matrices", arr)

    @classmethod
    def of(cls, *matrices) -> "MatrixTuple":
        return cls(np.array(matrices, dtype=complex))

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def bit_complexity(self) -> int:
        if self.bits is not None:
            return self.bits
        return float_bit_complexity(self.matrices)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrices))


def as_tuple(A) -> MatrixTuple:
    return A if isinstance(A, MatrixTuple) else MatrixTuple(A)


@dataclass(frozen=True)
class OperatorScaling:
    B: np.ndarray
    C: np.ndarray

    @classmethod
    def from_report(cls, report: ScalingReport) -> "OperatorScaling":
        return cls(np.asarray(report.scalers["B"]), np.asarray(report.scalers["C"]))

    def apply(self, A) -> np.ndarray:
        return act(A, self.B, self.C)


@dataclass(frozen=True)
class ShrunkSubspaceWitness:
    """Subspace V with A_i V inside W for all i and dim W < dim V; columns are bases"""

    V: np.ndarray
    W: np.ndarray

    @property
    def dims(self) -> Tuple[int, int]:
        return self.V.shape[1], self.W.shape[1]

    def verify(self, A, tol: float = 1e-9) -> bool:
        A = as_tuple(A).matrices
        dim_v, dim_w = self.dims
        if dim_w >= dim_v:
            return False
        n = A.shape[1]
        projector = np.eye(n) - self.W @ self.W.conj().T if dim_w else np.eye(n)
        scale = max(1.0, float(np.linalg.norm(A)))
        return all(np.linalg.norm(projector @ Ai @ self.V) <= tol * scale for Ai in A)

    def to_dict(self) -> Dict[str, Any]:
        dim_v, dim_w = self.dims
        return {"type": "shrunk-subspace", "dimV": dim_v, "dimW": dim_w, "V": self.V, "W": self.W}


def kraus_map(A, X: np.ndarray) -> np.ndarray:
    """T_A(X) = sum A_i X A_i^+"""
    A = as_tuple(A).matrices
    return np.einsum("kij,jl,kml->im", A, X, A.conj())


def dual_kraus_map(A, X: np.ndarray) -> np.ndarray:
    """T_A^*(X) = sum A_i^+ X A_i"""
    A = as_tuple(A).matrices
    return np.einsum("kji,jl,klm->im", A.conj(), X, A)


def act(A, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """(B A_1 C, ..., B A_m C)"""
    A = as_tuple(A).matrices
    return np.einsum("ij,kjl,lm->kim", B, A, C)


def ds_op(A) -> float:
    """||sum A A^+ - I||_F^2 + ||sum A^+ A - I||_F^2"""
    A = as_tuple(A)
    eye = np.eye(A.n)
    left = kraus_map(A, eye)
    right = dual_kraus_map(A, eye)
    return float(np.linalg.norm(left - eye) ** 2 + np.linalg.norm(right - eye) ** 2)


class OperatorScalingAdapter(ScalingAdapter):
    """Left/right normalization of a matrix tuple towards sum A A^+ = sum A^+ A = target*I"""

    flavor = "operator"

    def __init__(self, matrices: np.ndarray, target: float = 1.0, unit_norm: bool = False,
                 flavor: str = "operator"):
        self.current = np.array(matrices, dtype=complex)
        self.n = self.current.shape[1]
        self.target = target
        self.unit_norm = unit_norm
        self.flavor = flavor
        self.B = np.eye(self.n, dtype=complex)
        self.C = np.eye(self.n, dtype=complex)
        self.eye = np.eye(self.n)

    @classmethod
    def template(cls, A) -> "OperatorScalingAdapter":
        """Unit-norm variant with target I/n"""
        A = as_tuple(A)
        norm = A.norm()
        adapter = cls(A.matrices / norm if norm > 0 else A.matrices, 1.0 / A.n, unit_norm=True,
                      flavor="operator-template")
        if norm > 0:
            adapter.B /= norm
        return adapter

    def left_marginal(self) -> np.ndarray:
        return kraus_map(self.current, self.eye)

    def right_marginal(self) -> np.ndarray:
        return dual_kraus_map(self.current, self.eye)

    def trivial_check(self):
        for side, marginal in (("left", self.left_marginal()), ("right", self.right_marginal())):
            try:
                inv_sqrt_psd(marginal)
            except NearSingular as e:
                kernel = null_space(marginal, rcond=RANK_RCOND) if np.any(marginal) else np.eye(self.n)
                return {"type": f"singular-{side}-marginal", "kernel": kernel, "minEigenvalue": e.min_eigenvalue}
        return None

    def left_deviation(self) -> float:
        return float(np.linalg.norm(self.left_marginal() - self.target * self.eye) ** 2)

    def right_deviation(self) -> float:
        return float(np.linalg.norm(self.right_marginal() - self.target * self.eye) ** 2)

    def deviation(self) -> float:
        return self.left_deviation() + self.right_deviation()

    def _guard(self, which: str, M: np.ndarray):
        condition = float(np.linalg.cond(M))
        if condition > Config.COND_LIMIT:
            raise IllConditioned(which, condition, Config.COND_LIMIT)

    def normalize(self, eps: float) -> str:
        if self.left_deviation() > eps / 2:
            step = math.sqrt(self.target) * inv_sqrt_psd(self.left_marginal())
            self.current = np.einsum("ij,kjl->kil", step, self.current)
            self.B = step @ self.B
            self._guard("B", self.B)
            return "left"
        step = math.sqrt(self.target) * inv_sqrt_psd(self.right_marginal())
        self.current = np.einsum("kij,jl->kil", self.current, step)
        self.C = self.C @ step
        self._guard("C", self.C)
        return "right"

    def renormalize(self):
        if self.unit_norm:
            norm = self.norm()
            self.current /= norm
            self.B /= norm

    def norm(self) -> float:
        return float(np.linalg.norm(self.current))

    def scalers(self) -> Dict[str, Any]:
        return {"B": self.B, "C": self.C}

    def instance(self):
        return self.current

    def group_norm(self) -> float:
        _, log_b = np.linalg.slogdet(self.B)
        _, log_c = np.linalg.slogdet(self.C)
        return float(self.norm() ** 2 * math.exp(-2 * (log_b + log_c) / self.n))


def operator_budget(n: int, b: int, eps: float, constant: float = None) -> int:
    """T = ceil(C n (b + log n) / eps)"""
    constant = Config.BUDGET_CONSTANT if constant is None else constant
    return max(1, math.ceil(constant * n * (b + math.log(n)) / eps))


def sample_left_right_tracker(A, rng: np.random.Generator, k: Optional[int] = None,
                              resamples: Optional[int] = None) -> PotentialTracker:
    """Random integer blocks D_i whose determinant invariant is nonzero on A, else a disabled tracker"""
    A = as_tuple(A)
    k = k or max(1, A.n - 1)
    resamples = Config.WITNESS_RESAMPLES if resamples is None else resamples
    bound = A.n * A.n
    for attempt in range(resamples):
        blocks = [rng.integers(-bound, bound, size=(k, k), endpoint=True) for _ in range(A.m)]
        tracker = PotentialTracker.left_right(blocks)
        try:
            log_potential(tracker, A.matrices)
            return tracker
        except WitnessDegenerate:
            logger.debug(f"left-right witness {attempt + 1}/{resamples} degenerate, re-sampling")
    logger.warning(f"no nondegenerate left-right witness after {resamples} samples; potential unavailable")
    return PotentialTracker.disabled()


def gurvits_scale(A, eps: float, budget: Optional[int] = None, tracker: Optional[PotentialTracker] = None,
                  constant: float = None) -> ScalingReport:
    """Alternate left and right normalization towards a doubly stochastic tuple"""
    A = as_tuple(A)
    b = A.bit_complexity
    limit = budget if budget is not None else operator_budget(A.n, b, eps, constant)
    adapter = OperatorScalingAdapter(A.matrices)
    report = run_template(adapter, eps, limit, tracker, verdict_on_exhaustion=budget is None)
    report.bit_complexity = b
    return report


def _coordinate_witness(A: np.ndarray) -> Optional[ShrunkSubspaceWitness]:
    n = A.shape[1]
    eye = np.eye(n)
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            images = np.concatenate([A[:, :, j].T for j in subset], axis=1)
            W = orth(images, rcond=RANK_RCOND) if np.any(np.abs(images) > 0) else np.zeros((n, 0))
            if W.shape[1] < size:
                return ShrunkSubspaceWitness(eye[:, list(subset)].astype(complex), W)
    return None


def _kernel_witness(A: np.ndarray) -> Optional[ShrunkSubspaceWitness]:
    n = A.shape[1]
    right = dual_kraus_map(A, np.eye(n))
    common_kernel = null_space(right, rcond=RANK_RCOND)
    if common_kernel.shape[1]:
        return ShrunkSubspaceWitness(common_kernel, np.zeros((n, 0), dtype=complex))
    image = orth(np.concatenate(list(A), axis=1), rcond=RANK_RCOND)
    if image.shape[1] < n:
        return ShrunkSubspaceWitness(np.eye(n, dtype=complex), image)
    return None


def _preimage_witness(A: np.ndarray, W: np.ndarray) -> Optional[ShrunkSubspaceWitness]:
    """Largest V with A_i V inside W; a witness when dim V > dim W"""
    n = A.shape[1]
    projector = np.eye(n) - W @ W.conj().T
    V = null_space(np.concatenate([projector @ Ai for Ai in A], axis=0), rcond=RANK_RCOND)
    if V.shape[1] > W.shape[1]:
        return ShrunkSubspaceWitness(V, W)
    return None


def _spectral_witness(A: np.ndarray, report: ScalingReport) -> Optional[ShrunkSubspaceWitness]:
    """Candidate images from the dominant left eigenvectors of the last iterate, pulled back through B"""
    B = np.asarray(report.scalers.get("B")) if report.scalers else None
    C = np.asarray(report.scalers.get("C")) if report.scalers else None
    if B is None or C is None:
        return None
    n = A.shape[1]
    current = act(A, B, C)
    _, vectors = np.linalg.eigh(kraus_map(current, np.eye(n)))
    B_inv = np.linalg.inv(B)
    for k in range(1, n):
        W = orth(B_inv @ vectors[:, n - k:], rcond=RANK_RCOND)
        witness = _preimage_witness(A, W)
        if witness is not None:
            return witness
    return None


def find_shrunk_subspace(A, report: Optional[ScalingReport] = None) -> Optional[ShrunkSubspaceWitness]:
    """Best-effort search: coordinate subspaces, common kernels, then spectral clusters of the last iterate"""
    A = as_tuple(A).matrices
    for search in (_coordinate_witness, _kernel_witness):
        witness = search(A)
        if witness is not None and witness.verify(A):
            return witness
    if report is not None:
        witness = _spectral_witness(A, report)
        if witness is not None and witness.verify(A):
            return witness
    logger.warning("no shrunk subspace found; the decision stands without a witness")
    return None


def is_dim_nondecreasing(A, want_witness: bool = False, constant: float = None
                         ) -> Tuple[bool, Optional[ShrunkSubspaceWitness]]:
    """Decide by scaling to ds <= 1/(n+1) within the iteration bound"""
    A = as_tuple(A)
    report = gurvits_scale(A, 1.0 / (A.n + 1), constant=constant)
    if report.converged:
        return True, None
    return False, find_shrunk_subspace(A, report) if want_witness else None


@dataclass(frozen=True)
class DetPolyNonzero:
    blocks: Tuple[np.ndarray, ...]
    ratio: float
    trial: int

    def to_dict(self):
        return {"type": "nonzero", "blocks": list(self.blocks), "hadamardRatio": self.ratio, "trial": self.trial}


@dataclass(frozen=True)
class LikelyZero:
    trials: int

    def to_dict(self):
        return {"type": "likely-zero", "trials": self.trials}


def detpoly_oracle(A, k: int, trials: Optional[int] = None, seed: int = 0) -> Union[DetPolyNonzero, LikelyZero]:
    """Sample det(sum D_i (x) A_i) at random integer k x k blocks"""
    A = as_tuple(A)
    if not 1 <= k <= max(1, A.n - 1):
        raise PreconditionViolated(f"block size k={k} outside [1, {max(1, A.n - 1)}]")
    trials = Config.DETPOLY_TRIALS if trials is None else trials
    bound = A.n * A.n
    for trial, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        blocks = tuple(rng.integers(-bound, bound, size=(k, k), endpoint=True) for _ in range(A.m))
        _, ratio = hadamard_ratio(left_right_block_matrix(blocks, A.matrices))
        if ratio > DET_ZERO_THRESHOLD:
            logger.debug(f"detpoly nonzero at trial {trial} (ratio {ratio:.3e})")
            return DetPolyNonzero(blocks, ratio, trial)
    return LikelyZero(trials)


def random_invertible(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def planted_shrunk_tuple(n: int, m: int, r: int, rng: np.random.Generator
                         ) -> Tuple[MatrixTuple, ShrunkSubspaceWitness]:
    """Random tuple mapping an r-dimensional subspace into an (r-1)-dimensional one, in disguise"""
    if not 1 <= r <= n:
        raise PreconditionViolated(f"planted dimension r={r} outside [1, {n}]")
    raw = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    raw[:, r - 1:, :r] = 0
    P = random_invertible(n, rng)
    Q = random_invertible(n, rng)
    A = MatrixTuple(act(raw, P, Q))
    eye = np.eye(n)
    V = orth(np.linalg.solve(Q, eye[:, :r]))
    W = orth(P @ eye[:, :r - 1]) if r > 1 else np.zeros((n, 0), dtype=complex)
    return A, ShrunkSubspaceWitness(V, W)
