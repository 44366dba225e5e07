#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from scaling.errors import IllConditioned, NearSingular, PreconditionViolated, WitnessDegenerate
from scaling.numerics import LPCertificate, kron, lp_strict_feasible
from scaling.report import ScalingReport, Status
from utils.helpers import ProgressTracker

logger = logging.getLogger(__name__)

MATCHING_MONOMIAL = "matching-monomial"
LEFT_RIGHT_DETERMINANT = "left-right-determinant"
DISABLED = "disabled"

# Hadamard-normalised |det| below this counts as a vanishing invariant
DET_ZERO_THRESHOLD = 1e-10


@dataclass(frozen=True)
class WeightSystem:
    """Characters of an n-dimensional torus acting on C^m"""

    n: int
    omegas: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(tuple(int(x) for x in w) for w in self.omegas))
        for w in self.omegas:
            if len(w) != self.n:
                raise ValueError(f"weight {w} does not have length {self.n}")

    @property
    def m(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class TorusVector:
    coefficients: Tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(j for j, c in enumerate(self.coefficients) if abs(c) > 0)

    @classmethod
    def full(cls, m: int) -> "TorusVector":
        return cls(tuple(1.0 for _ in range(m)))


@dataclass(frozen=True)
class OneParamSubgroup:
    """Integer exponents of t -> diag(t^a) per torus factor"""

    exponents: Tuple[Tuple[int, ...], ...]
    zero_sum: bool = False

    def __post_init__(self):
        if self.zero_sum:
            for a in self.exponents:
                if sum(a) != 0:
                    raise PreconditionViolated(f"exponents {a} do not sum to zero")

    def to_dict(self):
        return {"exponents": [list(a) for a in self.exponents], "zeroSum": self.zero_sum}


@dataclass(frozen=True)
class InNullCone:
    subgroup: OneParamSubgroup
    certificate: LPCertificate

    def to_dict(self):
        return {"inNullCone": True, **self.subgroup.to_dict(), "margin": self.certificate.margin}


@dataclass(frozen=True)
class NotInNullCone:
    """Convex weights lambda_j (zero off the support) with sum lambda_j omega_j = 0"""

    weights: Tuple[Fraction, ...]

    def to_dict(self):
        return {"inNullCone": False, "weights": list(self.weights)}


@dataclass(frozen=True)
class AnalysisBound:
    """Constants of the unified potential analysis for one flavor"""

    U: float
    ell: Optional[int]
    b: int
    eps_prime: float
    eps_double_prime: float
    n_prime: int
    k: int

    def __post_init__(self):
        if self.U < 1:
            raise PreconditionViolated(f"coefficient bound U={self.U} < 1")
        if self.ell is not None and self.ell < 1:
            raise PreconditionViolated(f"degree ell={self.ell} < 1")

    @classmethod
    def for_matrix(cls, n: int, eps: float, b: int) -> "AnalysisBound":
        return cls(U=1.0, ell=n, b=b, eps_prime=n * n * eps / 2, eps_double_prime=n * eps, n_prime=n, k=1)

    @classmethod
    def for_operator(cls, n: int, eps: float, b: int) -> "AnalysisBound":
        block = max(1, n - 1)
        return cls(U=math.sqrt(n), ell=n * block, b=b, eps_prime=n * n * eps / 2,
                   eps_double_prime=n * eps, n_prime=n, k=2)

    @classmethod
    def for_tensor(cls, shape: Sequence[int], eps: float, b: int) -> "AnalysisBound":
        d = len(shape)
        n_min = min(shape)
        return cls(U=float(np.prod(shape)), ell=None, b=b, eps_prime=n_min * n_min * eps / d,
                   eps_double_prime=n_min * eps / d, n_prime=n_min, k=2)

    def iteration_bound(self, constant: float = None) -> int:
        """ceil(C * (log U + b) / eps'')"""
        constant = Config.BUDGET_CONSTANT if constant is None else constant
        return max(1, math.ceil(constant * (math.log(self.U) + self.b) / self.eps_double_prime))


@dataclass
class PotentialTracker:
    """Potential Phi = |P(A)|^(1/ell) of a fixed invariant P, tracked per iteration in log form"""

    kind: str = DISABLED
    witness: Any = None
    log_values: List[Optional[float]] = field(default_factory=list)

    @classmethod
    def disabled(cls) -> "PotentialTracker":
        return cls(DISABLED)

    @classmethod
    def matching_monomial(cls, sigma: Sequence[int]) -> "PotentialTracker":
        return cls(MATCHING_MONOMIAL, tuple(int(s) for s in sigma))

    @classmethod
    def left_right(cls, blocks: Sequence[np.ndarray]) -> "PotentialTracker":
        return cls(LEFT_RIGHT_DETERMINANT, [np.atleast_2d(np.asarray(D)) for D in blocks])

    @property
    def enabled(self) -> bool:
        return self.kind != DISABLED

    @property
    def values(self) -> List[Optional[float]]:
        return [None if v is None else math.exp(v) for v in self.log_values]

    def record(self, instance) -> Optional[float]:
        """Append Phi of the instance; a vanishing value is recorded as None"""
        if not self.enabled:
            return None
        try:
            value = log_potential(self, instance)
        except WitnessDegenerate:
            value = None
        self.log_values.append(value)
        return value


def left_right_block_matrix(blocks: Sequence[np.ndarray], matrices: np.ndarray) -> np.ndarray:
    """sum_i D_i (x) A_i"""
    return sum(kron(D, A) for D, A in zip(blocks, matrices))


def hadamard_ratio(M: np.ndarray) -> Tuple[float, float]:
    """(log|det M|, |det M| / (||M||_F / sqrt N)^N); the ratio lies in [0, 1]"""
    N = M.shape[0]
    sign, logdet = np.linalg.slogdet(M)
    fro = np.linalg.norm(M)
    if sign == 0 or fro == 0:
        return -math.inf, 0.0
    log_ratio = logdet - N * (math.log(fro) - 0.5 * math.log(N))
    return float(logdet), float(math.exp(min(log_ratio, 0.0)))


def log_potential(tracker: PotentialTracker, instance) -> float:
    """log Phi of the instance"""
    if tracker.kind == MATCHING_MONOMIAL:
        A = np.asarray(instance, dtype=float)
        picked = A[np.arange(A.shape[0]), list(tracker.witness)]
        if np.any(picked <= 0):
            raise WitnessDegenerate("matching monomial vanishes on the instance")
        return float(np.mean(np.log(picked)))
    if tracker.kind == LEFT_RIGHT_DETERMINANT:
        matrices = np.asarray(instance)
        M = left_right_block_matrix(tracker.witness, matrices)
        logdet, ratio = hadamard_ratio(M)
        if ratio <= DET_ZERO_THRESHOLD:
            raise WitnessDegenerate(f"det(sum D_i x A_i) vanishes (Hadamard ratio {ratio:.3e})")
        return logdet / M.shape[0]
    raise PreconditionViolated("potential tracking is disabled")


def potential_eval(tracker: PotentialTracker, instance) -> float:
    return math.exp(log_potential(tracker, instance))


class ScalingAdapter(ABC):
    """One scaling problem as seen by the template engine.

    Subclasses own the current scaled instance and the accumulated scalers.
    """

    flavor: str = "abstract"
    # False when running out of iterations says nothing about scalability
    decisive_exhaustion: bool = True

    @abstractmethod
    def trivial_check(self) -> Optional[Dict[str, Any]]:
        """Certificate dict when the instance fails the trivial check, else None"""

    @abstractmethod
    def deviation(self) -> float:
        """Distance of the current iterate to the target marginals"""

    @abstractmethod
    def normalize(self, eps: float) -> str:
        """Apply one normalization step; returns the side or axis label it acted on"""

    def renormalize(self):
        pass

    @abstractmethod
    def norm(self) -> float:
        ...

    @abstractmethod
    def scalers(self) -> Dict[str, Any]:
        ...

    @abstractmethod
    def instance(self):
        ...

    @abstractmethod
    def group_norm(self) -> float:
        """||g.v||^2 with every scaler factor rescaled to determinant one"""


def run_template(adapter: ScalingAdapter, eps: float, budget: int,
                 tracker: Optional[PotentialTracker] = None,
                 verdict_on_exhaustion: bool = False) -> ScalingReport:
    """Alternating normalization until the deviation is at most eps or the budget runs out.

    With verdict_on_exhaustion the budget is the theorem bound, so running out
    is reported as not-scalable for flavors whose bound is decisive.
    """
    if eps <= 0:
        raise PreconditionViolated(f"epsilon must be positive, got {eps}")
    tracker = tracker or PotentialTracker.disabled()
    report = ScalingReport(Status.CONVERGED, adapter.flavor, eps, int(budget))

    try:
        certificate = adapter.trivial_check()
    except NearSingular as e:
        certificate = {"type": "singular-marginal", **e.to_dict()}
    if certificate is not None:
        logger.info(f"{adapter.flavor}: trivial check failed ({certificate.get('type')})")
        report.status = Status.NOT_SCALABLE
        report.certificate = certificate
        report.ds_trace.append(adapter.deviation())
        report.capacity_trace.append(0.0)
        return report

    if tracker.enabled:
        # a degenerate initial witness propagates to the caller for re-sampling
        tracker.log_values.append(log_potential(tracker, adapter.instance()))

    def record(side: str):
        report.ds_trace.append(adapter.deviation())
        report.side_trace.append(side)
        report.norm_trace.append(adapter.norm())
        report.capacity_trace.append(adapter.group_norm())

    record("")
    progress = ProgressTracker(int(budget))
    stopped_early = False
    while report.ds_trace[-1] > eps and report.iterations < budget:
        try:
            side = adapter.normalize(eps)
            adapter.renormalize()
        except (NearSingular, IllConditioned) as e:
            logger.warning(f"{adapter.flavor}: step {report.iterations + 1} aborted: {e.message}")
            report.annotations.append(e.message)
            stopped_early = True
            break
        report.iterations += 1
        record(side)
        if tracker.enabled:
            tracker.record(adapter.instance())
        progress.update()
        if report.iterations % Config.PROGRESS_EVERY == 0:
            logger.debug(f"{adapter.flavor}: iter {report.iterations}/{budget} ds={report.ds_trace[-1]:.3e} "
                         f"{progress.get_progress_bar()}")

    report.potential_trace = tracker.values if tracker.enabled else []
    report.scalers = adapter.scalers()
    if report.ds_trace[-1] <= eps:
        report.status = Status.CONVERGED
    elif stopped_early:
        report.status = Status.BUDGET_EXHAUSTED if adapter.decisive_exhaustion else Status.UNDETERMINED
    elif not adapter.decisive_exhaustion:
        report.status = Status.UNDETERMINED
    elif verdict_on_exhaustion:
        report.status = Status.NOT_SCALABLE
        report.annotations.append(f"iteration bound {budget} exhausted")
    else:
        report.status = Status.BUDGET_EXHAUSTED
    logger.info(f"{adapter.flavor}: {report.status.value} after {report.iterations} iterations, "
                f"ds={report.final_ds:.3e}")
    return report


def capacity_estimate(adapter: ScalingAdapter, budget: int, eps: float = 1e-12) -> float:
    """Smallest ||g.v||^2 seen along the template trajectory (an upper bound on the capacity)"""
    report = run_template(adapter, eps, budget)
    if report.status == Status.NOT_SCALABLE:
        return 0.0
    return float(min(report.capacity_trace))


def robust_amgm_bound(x: Sequence[float], delta: float) -> float:
    """prod x_i for positive x with sum n and delta = sum (x_i - 1)^2 <= 1"""
    x = np.asarray(x, dtype=float)
    n = x.size
    if np.any(x <= 0):
        raise PreconditionViolated("entries must be positive")
    if abs(x.sum() - n) > 1e-10:
        raise PreconditionViolated(f"sum {x.sum()} differs from n={n}")
    if delta > 1:
        raise PreconditionViolated(f"delta={delta} exceeds 1")
    if abs(float(np.sum((x - 1) ** 2)) - delta) > 1e-9:
        raise PreconditionViolated("delta does not match sum (x_i - 1)^2")
    return float(np.prod(x))


def integer_direction(values: Sequence[Fraction]) -> Tuple[int, ...]:
    """Smallest positive multiple of a rational vector that is integral"""
    scale = lcm(*(q.denominator for q in values)) if values else 1
    ints = [int(q * scale) for q in values]
    g = 0
    for v in ints:
        g = gcd(g, v)
    return tuple(v // g for v in ints) if g > 1 else tuple(ints)


def torus_nullcone(ws: WeightSystem, v: TorusVector) -> Union[InNullCone, NotInNullCone]:
    """Hilbert-Mumford test for a diagonal torus action, decided by an exact LP"""
    support = v.support
    if len(v.coefficients) != ws.m:
        raise ValueError(f"vector has {len(v.coefficients)} coefficients, weight system has {ws.m}")
    rows = [ws.omegas[j] for j in support]
    if not rows:
        zero = tuple(0 for _ in range(ws.n))
        return InNullCone(OneParamSubgroup((zero,)), LPCertificate(tuple(Fraction(0) for _ in zero), Fraction(1)))
    result = lp_strict_feasible(rows)
    if isinstance(result, LPCertificate):
        a = integer_direction(result.variables)
        logger.debug(f"torus null cone: subgroup exponents {a}")
        return InNullCone(OneParamSubgroup((a,)), result)
    weights = [Fraction(0)] * ws.m
    for j, w in zip(support, result.weights):
        weights[j] = w
    return NotInNullCone(tuple(weights))


def torus_moment_map(ws: WeightSystem, v: TorusVector) -> np.ndarray:
    """2 sum_j |v_j|^2 omega_j"""
    mu = np.zeros(ws.n)
    for c, w in zip(v.coefficients, ws.omegas):
        mu += 2 * abs(c) ** 2 * np.asarray(w, dtype=float)
    return mu


def torus_action_norm(ws: WeightSystem, v: TorusVector, x: Sequence[float]) -> float:
    """||exp(diag x).v||^2 = sum_j |v_j|^2 exp(2 <x, omega_j>)"""
    x = np.asarray(x, dtype=float)
    return float(sum(abs(c) ** 2 * math.exp(2 * float(np.dot(x, w))) for c, w in zip(v.coefficients, ws.omegas)))


def matrix_moment_map(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Moment map of ST(n) x ST(n) on a matrix with squared moduli M.

    Returns (2(r - avg), 2(c - avg)) with r, c the row and column sums of M;
    the derivative of the norm along zero-sum (d, e) is their inner product with (d, e).
    """
    M = np.asarray(M, dtype=float)
    r, c = M.sum(axis=1), M.sum(axis=0)
    avg = M.sum() / M.shape[0]
    return 2 * (r - avg), 2 * (c - avg)


def matrix_action_norm(M: np.ndarray, d: Sequence[float], e: Sequence[float]) -> float:
    """sum_ij M_ij exp(2(d_i + e_j))"""
    M = np.asarray(M, dtype=float)
    return float(np.sum(M * np.exp(2 * (np.add.outer(np.asarray(d, float), np.asarray(e, float))))))


def left_right_moment_map(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(2(sum A A^+ - ||A||^2/n I), 2(sum A^+ A - ||A||^2/n I)) for B.A.C acting on a tuple"""
    A = np.asarray(A, dtype=complex)
    n = A.shape[1]
    left = np.einsum("kij,klj->il", A, A.conj())
    right = np.einsum("kji,kjl->il", A.conj(), A)
    scale = np.linalg.norm(A) ** 2 / n
    eye = np.eye(n)
    return 2 * (left - scale * eye), 2 * (right - scale * eye)


def left_right_action_norm(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> float:
    """sum_i ||B A_i C||_F^2"""
    A = np.asarray(A, dtype=complex)
    return float(np.linalg.norm(np.einsum("ij,kjl,lm->kim", B, A, C)) ** 2)


def is_moment_map_zero(A: np.ndarray, tol: float = 1e-9) -> bool:
    """True for a non-negative matrix proportional to a doubly stochastic one or a tuple with vanishing left-right moment map"""
    A = np.asarray(A)
    if A.ndim == 2:
        p, q = matrix_moment_map(A)
        return bool(np.linalg.norm(p) <= tol and np.linalg.norm(q) <= tol)
    P1, P2 = left_right_moment_map(A)
    return bool(np.linalg.norm(P1) <= tol and np.linalg.norm(P2) <= tol)
