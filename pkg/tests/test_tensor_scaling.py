#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from scaling.errors import BadWitness, PreconditionViolated
from scaling.matrix_scaling import is_scalable
from scaling.operator_scaling import MatrixTuple, gurvits_scale, planted_shrunk_tuple
from scaling.report import Status
from scaling.tensor_scaling import (
    DeficiencyCertificate, LocalScaling, NotDeficient, SliceTerm, TensorScalingAdapter, TensorTuple, all_supports,
    apply_local, basis_tensor, deficiency_check, ds_tensor, marginals, slice_reconstruct, slicerank_nullcone_probe,
    support_of, tensor_budget, tensor_scale,
)


def random_tensor(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_ghz_is_already_stochastic(ghz_state):
    assert ds_tensor(ghz_state) == pytest.approx(0.0, abs=1e-15)
    assert marginals(ghz_state).traces() == pytest.approx([1.0, 1.0, 1.0])
    report = tensor_scale(ghz_state, 1e-6)
    assert report.converged
    assert report.iterations == 0


def test_basis_tensor_has_singular_marginal():
    report = tensor_scale(basis_tensor((0, 0, 0), (2, 2, 2)), 1e-3)
    assert report.status == Status.NOT_SCALABLE
    assert report.certificate["type"] == "singular-marginal"


def test_w_state_deficiency(w_tensor):
    support = support_of(w_tensor)
    assert sorted(support) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    verdict = deficiency_check(support, w_tensor.shape)
    assert isinstance(verdict, DeficiencyCertificate)
    assert verdict.verify(support)
    assert verdict.a == ((1, -1), (1, -1), (1, -1))


def test_w_state_scaling_stalls(w_tensor):
    assert ds_tensor(w_tensor) == pytest.approx(1 / 6)
    report = tensor_scale(w_tensor, 1e-6, budget=10000)
    assert report.status == Status.UNDETERMINED
    assert min(report.ds_trace) >= 0.01


def test_ghz_support_is_not_deficient(ghz_state):
    verdict = deficiency_check(support_of(ghz_state), ghz_state.shape)
    assert isinstance(verdict, NotDeficient)
    assert sum(verdict.witness.weights) == 1


def test_deficiency_rejects_out_of_range_tuples():
    with pytest.raises(PreconditionViolated):
        deficiency_check([(0, 2)], (2, 2))


@pytest.mark.slow
def test_two_factor_deficiency_matches_hall():
    shape = (3, 3)
    for support in all_supports(shape):
        A = np.zeros(shape)
        for i, j in support:
            A[i, j] = 1
        scalable, _ = is_scalable(A)
        verdict = deficiency_check(support, shape)
        assert isinstance(verdict, DeficiencyCertificate) == (not scalable)
        if isinstance(verdict, DeficiencyCertificate):
            assert verdict.verify(support)


def test_two_factor_tensor_scaling_agrees_with_operator_scaling(rng):
    eps, budget = 1e-3, 2000
    instances = [MatrixTuple(random_tensor(rng, (3, 3, 3))) for _ in range(40)]
    instances += [planted_shrunk_tuple(3, 3, 2, rng)[0] for _ in range(10)]
    verdicts = []
    for A in instances:
        tensor_report = tensor_scale(TensorTuple(A.matrices), eps, budget)
        operator_report = gurvits_scale(A, eps, budget)
        assert tensor_report.converged == operator_report.converged
        verdicts.append(tensor_report.converged)
    assert verdicts == [True] * 40 + [False] * 10


def test_apply_local_matches_einsum(rng):
    entries = random_tensor(rng, (2, 2, 3, 4))
    g = random_tensor(rng, (3, 3))
    assert np.allclose(apply_local(entries, 1, g), np.einsum("ab,mibk->miak", g, entries))


def test_local_scalers_reproduce_final_tensor(rng):
    A = TensorTuple(random_tensor(rng, (1, 2, 2, 2)))
    report = tensor_scale(A, 1e-8)
    assert report.converged
    scaled = LocalScaling.from_report(report).apply(A.normalized())
    assert ds_tensor(scaled) == pytest.approx(report.final_ds, abs=1e-10)
    assert ds_tensor(scaled) <= 1e-8


def test_tensor_budget_formula():
    expected = math.ceil(10 * 3 * (1 + math.log(8)) / (2 * 0.1))
    assert tensor_budget(1, (2, 2, 2), 1, 0.1, 10) == expected


def test_normalized_keeps_exact_bits():
    A = TensorTuple(np.ones((1, 2, 2)) * 3, bits=9)
    assert A.normalized().bit_complexity == 9
    assert A.normalized().norm() == pytest.approx(1.0)
    with pytest.raises(PreconditionViolated):
        TensorTuple(np.zeros((1, 2, 2))).normalized()


def test_slice_probe_single_term_hits_trivial_check(rng):
    R = random_tensor(rng, (3, 3))
    terms = [SliceTerm(0, np.eye(3)[0], R)]
    tensor = slice_reconstruct(terms, (3, 3, 3))
    verdict = slicerank_nullcone_probe(tensor, terms)
    assert verdict.consistent
    assert verdict.evidence == "trivial-check"


def test_slice_probe_two_terms_give_deficient_support(rng):
    terms = [SliceTerm(0, random_tensor(rng, 3), random_tensor(rng, (3, 3))),
             SliceTerm(1, random_tensor(rng, 3), random_tensor(rng, (3, 3)))]
    tensor = slice_reconstruct(terms, (3, 3, 3))
    verdict = slicerank_nullcone_probe(tensor, terms, seed=3)
    assert verdict.consistent
    assert verdict.evidence in ("trivial-check", "deficient-support")
    assert verdict.to_dict()["consistent"]


def test_slice_probe_rejects_bad_decompositions(rng):
    tensor = random_tensor(rng, (3, 3, 3))
    with pytest.raises(BadWitness):
        slicerank_nullcone_probe(tensor, [SliceTerm(0, np.eye(3)[0], tensor[0])])
    full = [SliceTerm(0, np.eye(3)[j], tensor[j]) for j in range(3)]
    with pytest.raises(PreconditionViolated):
        slicerank_nullcone_probe(tensor, full)


def test_w_state_marginals(w_tensor):
    for rho in marginals(w_tensor).rho:
        assert np.allclose(rho, np.diag([2 / 3, 1 / 3]), atol=1e-12)
    assert marginals(w_tensor).traces() == pytest.approx([1.0, 1.0, 1.0])


@pytest.mark.parametrize("shape, axis", [((1, 2, 2, 2), 0), ((1, 2, 3, 2), 1), ((2, 3, 3), 1), ((1, 2, 2, 4), 2)])
def test_marginals_transform_covariantly(rng, shape, axis):
    A = random_tensor(rng, shape)
    n = shape[axis + 1]
    g = random_tensor(rng, (n, n))
    rho = marginals(A).rho[axis]
    moved = marginals(apply_local(A, axis, g)).rho[axis]
    assert np.allclose(moved, g @ rho @ g.conj().T, atol=1e-10)
    for other in range(len(shape) - 1):
        if other != axis:
            n_other = shape[other + 1]
            unitary, _ = np.linalg.qr(random_tensor(rng, (n_other, n_other)))
            rotated = marginals(apply_local(A, other, unitary)).rho[axis]
            assert np.allclose(rotated, rho, atol=1e-10)


@pytest.mark.parametrize("shape", [(1, 2, 2, 2), (1, 2, 3, 4), (3, 3, 3)])
def test_tensor_steps_normalize_their_axis(rng, shape):
    adapter = TensorScalingAdapter(TensorTuple(random_tensor(rng, shape)).normalized().entries)
    for _ in range(10):
        side = adapter.normalize(1e-12)
        adapter.renormalize()
        axis = int(side[len("axis"):])
        n = adapter.shape[axis]
        rho = marginals(adapter.instance()).rho[axis]
        assert np.linalg.norm(rho - np.eye(n) / n) <= 1e-9
        assert adapter.norm() == pytest.approx(1.0, abs=1e-9)
        assert all(t == pytest.approx(1.0, abs=1e-9) for t in marginals(adapter.instance()).traces())
