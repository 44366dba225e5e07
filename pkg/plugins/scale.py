#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging

import numpy as np

from app import CommandResult, on_command
from scaling.errors import DimensionTooLarge, WitnessDegenerate
from scaling.invariant_core import AnalysisBound, PotentialTracker, run_template
from scaling.matrix_scaling import MatchingCertificate, MatrixScalingAdapter, is_scalable, sinkhorn, sinkhorn_rc
from scaling.operator_scaling import find_shrunk_subspace, gurvits_scale, sample_left_right_tracker
from scaling.report import ScalingReport, Status
from scaling.tensor_scaling import DeficiencyCertificate, deficiency_check, support_of, tensor_scale
from utils.schema import load_marginals, load_matrix, load_tensor, load_tuple

logger = logging.getLogger(__name__)


def _result(report: ScalingReport, certificates=None) -> CommandResult:
    return CommandResult(report.status.value, report.to_dict(), report.trace_rows(), report.iterations,
                         certificates or {})


def _scale_matrix(doc, run) -> CommandResult:
    M = load_matrix(doc)
    scalable, matching = is_scalable(M)
    tracker = PotentialTracker.matching_monomial(matching.permutation) if scalable else None
    report = sinkhorn(M, run.epsilon, run.budget, tracker, run.budget_constant)
    certificates = {}
    if report.status == Status.NOT_SCALABLE:
        certificates["hall-violator"] = MatchingCertificate(
            violator_rows=tuple(report.certificate["rows"]),
            neighborhood=tuple(report.certificate["neighborhood"])).verify(M)
    return _result(report, certificates)


def _scale_matrix_rc(doc, run) -> CommandResult:
    M = load_matrix(doc)
    r, c = load_marginals(doc, M.n)
    report = sinkhorn_rc(M, [float(x) for x in r], [float(x) for x in c], run.epsilon, run.budget,
                         run.budget_constant)
    return _result(report)


def _scale_matrix_template(doc, run) -> CommandResult:
    M = load_matrix(doc)
    b = M.bit_complexity
    limit = run.budget if run.budget is not None else \
        AnalysisBound.for_matrix(M.n, run.epsilon, b).iteration_bound(run.budget_constant)
    report = run_template(MatrixScalingAdapter.template(M), run.epsilon, limit,
                          verdict_on_exhaustion=run.budget is None)
    report.bit_complexity = b
    return _result(report)


def _scale_operator(doc, run) -> CommandResult:
    A = load_tuple(doc)
    tracker = sample_left_right_tracker(A, np.random.default_rng(run.seed))
    try:
        report = gurvits_scale(A, run.epsilon, run.budget, tracker, run.budget_constant)
    except WitnessDegenerate:
        logger.warning("left-right witness vanished at the input; running without a potential")
        report = gurvits_scale(A, run.epsilon, run.budget, None, run.budget_constant)
    certificates = {}
    if report.status == Status.NOT_SCALABLE and report.certificate is None:
        witness = find_shrunk_subspace(A, report)
        if witness is not None:
            report.certificate = witness.to_dict()
            certificates["shrunk-subspace"] = witness.verify(A)
    return _result(report, certificates)


def _scale_tensor(doc, run) -> CommandResult:
    A = load_tensor(doc)
    report = tensor_scale(A, run.epsilon, run.budget, run.budget_constant)
    certificates = {}
    if report.status == Status.UNDETERMINED:
        support = support_of(A)
        try:
            verdict = deficiency_check(support, A.shape)
        except DimensionTooLarge as e:
            logger.info(f"deficiency check skipped: {e.message}")
            verdict = None
        if isinstance(verdict, DeficiencyCertificate):
            report.certificate = verdict.to_dict()
            certificates["deficiency"] = verdict.verify(support)
    return _result(report, certificates)


FLAVORS = {
    "matrix": _scale_matrix,
    "matrix-rc": _scale_matrix_rc,
    "matrix-template": _scale_matrix_template,
    "operator": _scale_operator,
    "tensor": _scale_tensor,
}


@on_command("scale")
def scale_command(app, args, run) -> CommandResult:
    """Scale the input to doubly (or d-) stochastic position"""
    doc = app.store.load_json(args.input)
    flavor = getattr(args, "flavor", None) or "matrix"
    app.log.debug(f"scale: flavor {flavor}, eps {run.epsilon}, budget {run.budget}")
    return FLAVORS[flavor](doc, run)
