#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from app import CommandResult, on_command
from scaling.bl_apps import (
    bl_feasibility_check, bl_scale, forster_scale, is_geometric, matroid_intersection_membership,
)
from utils.schema import load_bl, load_forster, load_matroid


def _trace(residuals):
    return [{"iter": t, "ds": r, "potential": "", "side": "", "norm": ""} for t, r in enumerate(residuals)]


def _feasibility(doc, run) -> CommandResult:
    datum = load_bl(doc)
    verdict = bl_feasibility_check(datum, seed=run.seed)
    geometric, residuals = is_geometric(datum)
    body = {"status": verdict.outcome.value, **verdict.to_dict(), "geometric": geometric,
            "geometricity": residuals.to_dict(), "bitComplexity": datum.bit_complexity}
    return CommandResult(verdict.outcome.value, body)


def _scale(doc, run) -> CommandResult:
    datum = load_bl(doc)
    result = bl_scale(datum, run.epsilon, run.budget, run.budget_constant)
    body = {"status": result.outcome.value, **result.to_dict()}
    return CommandResult(result.outcome.value, body, _trace(result.residual_trace), result.iterations)


def _forster(doc, run) -> CommandResult:
    vectors = load_forster(doc)
    result = forster_scale(vectors, run.epsilon, run.budget, seed=run.seed)
    body = {"status": result.to_dict()["outcome"], **result.to_dict()}
    return CommandResult(body["status"], body, iterations=result.iterations)


def _matroid(doc, run) -> CommandResult:
    pair, x = load_matroid(doc)
    verdict = matroid_intersection_membership(pair, x, seed=run.seed, budget=run.budget)
    body = {"status": verdict.outcome.value, **verdict.to_dict(), "x": x}
    checks = {}
    certificate = verdict.details.get("certificate")
    if certificate is not None and "dimV" in certificate:
        checks["bl-dimension-violation"] = certificate.get("dimV", 0) > certificate.get("weightedImageDim", 0)
    return CommandResult(verdict.outcome.value, body, certificates=checks)


MODES = {
    "feasibility": _feasibility,
    "scale": _scale,
    "forster": _forster,
    "matroid": _matroid,
}


@on_command("bl")
def bl_command(app, args, run) -> CommandResult:
    """Brascamp-Lieb family: the --flavor picks the mode"""
    doc = app.store.load_json(args.input)
    mode = getattr(args, "flavor", None) or "feasibility"
    return MODES[mode](doc, run)
