#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from app import CommandResult, on_command
from scaling.invariant_core import InNullCone, torus_nullcone
from scaling.matrix_scaling import support_nullcone
from scaling.operator_scaling import detpoly_oracle, is_dim_nondecreasing
from scaling.tensor_scaling import DeficiencyCertificate, deficiency_check
from utils.schema import load_nullcone


def _torus(payload, run):
    ws, v = payload["weights"], payload["vector"]
    verdict = torus_nullcone(ws, v)
    checks = {}
    if isinstance(verdict, InNullCone):
        rows = [list(ws.omegas[j]) for j in v.support]
        checks["torus-exponents"] = verdict.certificate.verify(rows)
    else:
        total = [sum(verdict.weights[j] * ws.omegas[j][i] for j in range(ws.m)) for i in range(ws.n)]
        checks["torus-convex-combination"] = all(t == 0 for t in total) and sum(verdict.weights) == 1
    return verdict.to_dict(), checks


def _matrix_support(payload, run):
    verdict = support_nullcone(payload["support"], payload["n"])
    cells = set(payload["support"])
    if verdict.in_null_cone:
        a, b = verdict.row_exponents, verdict.col_exponents
        ok = sum(a) == 0 and sum(b) == 0 and all(a[i] + b[j] > 0 for i, j in cells)
        return verdict.to_dict(), {"support-exponents": ok}
    sigma = verdict.matching.permutation
    ok = sorted(sigma) == list(range(payload["n"])) and all((i, j) in cells for i, j in enumerate(sigma))
    return verdict.to_dict(), {"perfect-matching": ok}


def _tensor_support(payload, run):
    verdict = deficiency_check(payload["support"], payload["shape"])
    if isinstance(verdict, DeficiencyCertificate):
        return {"inNullCone": True, **verdict.to_dict()}, {"deficiency": verdict.verify(payload["support"])}
    return {"inNullCone": False, **verdict.to_dict()}, {}


def _operator(payload, run):
    A = payload["tuple"]
    nondecreasing, witness = is_dim_nondecreasing(A, want_witness=True, constant=run.budget_constant)
    oracle = detpoly_oracle(A, max(1, A.n - 1), seed=run.seed)
    body = {"inNullCone": not nondecreasing, "detpoly": oracle.to_dict()}
    checks = {}
    if witness is not None:
        body["witness"] = witness.to_dict()
        checks["shrunk-subspace"] = witness.verify(A)
    return body, checks


HANDLERS = {
    "torus": _torus,
    "matrix-support": _matrix_support,
    "tensor-support": _tensor_support,
    "operator": _operator,
}


@on_command("nullcone")
def nullcone_command(app, args, run) -> CommandResult:
    """Exact null-cone certificates; membership is a flag in the report, not the exit code"""
    doc = app.store.load_json(args.input)
    flavor, payload = load_nullcone(doc, getattr(args, "flavor", None))
    body, checks = HANDLERS[flavor](payload, run)
    report = {"status": "certified", "flavor": flavor, **body}
    return CommandResult("certified", report, certificates=checks)
