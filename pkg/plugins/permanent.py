#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from app import CommandResult, on_command
from scaling.numerics import PERMANENT_MAX_N
from scaling.matrix_scaling import permanent_approx
from utils.schema import load_matrix


@on_command("permanent")
def permanent_command(app, args, run) -> CommandResult:
    """Permanent interval; the exact value rides along for n <= PERMANENT_MAX_N"""
    M = load_matrix(app.store.load_json(args.input))
    interval = permanent_approx(M, run.epsilon, run.budget, run.budget_constant,
                                with_exact=M.n <= PERMANENT_MAX_N)
    report = interval.report
    body = {
        "status": report.status.value,
        "n": M.n,
        "interval": interval.to_dict(),
        "iterations": report.iterations,
        "epsilon": report.epsilon,
        "budget": report.budget,
        "bitComplexity": report.bit_complexity,
        "scalers": report.scalers,
    }
    checks = {}
    if interval.exact is not None and report.converged:
        checks["permanent-in-interval"] = interval.contains(interval.exact)
    return CommandResult(report.status.value, body, report.trace_rows(), report.iterations, checks)
