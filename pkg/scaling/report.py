#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np


class Status(str, Enum):
    CONVERGED = "converged"
    NOT_SCALABLE = "not-scalable"
    BUDGET_EXHAUSTED = "budget-exhausted"
    UNDETERMINED = "undetermined"
    ERROR = "error"


def jsonable(value: Any) -> Any:
    """Convert numbers, arrays and certificates into JSON-ready values"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            if np.allclose(value.imag, 0.0):
                return jsonable(value.real)
            return [jsonable(v) for v in value]
        return value.tolist() if value.dtype != object else [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return value


@dataclass
class ScalingReport:
    """Outcome of one scaling run"""

    status: Status
    flavor: str
    epsilon: float
    budget: int
    iterations: int = 0
    scalers: Dict[str, Any] = field(default_factory=dict)
    ds_trace: List[float] = field(default_factory=list)
    potential_trace: List[Optional[float]] = field(default_factory=list)
    side_trace: List[str] = field(default_factory=list)
    norm_trace: List[float] = field(default_factory=list)
    capacity_trace: List[float] = field(default_factory=list)
    certificate: Optional[Dict[str, Any]] = None
    bit_complexity: Optional[int] = None
    annotations: List[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED

    @property
    def final_ds(self) -> float:
        return self.ds_trace[-1] if self.ds_trace else float("nan")

    def trace_rows(self) -> List[Dict[str, Any]]:
        """Rows of the iteration trace, one per recorded iterate"""
        rows = []
        for t, ds in enumerate(self.ds_trace):
            potential = self.potential_trace[t] if t < len(self.potential_trace) else None
            rows.append({
                "iter": t,
                "ds": ds,
                "potential": "" if potential is None else potential,
                "side": self.side_trace[t] if t < len(self.side_trace) else "",
                "norm": self.norm_trace[t] if t < len(self.norm_trace) else "",
            })
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return jsonable({
            "status": self.status,
            "flavor": self.flavor,
            "epsilon": self.epsilon,
            "budget": self.budget,
            "iterations": self.iterations,
            "finalDs": self.final_ds,
            "scalers": self.scalers,
            "dsTrace": self.ds_trace,
            "potentialTrace": self.potential_trace,
            "certificate": self.certificate,
            "bitComplexity": self.bit_complexity,
            "annotations": self.annotations,
        })
