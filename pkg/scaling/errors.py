#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from typing import Any, Dict, Optional


class ScaleKitError(Exception):
    """Base class for every error raised by the scaling library"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable error object for reports"""
        return {"type": type(self).__name__, "message": self.message, **self.details}


class NearSingular(ScaleKitError):
    """A PSD matrix had an eigenvalue below the inversion tolerance"""

    def __init__(self, min_eigenvalue: float, tol: float):
        super().__init__(
            f"matrix is near singular: min eigenvalue {min_eigenvalue:.3e} < tol {tol:.3e}",
            {"minEigenvalue": min_eigenvalue, "tol": tol},
        )
        self.min_eigenvalue = min_eigenvalue
        self.tol = tol


class DimensionTooLarge(ScaleKitError):
    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what} size {size} exceeds limit {limit}", {"what": what, "size": size, "limit": limit})


class PreconditionViolated(ScaleKitError):
    pass


class NotScalable(ScaleKitError):
    """The instance admits no scaling; details carry the certificate"""

    def __init__(self, message: str, certificate: Optional[Dict[str, Any]] = None):
        super().__init__(message, {"certificate": certificate} if certificate else {})
        self.certificate = certificate


class WitnessDegenerate(ScaleKitError):
    """The potential polynomial vanishes at the initial instance"""
    pass


class MarginalMismatch(ScaleKitError):
    pass


class IllConditioned(ScaleKitError):
    def __init__(self, which: str, condition: float, limit: float):
        super().__init__(
            f"scaler {which} is ill-conditioned: cond {condition:.3e} > {limit:.1e}",
            {"scaler": which, "condition": condition, "limit": limit},
        )


class BadWitness(ScaleKitError):
    pass


class NotGeneralPosition(ScaleKitError):
    def __init__(self, subset):
        subset = [int(i) for i in subset]
        super().__init__(f"vectors {subset} are linearly dependent", {"subset": subset})
        self.subset = subset


class SchemaError(ScaleKitError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}", {"field": field})
        self.field = field


class ConfigError(ScaleKitError):
    pass
