#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os
from dataclasses import dataclass
from typing import Optional

from scaling.errors import ConfigError

class Config:
    # Run defaults
    SEED: int = int(os.getenv("SCALEKIT_SEED", "0"))
    EPSILON: float = float(os.getenv("SCALEKIT_EPSILON", "1e-6"))
    BUDGET_CONSTANT: float = float(os.getenv("SCALEKIT_BUDGET_CONSTANT", "10"))

    # Numerical guards
    NEAR_SINGULAR_TOL: float = float(os.getenv("SCALEKIT_NEAR_SINGULAR_TOL", "1e-12"))  # relative to the top eigenvalue
    COND_LIMIT: float = float(os.getenv("SCALEKIT_COND_LIMIT", "1e12"))

    # Randomized oracles
    DETPOLY_TRIALS: int = int(os.getenv("SCALEKIT_DETPOLY_TRIALS", "50"))
    WITNESS_RESAMPLES: int = int(os.getenv("SCALEKIT_WITNESS_RESAMPLES", "20"))

    # Logging
    LOG_LEVEL: str = os.getenv("SCALEKIT_LOG_LEVEL", "INFO")
    LOG_DIR: str = os.getenv("SCALEKIT_LOG_DIR", "")
    PROGRESS_EVERY: int = int(os.getenv("SCALEKIT_PROGRESS_EVERY", "1000"))

    @classmethod
    def LOG_TO_FILE(cls) -> bool:
        """Check if a log directory is configured"""
        return bool(cls.LOG_DIR)

    @classmethod
    def SEED_FALLBACK(cls) -> int:
        """Seed used when the command line gives none, masked to 64 bits"""
        return cls.SEED & (2 ** 64 - 1)


@dataclass
class RunConfig:
    """Settings of one command run, CLI flags merged over Config"""

    epsilon: float = Config.EPSILON
    budget_constant: float = Config.BUDGET_CONSTANT
    budget: Optional[int] = None
    seed: int = 0
    trace_file: Optional[str] = None
    arithmetic: str = "float64"

    def validate(self) -> "RunConfig":
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not self.budget_constant > 0:
            raise ConfigError(f"budget constant must be positive, got {self.budget_constant}")
        if self.budget is not None and self.budget < 0:
            raise ConfigError(f"budget must be non-negative, got {self.budget}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.arithmetic not in ("float64", "rational-certificates"):
            raise ConfigError(f"unknown arithmetic mode {self.arithmetic}")
        return self

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        """Build from an argparse namespace; absent flags fall back to Config"""
        get = lambda name: getattr(args, name, None)
        return cls(
            epsilon=get("epsilon") if get("epsilon") is not None else Config.EPSILON,
            budget_constant=get("budget_constant") if get("budget_constant") is not None else Config.BUDGET_CONSTANT,
            budget=get("budget"),
            seed=get("seed") if get("seed") is not None else Config.SEED_FALLBACK(),
            trace_file=get("trace"),
        ).validate()
