#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from fractions import Fraction
from typing import Any

def parse_rational(value: Any) -> Fraction:
    """Parse a JSON number or "p/q" string into an exact rational"""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"cannot read {value!r} as a rational")

class ProgressTracker:
    """Simple progress tracker for iteration budgets"""

    def __init__(self, total: int):
        self.total = total
        self.current = 0

    def update(self, increment: int = 1):
        """Update progress"""
        self.current += increment

    def get_percentage(self) -> float:
        """Get completion percentage"""
        if self.total == 0:
            return 100.0
        return (self.current / self.total) * 100

    def get_progress_bar(self, length: int = 20) -> str:
        """Get textual progress bar"""
        percentage = min(self.get_percentage(), 100.0)
        filled = int((percentage / 100) * length)
        bar = "#" * filled + "-" * (length - filled)
        return f"[{bar}] {percentage:.1f}%"
