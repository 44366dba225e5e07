#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import csv
import json
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from scaling.errors import SchemaError
from scaling.report import jsonable

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iter", "ds", "potential", "side", "norm"]


class ReportStore:
    """Reads command inputs and writes reports and traces atomically"""

    def __init__(self, output: Optional[str] = None, trace: Optional[str] = None, stream=None):
        self.output = Path(output) if output else None
        self.trace = Path(trace) if trace else None
        self.stream = stream
        self.written: List[Path] = []

    # Inputs
    def load_json(self, path: str) -> Dict[str, Any]:
        """Load one JSON input document; "-" reads stdin"""
        try:
            if path == "-":
                return json.load(sys.stdin)
            with open(path, "r", encoding="utf-8") as handle:
                return json.load(handle)
        except FileNotFoundError:
            raise SchemaError("input", f"file not found: {path}")
        except json.JSONDecodeError as e:
            raise SchemaError("input", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")

    # Outputs
    @staticmethod
    def dumps(report: Dict[str, Any]) -> str:
        """Canonical serialization: sorted keys, floats in shortest round-trip form"""
        return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"

    def write_report(self, report: Dict[str, Any]):
        """Write the report to --output, or to stdout when no file was given"""
        text = self.dumps(report)
        if self.output is None:
            stream = self.stream or sys.stdout
            stream.write(text)
            stream.flush()
            return
        self._atomic_write(self.output, text)
        logger.info(f"Report written to {self.output}")

    def write_trace(self, rows: Iterable[Dict[str, Any]]) -> Optional[Path]:
        """Write the iteration trace CSV when --trace was given"""
        if self.trace is None:
            return None
        rows = list(rows)
        with self._temp_file(self.trace) as (handle, temp_path):
            writer = csv.DictWriter(handle, fieldnames=TRACE_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: self._cell(row.get(k, "")) for k in TRACE_COLUMNS})
        logger.info(f"Trace with {len(rows)} rows written to {self.trace}")
        return self.trace

    @staticmethod
    def _cell(value: Any) -> Any:
        if isinstance(value, float):
            return repr(value)
        return value

    def _atomic_write(self, path: Path, text: str):
        with self._temp_file(path) as (handle, _):
            handle.write(text)

    @contextmanager
    def _temp_file(self, path: Path):
        """Temp file next to the target, renamed over it on success"""
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, temp_path = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                yield handle, temp_path
            os.replace(temp_path, path)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise
        self.written.append(path)
