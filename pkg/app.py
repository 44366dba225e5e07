#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import importlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from config import RunConfig
from scaling.errors import NotScalable, ScaleKitError
from storage.report_store import ReportStore
from utils.logger import ScaleLogger

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "converged": 0,
    "certified": 0,
    "passed-necessary": 0,
    "in-polytope": 0,
    "not-scalable": 2,
    "infeasible": 2,
    "out-of-polytope": 2,
    "budget-exhausted": 3,
    "undetermined": 3,
    "error": 1,
}

_COMMANDS: Dict[str, Callable] = {}


def on_command(name: str):
    """Register a plugin function as the handler of a subcommand"""
    def decorator(func):
        if name in _COMMANDS and _COMMANDS[name] is not func:
            raise ValueError(f"command {name} registered twice")
        _COMMANDS[name] = func
        return func
    return decorator


@dataclass
class CommandResult:
    """What a handler hands back: a status, the report body and optional trace rows"""

    status: str
    report: Dict[str, Any]
    trace_rows: Optional[List[Dict[str, Any]]] = None
    iterations: int = 0
    certificates: Dict[str, bool] = field(default_factory=dict)


class ScaleKitApp:
    def __init__(self, plugins_root: str = "plugins"):
        self.plugins_root = plugins_root
        self.log = ScaleLogger()
        self.store: Optional[ReportStore] = None
        self._load_plugins()

    def _load_plugins(self):
        """Import every module under the plugins directory so their commands register"""
        root = Path(__file__).resolve().parent / self.plugins_root
        for path in sorted(root.glob("*.py")):
            if path.stem.startswith("_"):
                continue
            importlib.import_module(f"{self.plugins_root}.{path.stem}")
        logger.debug(f"Loaded commands: {sorted(_COMMANDS)}")

    @property
    def commands(self) -> List[str]:
        return sorted(_COMMANDS)

    def run(self, args) -> int:
        """Dispatch one command; returns the process exit code"""
        self.store = ReportStore(getattr(args, "output", None), getattr(args, "trace", None))
        command = args.command
        flavor = getattr(args, "flavor", None) or "-"
        self.log.log_run_start(command, flavor, getattr(args, "input", "-"))

        try:
            run = RunConfig.from_args(args)
            handler = _COMMANDS.get(command)
            if handler is None:
                raise ScaleKitError(f"unknown command {command}", {"known": self.commands})
            result = handler(self, args, run)
        except NotScalable as e:
            self.log.info(f"{command}: {e.message}")
            result = CommandResult("not-scalable", {"status": "not-scalable", "reason": e.message,
                                                    "certificate": e.certificate})
        except ScaleKitError as e:
            self.log.log_error_with_context(e, command)
            result = CommandResult("error", {"status": "error", "error": e.to_dict()})
        except Exception as e:
            self.log.log_error_with_context(e, command)
            result = CommandResult("error", {"status": "error",
                                             "error": {"type": type(e).__name__, "message": str(e)}})

        for kind, verified in result.certificates.items():
            self.log.log_certificate(kind, verified)
        return self._finish(command, result)

    def _finish(self, command: str, result: CommandResult) -> int:
        try:
            if result.trace_rows is not None:
                self.store.write_trace(result.trace_rows)
            self.store.write_report(result.report)
        except OSError as e:
            self.log.log_error_with_context(e, f"{command} output")
            return EXIT_CODES["error"]
        self.log.log_run_complete(command, result.status, result.iterations)
        return EXIT_CODES.get(result.status, EXIT_CODES["error"])
