#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import sys
from datetime import datetime
from pathlib import Path

from config import Config

def setup_logger(name: str = "scalekit", level: int = None) -> logging.Logger:
    """Setup and configure logger"""

    if level is None:
        level = getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)

    # Create logger
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Clear existing handlers
    logger.handlers.clear()

    # Create formatter
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler on stderr; stdout carries reports
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler (optional - only when a log directory is configured)
    if Config.LOG_TO_FILE():
        try:
            logs_dir = Path(Config.LOG_DIR)
            logs_dir.mkdir(parents=True, exist_ok=True)

            log_file = logs_dir / f"scalekit_{datetime.now().strftime('%Y%m%d')}.log"
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        except Exception as e:
            logger.warning(f"Could not create file logger: {e}")

    # Library modules log under their own names; route them through the same handlers
    for library in ("scaling", "plugins", "storage", "app"):
        library_logger = logging.getLogger(library)
        library_logger.setLevel(level)
        library_logger.handlers = list(logger.handlers)
        library_logger.propagate = False

    return logger

class ScaleLogger:
    """Logger with helpers for scaling runs"""

    def __init__(self, name: str = "scalekit"):
        self.logger = setup_logger(name)
        self.start_time = datetime.now()

    def info(self, message: str):
        self.logger.info(message)

    def debug(self, message: str):
        self.logger.debug(message)

    def log_run_start(self, command: str, flavor: str, source: str):
        """Log the start of a command run"""
        self.start_time = datetime.now()
        self.logger.info(f"Run Started - Command: {command}, Flavor: {flavor}, Input: {source}")

    def log_run_complete(self, command: str, status: str, iterations: int = 0):
        message = f"Run Complete - Command: {command}, Status: {status}, Iterations: {iterations}, Elapsed: {self.get_elapsed()}"
        self.logger.info(message)

    def log_certificate(self, kind: str, verified: bool):
        """Log a certificate and its exact verification result"""
        message = f"Certificate - Type: {kind}, Verified: {verified}"
        if verified:
            self.logger.info(message)
        else:
            self.logger.error(message)

    def log_error_with_context(self, error: Exception, context: str):
        """Log error with additional context"""
        self.logger.error(f"Error in {context}: {str(error)}", exc_info=True)

    def get_elapsed(self) -> str:
        """Get elapsed time since the run started"""
        elapsed = datetime.now() - self.start_time
        minutes, seconds = divmod(elapsed.total_seconds(), 60)

        if minutes:
            return f"{int(minutes)}m {seconds:.1f}s"
        return f"{seconds:.3f}s"
