"""
Run logging for the CLI and the reproduction pipeline.
Console messages go to standard error; optional dated files record every command.
"""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from config.settings import get_settings

LIBRARY_LOGGER = "services"


class RunLogger:
    """
    Logs CLI commands and pipeline steps.

    Log files (only with LOG_TO_FILE):
    - runs_YYYYMMDD.log: Human-readable run log
    - runs_YYYYMMDD.json: One JSON record per command
    """

    def __init__(self):
        self._json_log_file: Optional[Path] = None
        self._current_date = None
        self._to_file = False
        self._log_dir = Path(get_settings().LOG_DIR)
        self._setup_logger()

    def _setup_logger(self):
        """Console logger shared by this class and the service modules."""
        self.logger = logging.getLogger("run_logger")
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False
        self.logger.handlers = []

        self._console = logging.StreamHandler(sys.stderr)
        self._console.setLevel(logging.WARNING)
        self._console.setFormatter(logging.Formatter("[%(asctime)s] %(message)s", datefmt="%H:%M:%S"))
        self.logger.addHandler(self._console)

        library = logging.getLogger(LIBRARY_LOGGER)
        library.setLevel(logging.DEBUG)
        library.propagate = False
        library.handlers = [self._console]

    def configure(self, level: Optional[str] = None, to_file: Optional[bool] = None, log_dir: Optional[str] = None):
        """
        Apply logging settings; unspecified values come from Settings.

        Rebinds the console handler to the current sys.stderr.
        """
        settings = get_settings()
        level = (level or settings.LOG_LEVEL).upper()
        self._console.setLevel(getattr(logging, level, logging.WARNING))
        # plain assignment: setStream flushes the old stream, which may already be closed
        self._console.stream = sys.stderr
        self._to_file = settings.LOG_TO_FILE if to_file is None else to_file
        log_dir = Path(log_dir or settings.LOG_DIR)
        if not self._to_file or log_dir != self._log_dir:
            self._close_file_handlers()
        self._log_dir = log_dir

    def _close_file_handlers(self):
        library = logging.getLogger(LIBRARY_LOGGER)
        for lg in (self.logger, library):
            for handler in lg.handlers[:]:
                if isinstance(handler, logging.FileHandler):
                    lg.removeHandler(handler)
                    handler.close()
        self._current_date = None

    def _get_file_handler(self):
        """Point the file handlers at today's log."""
        today = datetime.now().strftime("%Y%m%d")

        if self._current_date != today:
            self._close_file_handlers()
            library = logging.getLogger(LIBRARY_LOGGER)
            self._log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(self._log_dir / f"runs_{today}.log", encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(
                logging.Formatter("[%(asctime)s] [%(levelname)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
            )
            self.logger.addHandler(file_handler)
            library.addHandler(file_handler)

            self._json_log_file = self._log_dir / f"runs_{today}.json"
            self._current_date = today

    def _write_json_log(self, record: Dict[str, Any]):
        """Append record to JSON log file."""
        if not self._to_file:
            return
        self._get_file_handler()

        try:
            records = []
            if self._json_log_file.exists():
                with open(self._json_log_file, "r", encoding="utf-8") as f:
                    try:
                        records = json.load(f)
                    except json.JSONDecodeError:
                        records = []

            records.append(record)

            with open(self._json_log_file, "w", encoding="utf-8") as f:
                json.dump(records, f, indent=2, ensure_ascii=False, default=str)

        except OSError as e:
            self.logger.error(f"Failed to write JSON log: {e}")

    def log_command(self, command: str, args: Dict[str, Any], rows: int):
        """Log a successful CLI command."""
        if self._to_file:
            self._get_file_handler()
        self.logger.info(f"COMMAND | {command} | rows={rows}")
        self._write_json_log({
            "timestamp": datetime.now().isoformat(),
            "command": command,
            "args": args,
            "rows": rows,
            "status": "ok",
            "error": "",
        })

    def log_failure(self, command: str, args: Dict[str, Any], error: Exception, exit_code: int):
        """Log a failed CLI command (the CLI itself prints the [ERROR] line)."""
        if self._to_file:
            self._get_file_handler()
        self.logger.info(f"FAILED | {command} | exit={exit_code} | {type(error).__name__}: {error}")
        self._write_json_log({
            "timestamp": datetime.now().isoformat(),
            "command": command,
            "args": args,
            "rows": 0,
            "status": f"exit {exit_code}",
            "error": str(error),
        })

    def log_step(self, step: int, total: int, name: str, ok: bool, details: str = ""):
        """Log one step of the reproduction pipeline."""
        if self._to_file:
            self._get_file_handler()
        msg = f"STEP {step}/{total} | {name} | {'ok' if ok else 'FAILED'}"
        if details:
            msg += f" | {details}"
        if ok:
            self.logger.info(msg)
        else:
            self.logger.error(msg)
        self._write_json_log({
            "timestamp": datetime.now().isoformat(),
            "command": "pipeline",
            "args": {"step": step, "name": name},
            "rows": 0,
            "status": "ok" if ok else "failed",
            "error": "" if ok else details,
        })


# Global logger instance
run_logger = RunLogger()
