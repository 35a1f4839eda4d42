"""Утилиты пакета."""

import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import structlog

from .config import settings

logger = structlog.get_logger(__name__)

LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


def setup_logging(level: Optional[str] = None) -> None:
    """Настройка структурированного логирования.

    Логи пишутся в stderr: stdout зарезервирован под JSON-результаты.
    """
    level_name = (level or settings.LOG_LEVEL).upper()
    numeric_level = LOG_LEVELS.get(level_name, logging.INFO)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 содержимого файла (hex)."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def text_digest(text: str) -> str:
    """SHA-256 строки (для именованных пресетов вместо файлов)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def read_text(path: Union[str, Path]) -> str:
    """Чтение входного файла в UTF-8."""
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _to_builtin(value: Any) -> Any:
    """Приведение numpy-скаляров и массивов к типам json."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dump_json(payload: Any) -> str:
    """JSON с полной точностью; NaN/Inf запрещены."""
    return json.dumps(payload, default=_to_builtin, allow_nan=False, indent=2)


def max_abs(matrix: np.ndarray) -> float:
    """Максимальный модуль элемента (0 для пустого массива)."""
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix)))
