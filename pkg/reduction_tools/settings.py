"""
Toolkit configuration.

Defaults are built in; a YAML file (``--config`` or ``NODAL_BUBBLES_CONFIG``) may override
them, environment variables (optionally from a ``.env`` file) override the file, and CLI
flags override everything.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import yaml
from dotenv import load_dotenv

from .errors import DomainError

logger = logging.getLogger(__name__)

CONFIG_ENV = "NODAL_BUBBLES_CONFIG"
LOG_LEVEL_ENV = "NODAL_BUBBLES_LOG_LEVEL"
WORKERS_ENV = "NODAL_BUBBLES_WORKERS"

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class ToolkitSettings:
    """Numerical defaults shared by every command."""

    dimension_range: Tuple[int, int] = (3, 20)
    guard_offset: float = 1e-6
    audit_mesh: int = 1000
    scan_mesh: int = 10000
    root_tol: float = 1e-12
    grid: Tuple[int, int] = (129, 65)
    eps_start: float = 0.3
    eps_end: float = 0.02
    eps_steps: int = 12
    newton_tol: float = 1e-8
    newton_max_iter: int = 30
    max_backtracks: int = 8
    workers: int = 1
    log_level: str = "INFO"

    def __post_init__(self):
        lo, hi = self.dimension_range
        if lo < 3 or hi < lo:
            raise DomainError(f"dimension_range must satisfy 3 <= lo <= hi, got {self.dimension_range}")
        if self.guard_offset <= 0:
            raise DomainError(f"guard_offset must be positive, got {self.guard_offset}")
        if self.audit_mesh < 10 or self.scan_mesh < 100:
            raise DomainError(f"mesh sizes too small: audit={self.audit_mesh}, scan={self.scan_mesh}")
        if self.grid[0] % 2 == 0:
            raise DomainError(f"grid s-size must be odd so that s = 0 is a node, got {self.grid[0]}")
        if not self.eps_start > self.eps_end > 0:
            raise DomainError(f"epsilon ladder must decrease to a positive value, got {self.eps_start} -> {self.eps_end}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise DomainError(f"unknown log level {self.log_level!r}")


_TUPLE_FIELDS = ("dimension_range", "grid")


def _coerce(values: dict) -> dict:
    coerced = dict(values)
    for name in _TUPLE_FIELDS:
        if name in coerced:
            coerced[name] = tuple(int(v) for v in coerced[name])
    return coerced


def load_settings(config_path: Optional[str] = None) -> ToolkitSettings:
    """
    Build the effective settings.

    Args:
        config_path (Optional[str]): YAML defaults file. Falls back to the
            NODAL_BUBBLES_CONFIG environment variable when not given.

    Returns:
        ToolkitSettings: validated settings
    """
    load_dotenv()
    values = {}

    path = config_path or os.getenv(CONFIG_ENV)
    if path:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise DomainError(f"config file {path} must contain a mapping, got {type(data).__name__}")
        known = {f.name for f in dataclasses.fields(ToolkitSettings)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DomainError(f"unknown keys in config file {path}: {', '.join(unknown)}")
        values.update(data)
        logger.debug(f"Loaded {len(data)} settings from {path}")

    level = os.getenv(LOG_LEVEL_ENV)
    if level:
        values["log_level"] = level.upper()
    workers = os.getenv(WORKERS_ENV)
    if workers:
        values["workers"] = int(workers)

    return ToolkitSettings(**_coerce(values))
