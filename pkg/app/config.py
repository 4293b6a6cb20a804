"""Load .env and settings.yaml, expose all configuration."""

from __future__ import annotations

import logging
import os
from pathlib import Path

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

log = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _load_env() -> None:
    env_path = PROJECT_ROOT / ".env"
    load_dotenv(env_path)


def _load_yaml(settings_path: Path | None = None) -> dict:
    settings_path = settings_path or PROJECT_ROOT / "settings.yaml"
    if settings_path.exists():
        try:
            with open(settings_path) as f:
                return yaml.safe_load(f) or {}
        except yaml.YAMLError:
            log.warning("Failed to parse %s, using defaults", settings_path.name)
            return {}
    return {}


def _default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))


class Settings(BaseModel):
    # numerics
    zero_flow_rel_tol: float = Field(default=1e-10, gt=0, lt=1e-3)
    bind_tol_rel: float = Field(default=1e-7, gt=0, lt=1e-2)
    root_xtol_rel: float = Field(default=1e-12, gt=0, lt=1e-6)
    bracket_offset_rel: float = Field(default=1e-13, gt=0, lt=1e-6)
    partial_vapor_rel_tol: float = Field(default=1e-9, gt=0, lt=1e-3)

    # feasibility
    profile_checks: bool = True
    strict_missing_rho: bool = False

    # optimizer
    grid_resolution: int = Field(default=64, ge=2, le=1024)
    refine_stencil: int = Field(default=2, ge=1, le=4)
    refine_min_step: float = Field(default=1e-6, gt=0)
    feas_tol_eq: float = Field(default=1e-6, gt=0)
    feas_tol_ineq: float = Field(default=1e-7, gt=0)
    bound_offset: float = Field(default=1e-4, ge=0)

    # oracle
    stages_per_section: int = Field(default=50, ge=1, le=1000)
    purity_tol: float = Field(default=5e-4, gt=0, lt=0.1)
    bisection_width: float = Field(default=1e-3, gt=0)
    max_iterations: int = Field(default=500, ge=1)
    residual_tol: float = Field(default=1e-10, gt=0)

    threads: int = Field(default_factory=_default_threads, ge=1, le=256)
    output_format: str = "text"
    log_level: str = "WARNING"

    @field_validator("output_format")
    @classmethod
    def check_format(cls, v: str) -> str:
        v = v.strip().lower()
        if v not in ("text", "json", "csv"):
            raise ValueError(f"unknown output format {v!r}")
        return v

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, v: str) -> str:
        v = v.strip().upper()
        if v not in _LOG_LEVELS:
            raise ValueError(f"unknown log level {v!r}")
        return v

    def bind_tol(self, alphas: tuple[float, ...]) -> float:
        """Absolute binding band for a component system."""
        return self.bind_tol_rel * (alphas[-1] - alphas[0])


def load_settings(settings_path: Path | None = None, **overrides: object) -> Settings:
    _load_env()
    raw = _load_yaml(settings_path)
    threads = os.getenv("MFMP_THREADS", "").strip()
    if threads:
        try:
            raw["threads"] = int(threads)
        except ValueError:
            log.warning("Ignoring non-integer MFMP_THREADS=%r", threads)
    level = os.getenv("MFMP_LOG_LEVEL", "").strip()
    if level:
        raw["log_level"] = level
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**raw)
