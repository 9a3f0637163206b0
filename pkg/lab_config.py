"""Configuration for the integral-type Suzuki fixed-point lab.

Two layers, mirroring how the lab is deployed:

- ``LabConfig`` resolves filesystem locations from the environment
  (``LAB_REPORTS_ROOT``, optionally supplied through a ``.env`` file).
- ``LabSettings`` holds the numerical tolerances and run defaults. They are
  persisted as JSON next to the saved reports and edited through
  ``PUT /api/settings`` or overridden per run by CLI flags.
"""
from __future__ import annotations

import json
import logging
import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, confloat, conint, model_validator

APP_ROOT = Path(__file__).resolve().parent
TOOL_NAME = "suzuki-lab"
TOOL_VERSION = "0.1.0"

logger = logging.getLogger(__name__)

# Load environment variables from .env file if present
load_dotenv(APP_ROOT / ".env")


class LabConfig:
    """Filesystem configuration.

    The reports root can be configured via the LAB_REPORTS_ROOT environment
    variable. If it is a relative path, it is resolved relative to APP_ROOT.
    If omitted, it defaults to APP_ROOT / "reports".
    """

    def __init__(self) -> None:
        self.reports_root = self._resolve_reports_root()
        self.settings_path = self.reports_root / ".lab-settings.json"

    @staticmethod
    def _resolve_reports_root() -> Path:
        env_value = os.getenv("LAB_REPORTS_ROOT")

        if env_value:
            candidate = Path(env_value)
            if not candidate.is_absolute():
                candidate = (APP_ROOT / candidate).resolve()
        else:
            candidate = (APP_ROOT / "reports").resolve()

        candidate.mkdir(parents=True, exist_ok=True)
        return candidate


@lru_cache(maxsize=1)
def get_config() -> LabConfig:
    """Return a cached LabConfig instance."""

    return LabConfig()


class LabSettings(BaseModel):
    cclassTolerance: confloat(ge=0) = 1e-9
    equalityBand: confloat(ge=0) = 1e-7
    quadTolerance: confloat(gt=0) = 1e-10
    quadMaxSubdivisions: conint(ge=10, le=10_000) = 200
    compareTolerance: confloat(ge=0) = 1e-9
    logRelativeTolerance: confloat(ge=0) = 1e-12

    gridPointsPerAxis: conint(ge=100, le=2_000) = 101
    gridMax: confloat(gt=0) = 10.0

    stopTolerance: confloat(ge=0) = 1e-12
    maxIterations: conint(ge=1) = 1000

    samplingBoxLow: float = -1.0
    samplingBoxHigh: float = 1.0
    conditionSamples: conint(ge=1) = 1000
    seed: conint(ge=0) = 0

    workers: conint(ge=1, le=64) = 1

    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="after")
    def _check_box(self) -> "LabSettings":
        if self.samplingBoxHigh <= self.samplingBoxLow:
            raise ValueError("samplingBoxHigh must exceed samplingBoxLow")
        return self

    def tolerances(self) -> dict:
        return {
            "cclass": self.cclassTolerance,
            "equality_band": self.equalityBand,
            "quadrature": self.quadTolerance,
            "compare": self.compareTolerance,
            "log_relative": self.logRelativeTolerance,
            "stop": self.stopTolerance,
        }


DEFAULT_SETTINGS = LabSettings()


def load_settings() -> LabSettings:
    path = get_config().settings_path

    if not path.is_file():
        return DEFAULT_SETTINGS

    try:
        data = json.loads(path.read_text(encoding="utf8"))
    except (OSError, ValueError):
        logger.warning("settings file unreadable path=%s; using defaults", path)
        return DEFAULT_SETTINGS

    try:
        return LabSettings.model_validate(data)
    except ValueError:
        logger.warning("settings file invalid path=%s; using defaults", path)
        return DEFAULT_SETTINGS


def save_settings(settings: LabSettings) -> None:
    path = get_config().settings_path
    path.parent.mkdir(parents=True, exist_ok=True)
    data = settings.model_dump(mode="json")
    path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf8")
