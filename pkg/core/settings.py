# Copyright 2026 Hasan Mavlonov
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

"""
core/settings.py: the single place where runtime configuration is read.

Everything tunable from the outside comes from environment variables (a
``.env`` file at the project root is loaded automatically). Library code
imports the constants below; the CLI may override them per run.

Environment variables (see .env.example):
    RPKS_ENGINE        Default driver family: gaussian | nig (default: gaussian)
    RPKS_MC_PATHS      Monte Carlo paths for oracle checks (default: 1000000)
    RPKS_MC_BATCH      Paths per RNG stream / batch (default: 50000)
    RPKS_SEED          Default seed for reproducible runs (default: 20240611)
    RPKS_ABS_TOL       Fourier quadrature absolute tolerance (default: 1e-10)
    RPKS_REL_TOL       Fourier quadrature relative tolerance (default: 1e-8)
    RPKS_PAYMENT_LAG   Option payment lag in years (default: 2/252)
    RPKS_OUT_DIR       Default output directory for CLI artifacts (default: out)
    RPKS_LOG_LEVEL     Logging level name (default: INFO)
    RPKS_PROGRESS      Show tqdm progress bars: 1/0 (default: 1)
"""

from __future__ import annotations

import os
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigError

BASE_DIR = Path(__file__).resolve().parent.parent
CONFIG_DIR = BASE_DIR / "config"

load_dotenv(BASE_DIR / ".env")

ENGINES = ("gaussian", "nig")


def env_str(name: str, default: str) -> str:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    return value.strip()


def env_float(name: str, default: float) -> float:
    raw = env_str(name, "")
    if not raw:
        return float(default)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"{name}={raw!r} is not a number. Fix it in your environment or .env file."
        ) from None


def env_int(name: str, default: int) -> int:
    raw = env_str(name, "")
    if not raw:
        return int(default)
    try:
        return int(float(raw))
    except ValueError:
        raise ConfigError(
            f"{name}={raw!r} is not an integer. Fix it in your environment or .env file."
        ) from None


def env_bool(name: str, default: bool) -> bool:
    raw = env_str(name, "")
    if not raw:
        return default
    return raw.lower() in {"1", "true", "yes", "on"}


def env_engine(name: str = "RPKS_ENGINE", default: str = "gaussian") -> str:
    engine = env_str(name, default).lower()
    if engine not in ENGINES:
        raise ConfigError(f"{name}={engine!r} must be one of {', '.join(ENGINES)}.")
    return engine


ENGINE = env_engine()
MC_PATHS = env_int("RPKS_MC_PATHS", 1_000_000)
MC_BATCH = env_int("RPKS_MC_BATCH", 50_000)
SEED = env_int("RPKS_SEED", 20240611)
ABS_TOL = env_float("RPKS_ABS_TOL", 1e-10)
REL_TOL = env_float("RPKS_REL_TOL", 1e-8)
PAYMENT_LAG = env_float("RPKS_PAYMENT_LAG", 2.0 / 252.0)
OUT_DIR = env_str("RPKS_OUT_DIR", "out")
LOG_LEVEL = env_str("RPKS_LOG_LEVEL", "INFO").upper()
PROGRESS = env_bool("RPKS_PROGRESS", True)
