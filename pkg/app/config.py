# =============================================================================
# Tabletop Rearrangement Planner - Configuration Loader
# v1.0.0
# =============================================================================
# Centralizes all configuration by reading environment variables from a .env
# file at the project root. Every other module imports its defaults from
# here; library functions take them as keyword defaults so the CLI and the
# tests can still override any value per call.
# =============================================================================

from __future__ import annotations

import os
import sys
import logging
from pathlib import Path

from dotenv import load_dotenv

# ---------------------------------------------------------------------------
# Resolve project paths
# ---------------------------------------------------------------------------
# BASE_DIR points to the project root (one level above this file's parent).
# Result directories are anchored here so the CLI works regardless of the
# current working directory at launch time.
# ---------------------------------------------------------------------------
BASE_DIR = Path(__file__).resolve().parent.parent

# ---------------------------------------------------------------------------
# Load .env file
# ---------------------------------------------------------------------------
_env_path = BASE_DIR / ".env"
if _env_path.exists():
    load_dotenv(_env_path)
else:
    # Print to stderr because logging is not configured yet at import time.
    print(
        f"WARNING: .env file not found at {_env_path}. "
        "Falling back to shell environment variables.",
        file=sys.stderr,
    )

# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------
# REARRANGE_SEED (int): fallback seed when --seed is not given on the
#     command line. Every planner, sampler and generator draws from a
#     numpy Generator derived from this value.
# ---------------------------------------------------------------------------
REARRANGE_SEED: int = int(os.getenv("REARRANGE_SEED", "0"))

# ---------------------------------------------------------------------------
# Scene defaults
# ---------------------------------------------------------------------------
# TABLE_WIDTH / TABLE_HEIGHT (float, meters): rectangular table size.
# OBJECT_RADIUS (float, meters): uniform disk radius of every object.
# The manipulation range is not configured here: it defaults to half of
# the smaller table dimension and is stored per scenario.
# ---------------------------------------------------------------------------
TABLE_WIDTH: float = float(os.getenv("TABLE_WIDTH", "2.0"))
TABLE_HEIGHT: float = float(os.getenv("TABLE_HEIGHT", "1.0"))
OBJECT_RADIUS: float = float(os.getenv("OBJECT_RADIUS", "0.05"))

# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------
# MANIPULATION_COST (float): cost charged per pick or place operation.
#     Travel cost is the around-the-table distance in meters.
# ---------------------------------------------------------------------------
MANIPULATION_COST: float = float(os.getenv("MANIPULATION_COST", "1.0"))

# ---------------------------------------------------------------------------
# Planner tuning
# ---------------------------------------------------------------------------
# PLANNER_TIMEOUT (float): wall-clock seconds per planner run.
# RE_EXPLORE_PROB (float): probability of re-exploring a closed state once
#     a first solution exists.
# BUFFER_SAMPLES_SINGLE / BUFFER_SAMPLES_MULTIPLE (int): buffer poses drawn
#     per blocked object when expanding a state.
# BUFFER_SAMPLE_ATTEMPTS (int): rejection-sampling cap for one buffer pose.
# LOCAL_SOLVER_RETRIES (int): fresh buffer-allocation attempts of the
#     lazy-buffer local solver before it gives up.
# MAX_DP_OBJECTS (int): largest object set the running-buffer DP accepts.
# ---------------------------------------------------------------------------
PLANNER_TIMEOUT: float = float(os.getenv("PLANNER_TIMEOUT", "10.0"))
RE_EXPLORE_PROB: float = float(os.getenv("RE_EXPLORE_PROB", "0.3"))
BUFFER_SAMPLES_SINGLE: int = int(os.getenv("BUFFER_SAMPLES_SINGLE", "3"))
BUFFER_SAMPLES_MULTIPLE: int = int(os.getenv("BUFFER_SAMPLES_MULTIPLE", "1"))
BUFFER_SAMPLE_ATTEMPTS: int = int(os.getenv("BUFFER_SAMPLE_ATTEMPTS", "100"))
LOCAL_SOLVER_RETRIES: int = int(os.getenv("LOCAL_SOLVER_RETRIES", "10"))
MAX_DP_OBJECTS: int = int(os.getenv("MAX_DP_OBJECTS", "16"))

# ---------------------------------------------------------------------------
# Numeric tolerances
# ---------------------------------------------------------------------------
# POSE_TOLERANCE (float, meters): two poses closer than this are the same
#     pose (goal tests, pick checks).
# KEY_QUANTUM (float, meters): rounding step for closed-list state keys.
# ---------------------------------------------------------------------------
POSE_TOLERANCE: float = float(os.getenv("POSE_TOLERANCE", "1e-6"))
KEY_QUANTUM: float = float(os.getenv("KEY_QUANTUM", "1e-4"))

# ---------------------------------------------------------------------------
# Scenario generation and benchmarking
# ---------------------------------------------------------------------------
# GEN_MAX_ATTEMPTS (int): rejection-sampling budget for one arrangement.
# BENCH_BUCKET_MS (int): width of a cost-curve time bucket.
# RESULTS_DIR: where solve/bench write when no --out is given.
# ---------------------------------------------------------------------------
GEN_MAX_ATTEMPTS: int = int(os.getenv("GEN_MAX_ATTEMPTS", "10000"))
BENCH_BUCKET_MS: int = int(os.getenv("BENCH_BUCKET_MS", "100"))
RESULTS_DIR: Path = Path(os.getenv("RESULTS_DIR", str(BASE_DIR / "data" / "results")))

# ---------------------------------------------------------------------------
# Logging configuration
# ---------------------------------------------------------------------------
# Level defaults to INFO; set LOG_LEVEL=DEBUG to trace expansions.
# The format includes module name and line number for fast triage.
# ---------------------------------------------------------------------------
LOG_LEVEL: int = getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)
LOG_FORMAT: str = "%(asctime)s | %(levelname)-8s | %(name)s:%(lineno)d | %(message)s"
LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: int | None = None) -> None:
    """Configure the root logger with a consistent format and level.

    Called once at startup in main.py. All modules that use
    logging.getLogger(__name__) automatically inherit this configuration.
    """
    logging.basicConfig(
        level=LOG_LEVEL if level is None else level,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
    )


def validate_config() -> None:
    """Check that every numeric setting is in range and raise early if not.

    Runs at startup so a bad .env value produces one clear message instead
    of a confusing failure deep inside a planner run.
    """
    problems: list[str] = []

    if TABLE_WIDTH <= 0:
        problems.append("TABLE_WIDTH must be > 0")
    if TABLE_HEIGHT <= 0:
        problems.append("TABLE_HEIGHT must be > 0")
    if OBJECT_RADIUS <= 0:
        problems.append("OBJECT_RADIUS must be > 0")
    if MANIPULATION_COST < 0:
        problems.append("MANIPULATION_COST must be >= 0")
    if PLANNER_TIMEOUT <= 0:
        problems.append("PLANNER_TIMEOUT must be > 0")
    if not 0.0 <= RE_EXPLORE_PROB <= 1.0:
        problems.append("RE_EXPLORE_PROB must be within [0, 1]")
    if BUFFER_SAMPLES_SINGLE < 1 or BUFFER_SAMPLES_MULTIPLE < 1:
        problems.append("BUFFER_SAMPLES_* must be >= 1")
    if BUFFER_SAMPLE_ATTEMPTS < 1:
        problems.append("BUFFER_SAMPLE_ATTEMPTS must be >= 1")
    if LOCAL_SOLVER_RETRIES < 0:
        problems.append("LOCAL_SOLVER_RETRIES must be >= 0")
    if POSE_TOLERANCE <= 0 or KEY_QUANTUM <= 0:
        problems.append("POSE_TOLERANCE and KEY_QUANTUM must be > 0")
    if BENCH_BUCKET_MS <= 0:
        problems.append("BENCH_BUCKET_MS must be > 0")

    if problems:
        raise EnvironmentError(
            f"Invalid configuration: {'; '.join(problems)}. "
            f"Fix the values in {_env_path} or the shell environment."
        )
