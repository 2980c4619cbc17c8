# =============================================================================
# Tabletop Rearrangement Planner - Result Files
# v1.0.0
# =============================================================================
# Reads and writes everything the CLI exchanges with the disk:
#
#   scenario / plan   JSON, poses as [x, y] arrays
#   events            CSV  elapsed_ms,best_cost
#   bench             CSV  long format, one row per time bucket
#
# Runs without --out go to a timestamped directory under RESULTS_DIR, e.g.
#   data/results/2025-01-15_14-30-45/
# Directories are created on first use.
# =============================================================================

from __future__ import annotations

import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Sequence

from app.config import RESULTS_DIR

logger = logging.getLogger(__name__)

EVENTS_HEADER = ("elapsed_ms", "best_cost")


def ensure_directory(path: Path) -> Path:
    """Create path (and any missing parents) if it doesn't already exist."""
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_directory(base: Path = RESULTS_DIR, now: datetime | None = None) -> Path:
    """Timestamped directory for one CLI run.

    Colons are avoided because they are illegal in filenames on macOS/Windows.
    """
    timestamp = (now or datetime.now()).strftime("%Y-%m-%d_%H-%M-%S")
    return ensure_directory(base / timestamp)


def result_stem(planner: str, strategy: str, seed: int) -> str:
    return f"{planner}_{strategy}_seed{seed}"


def write_json(path: Path, data: dict[str, Any]) -> Path:
    ensure_directory(path.parent)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info("Wrote %s", path)
    return path


def read_json(path: Path) -> dict[str, Any]:
    """Parse a JSON file.

    Raises:
        ValueError: If the file is not valid JSON or not a JSON object.
    """
    with path.open("r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


def write_rows_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    ensure_directory(path.parent)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Wrote %s", path)
    return path


def write_events_csv(path: Path, events: Iterable[tuple[float, float]]) -> Path:
    return write_rows_csv(path, EVENTS_HEADER, ((round(elapsed * 1000.0, 3), cost) for elapsed, cost in events))


def read_rows_csv(path: Path) -> list[dict[str, str]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
