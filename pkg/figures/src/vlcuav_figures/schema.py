"""CSV input handling: schema checks with named-column error messages."""

from __future__ import annotations

import csv
from pathlib import Path


class FigureInputError(ValueError):
    """Bad figure input: missing file, empty data, or missing columns."""


KINDS = ("sweep", "trajectory", "convergence", "comparison")

# required columns, per input file role
SWEEP_COLUMNS = ["h", "planner", "feasible", "mean_distance", "std_distance", "h_star"]
TRAJ_COLUMNS = ["step", "x", "y", "served_ids"]
GU_COLUMNS = ["gu", "x", "y", "comm_radius", "reception_radius"]
CONVERGENCE_COLUMNS = ["episode", "ep_return", "success"]
COMPARISON_COLUMNS = ["gu_count", "algorithm", "mean_distance", "std_distance"]


def read_rows(path, required: list[str]) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input CSV does not exist: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in required if c not in fields]
        if missing:
            raise FigureInputError(f"{path.name}: missing required column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise FigureInputError(f"{path.name}: no data rows")
    return rows


def float_or_none(text: str):
    return float(text) if text not in ("", None) else None
