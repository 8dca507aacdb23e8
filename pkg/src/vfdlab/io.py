"""CSV and JSON emission for fields, trajectories, profiles and reports.

All CSVs carry a header row, use '.' decimals and a fixed %.12g float format,
so identical inputs reproduce identical payloads byte for byte.  JSON
manifests are written with sorted keys.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .asymptotics import ConvergenceReport, L1Report
from .core import RadialField, Trajectory
from .profile import Profile

__all__ = [
    "format_float",
    "write_csv",
    "write_field_csv",
    "write_trajectory_csv",
    "write_profile_csv",
    "write_convergence_csv",
    "write_l1_report",
    "write_manifest",
]

_FMT = "%.12g"


def format_float(x: float) -> str:
    return _FMT % float(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_field_csv(path, field: RadialField) -> Path:
    return write_csv(path, ("r", "value"), zip(field.grid.centers, field.values))


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    def rows():
        for t, f in zip(traj.times, traj.fields):
            for r, u in zip(f.grid.centers, f.values):
                yield (t, r, u)

    return write_csv(path, ("t", "r", "u"), rows())


def write_profile_csv(path, profile: Profile) -> Path:
    q = profile.exps.q
    rq = np.where(profile.grid > 0.0, profile.grid**q * profile.values, 0.0)
    return write_csv(path, ("r", "v", "rq_v"), zip(profile.grid, profile.values, rq))


def write_convergence_csv(path, report: ConvergenceReport) -> Path:
    return write_csv(path, ("t", "d"), zip(report.times, report.distances))


def write_l1_report(csv_path, json_path, report: L1Report) -> tuple[Path, Path]:
    """CSV of the measured D series plus the fitted slope as JSON."""
    a = write_csv(csv_path, ("t", "D"), zip(report.times, report.values))
    b = write_manifest(
        json_path,
        {
            "R1": report.R1,
            "slope": report.slope,
            "fit_residual": report.fit_residual,
        },
    )
    return a, b


def _jsonify(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def write_manifest(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(_jsonify(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path
