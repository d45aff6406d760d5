"""Readers for the solver's documented export formats.

Implemented against the file contracts alone (magic line, one JSON header
line, blank line, little-endian float64 payload for fields; the fixed
nine-column CSV plus optional JSON sidecar for reports) so this package
never needs the solver installed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELD_MAGIC = b"SWEEPROM-FIELD 1"

REPORT_COLUMNS = (
    "point_index", "theta1", "theta2", "rel_l2_error",
    "fom_time_s", "rom_time_s", "speedup", "fom_sweeps", "rom_sweeps",
)


class ExportError(ValueError):
    """Export file violates the documented contract."""


@dataclass(frozen=True)
class FieldExport:
    """One exported scalar-flux field, cell-averaged onto the mesh grid.

    ``grids[g]`` is an (ny, nx) array: the mean of the 4 local degrees of
    freedom per cell, which for the bilinear element is the cell-midpoint
    value.
    """

    nx: int
    ny: int
    n_groups: int
    n_local: int
    grids: np.ndarray  # (n_groups, ny, nx)

    @property
    def shape(self) -> tuple:
        return (self.n_groups, self.ny, self.nx)


def read_field(path) -> FieldExport:
    raw = Path(path).read_bytes()
    head, _, rest = raw.partition(b"\n")
    if head != FIELD_MAGIC:
        raise ExportError(f"{path}: bad magic {head[:32]!r}, expected {FIELD_MAGIC!r}")
    meta_line, sep, payload = rest.partition(b"\n\n")
    if not sep:
        raise ExportError(f"{path}: missing header terminator")
    try:
        meta = json.loads(meta_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ExportError(f"{path}: unparseable header: {exc}")
    try:
        nx, ny = int(meta["nx"]), int(meta["ny"])
        n_groups, n_local = int(meta["n_groups"]), int(meta["n_local"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ExportError(f"{path}: incomplete header: {exc}")
    specs = meta.get("arrays", [])
    if len(specs) != 1:
        raise ExportError(f"{path}: expected exactly one array, found {len(specs)}")
    count = n_groups * nx * ny * n_local
    if len(payload) != count * 8:
        raise ExportError(
            f"{path}: payload holds {len(payload) // 8} values, header promises {count}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise ExportError(f"{path}: field contains non-finite values")
    grids = values.reshape(n_groups, ny, nx, n_local).mean(axis=3)
    return FieldExport(nx=nx, ny=ny, n_groups=n_groups, n_local=n_local, grids=grids)


@dataclass(frozen=True)
class EvalReportData:
    """Parsed evaluation report: per-point rows plus sidecar metadata."""

    rows: list
    mean_error: float
    mean_speedup: float
    n_snapshots: object  # int when the sidecar is present, else "?"


def read_report(csv_path) -> EvalReportData:
    csv_path = Path(csv_path)
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != REPORT_COLUMNS:
            raise ExportError(
                f"{csv_path}: unexpected report columns {reader.fieldnames}"
            )
        for raw in reader:
            if raw["point_index"] == "mean":
                continue
            rows.append({
                "point_index": int(raw["point_index"]),
                "rel_l2_error": float(raw["rel_l2_error"]),
                "speedup": float(raw["speedup"]),
            })
    if not rows:
        raise ExportError(f"{csv_path}: report holds no test points")

    n_snapshots = "?"
    mean_error = float(np.mean([r["rel_l2_error"] for r in rows]))
    mean_speedup = float(np.mean([r["speedup"] for r in rows]))
    sidecar_path = csv_path.with_suffix(".json")
    if sidecar_path.exists():
        try:
            sidecar = json.loads(sidecar_path.read_text())
            n_snapshots = int(sidecar["n_snapshots"])
            mean_error = float(sidecar.get("mean_rel_l2_error", mean_error))
            mean_speedup = float(sidecar.get("mean_speedup", mean_speedup))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            pass  # sidecar is optional; fall back to the CSV aggregates
    return EvalReportData(rows=rows, mean_error=mean_error,
                          mean_speedup=mean_speedup, n_snapshots=n_snapshots)
