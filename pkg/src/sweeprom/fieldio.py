"""On-disk formats: binary field files, the library container, and CSV
evaluation reports.

Both binary formats share one layout: an ASCII magic line with a format
version, one line of JSON metadata, a blank line, then raw little-endian
float64 arrays in the order listed by the metadata. Writes are
deterministic (sorted JSON keys, no timestamps), so identical inputs give
bit-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .problem import ProblemConfig
from .configfile import config_from_dict
from .rom import ReducedBasis, ReducedSystem, RomLibrary

FIELD_MAGIC = b"SWEEPROM-FIELD 1"
LIBRARY_MAGIC = b"SWEEPROM-LIBRARY 1"

REPORT_COLUMNS = (
    "point_index", "theta1", "theta2", "rel_l2_error",
    "fom_time_s", "rom_time_s", "speedup", "fom_sweeps", "rom_sweeps",
)


class FormatError(ValueError):
    """File does not match the documented container layout."""


def _write_container(path, magic: bytes, meta: dict, arrays):
    meta = dict(meta)
    meta["arrays"] = [
        {"name": name, "shape": list(arr.shape), "dtype": "<f8"}
        for name, arr in arrays
    ]
    blob = magic + b"\n" + json.dumps(meta, sort_keys=True).encode() + b"\n\n"
    with open(path, "wb") as fh:
        fh.write(blob)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_container(path, magic: bytes):
    raw = Path(path).read_bytes()
    head, sep, rest = raw.partition(b"\n")
    if head != magic:
        raise FormatError(
            f"{path}: bad magic {head[:32]!r}, expected {magic!r}"
        )
    meta_line, sep, payload = rest.partition(b"\n\n")
    if not sep:
        raise FormatError(f"{path}: missing metadata terminator")
    try:
        meta = json.loads(meta_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unparseable header: {exc}")
    arrays = {}
    offset = 0
    for spec in meta.get("arrays", []):
        n = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = n * 8
        if offset + nbytes > len(payload):
            raise FormatError(f"{path}: truncated payload for array '{spec['name']}'")
        arrays[spec["name"]] = np.frombuffer(
            payload[offset:offset + nbytes], dtype="<f8"
        ).reshape(spec["shape"]).astype(np.float64)
        offset += nbytes
    if offset != len(payload):
        raise FormatError(f"{path}: {len(payload) - offset} trailing bytes")
    return meta, arrays


# ---------------------------------------------------------------- fields

def write_field(path, values, nx, ny, n_groups, n_local=4):
    """Persist a flat moment field (canonical group-cell-local ordering)."""
    values = np.asarray(values, dtype=np.float64).ravel()
    expected = n_groups * nx * ny * n_local
    if values.size != expected:
        raise FormatError(
            f"field has {values.size} values, expected {expected} "
            f"for {n_groups} groups on a {nx}x{ny} mesh"
        )
    meta = {"nx": nx, "ny": ny, "n_groups": n_groups, "n_local": n_local,
            "ordering": "group-cell-local"}
    _write_container(path, FIELD_MAGIC, meta, [("values", values)])


def read_field(path):
    """Returns (values flat, meta dict with nx/ny/n_groups/n_local)."""
    meta, arrays = _read_container(path, FIELD_MAGIC)
    for key in ("nx", "ny", "n_groups", "n_local"):
        if key not in meta:
            raise FormatError(f"{path}: header missing '{key}'")
    if "values" not in arrays:
        raise FormatError(f"{path}: no values array")
    return arrays["values"], meta


def export_field_csv(path, values, nx, ny, n_groups, n_local=4):
    """Plain-text export: one row per (group, iy, ix, local) value."""
    shaped = np.asarray(values, dtype=np.float64).reshape(n_groups, ny, nx, n_local)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "iy", "ix", "local", "value"])
        for g in range(n_groups):
            for iy in range(ny):
                for ix in range(nx):
                    for k in range(n_local):
                        writer.writerow([g, iy, ix, k, repr(shaped[g, iy, ix, k])])


# --------------------------------------------------------------- library

def save_library(path, library: RomLibrary):
    config = library.config
    meta = {
        "fingerprint": config.fingerprint(),
        "config": config.to_dict(),
        "projection": library.projection,
        "rank": library.rank,
        "epsilon": library.epsilon,
        "ridge": library.ridge,
        "offline_info": library.offline_info,
        "n_train": library.n_train,
    }
    arrays = [
        ("modes", library.basis.modes),
        ("singular_values", library.basis.singular_values),
        ("params", library.params),
        ("bounds", library.bounds),
        ("a_r", np.stack([s.a_r for s in library.systems])),
        ("b_r", np.stack([s.b_r for s in library.systems])),
    ]
    if library.tangents is not None:
        arrays.append(("tangents", library.tangents))
    _write_container(path, LIBRARY_MAGIC, meta, arrays)


def load_library(path, expected_config: ProblemConfig | None = None) -> RomLibrary:
    """Load a persisted library; a config fingerprint mismatch is fatal."""
    meta, arrays = _read_container(path, LIBRARY_MAGIC)
    config = config_from_dict(meta["config"])
    if config.fingerprint() != meta["fingerprint"]:
        raise FormatError(f"{path}: stored config does not match its fingerprint")
    if expected_config is not None and expected_config.fingerprint() != meta["fingerprint"]:
        raise FormatError(
            f"{path}: library was built for a different problem "
            f"(fingerprint {meta['fingerprint'][:12]}..., "
            f"expected {expected_config.fingerprint()[:12]}...)"
        )
    rank = int(meta["rank"])
    sv = arrays["singular_values"]
    basis = ReducedBasis(
        modes=arrays["modes"], singular_values=sv, rank=rank,
        info=float(np.sum(sv[:rank] ** 2) / np.sum(sv**2)),
    )
    params = arrays["params"]
    systems = [
        ReducedSystem(
            a_r=arrays["a_r"][i], b_r=arrays["b_r"][i],
            param=tuple(params[i]), projection=meta["projection"],
            sweeps_used=rank + 1,
        )
        for i in range(params.shape[0])
    ]
    return RomLibrary(
        basis=basis, params=params, systems=systems, bounds=arrays["bounds"],
        epsilon=float(meta["epsilon"]), ridge=float(meta["ridge"]),
        projection=meta["projection"], tangents=arrays.get("tangents"),
        config=config, offline_info=meta.get("offline_info", {}),
    )


# --------------------------------------------------------------- reports

def write_eval_report(csv_path, rows, aggregates, sidecar: dict | None = None):
    """Evaluation CSV: one row per test point plus a trailing 'mean' row.

    ``rows`` are dicts keyed by REPORT_COLUMNS. Aggregates beyond the mean
    row (max error, environment fingerprint, library metadata) go to a JSON
    sidecar next to the CSV.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in REPORT_COLUMNS})
        mean_row = {k: aggregates.get(f"mean_{k}", "") for k in REPORT_COLUMNS}
        mean_row["point_index"] = "mean"
        writer.writerow(mean_row)
    if sidecar is not None:
        csv_path.with_suffix(".json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
        )


def read_eval_report(csv_path):
    """Returns (point rows, mean row or None); values parsed as floats."""
    rows, mean_row = [], None
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != REPORT_COLUMNS:
            raise FormatError(
                f"{csv_path}: unexpected report columns {reader.fieldnames}"
            )
        for raw in reader:
            parsed = {k: (raw[k] if k == "point_index" else _maybe_float(raw[k]))
                      for k in REPORT_COLUMNS}
            if raw["point_index"] == "mean":
                mean_row = parsed
            else:
                parsed["point_index"] = int(raw["point_index"])
                rows.append(parsed)
    return rows, mean_row


def _maybe_float(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return float("nan")
