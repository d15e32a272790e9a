"""CSV ingestion with schema validation and result emission."""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .datasets import AdoptionRecord, BenchmarkScore, DeskillObservation, ScoreRecord

PathLike = Union[str, os.PathLike]

SCHEMAS = {
    "pisa": ("country", "year", "score"),
    "adoption": ("country", "year", "fraction"),
    "benchmarks": ("model", "release_date", "domain", "ai_score", "human_baseline"),
    "deskill": ("domain", "decline", "duration", "time_unit"),
}
# columns that identify a row; repeats are rejected
KEYS = {
    "pisa": ("country", "year"),
    "adoption": ("country", "year"),
    "benchmarks": ("model", "domain"),
    "deskill": ("domain",),
}


class CsvValidationError(ValueError):
    def __init__(self, path, diagnostics: list[str]):
        self.path = str(path)
        self.diagnostics = diagnostics
        super().__init__(f"{path}: {len(diagnostics)} invalid row(s)\n  " + "\n  ".join(diagnostics))


def bundled_path(kind: str) -> Path:
    if kind not in SCHEMAS:
        raise ValueError(f"kind must be one of {sorted(SCHEMAS)}, got {kind!r}")
    return Path(str(resources.files("capdyn") / "data" / f"{kind}.csv"))


def _parse_row(kind: str, row: dict):
    if kind == "pisa":
        return ScoreRecord(row["country"].strip(), int(row["year"]), float(row["score"]))
    if kind == "adoption":
        return AdoptionRecord(row["country"].strip(), int(row["year"]), float(row["fraction"]))
    if kind == "benchmarks":
        return BenchmarkScore(row["model"].strip(), dt.date.fromisoformat(row["release_date"].strip()),
                              row["domain"].strip(), float(row["ai_score"]), float(row["human_baseline"]))
    return DeskillObservation(row["domain"].strip(), float(row["decline"]), float(row["duration"]),
                              row["time_unit"].strip())


def ingest_csv(kind: str, path: Optional[PathLike] = None) -> list:
    """Load and validate one of the known CSV kinds; ``path=None`` reads the bundled file.

    Every invalid row is reported with its line number before failing.
    """
    if kind not in SCHEMAS:
        raise ValueError(f"kind must be one of {sorted(SCHEMAS)}, got {kind!r}")
    path = bundled_path(kind) if path is None else Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        if header != SCHEMAS[kind]:
            raise CsvValidationError(path, [f"line 1: expected header {','.join(SCHEMAS[kind])}, "
                                            f"got {','.join(header) or '<empty>'}"])
        reader.fieldnames = list(header)
        records, problems, seen = [], [], {}
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                problems.append(f"line {line}: expected {len(header)} fields")
                continue
            try:
                rec = _parse_row(kind, row)
            except (ValueError, TypeError) as exc:
                problems.append(f"line {line}: {exc}")
                continue
            key = tuple(getattr(rec, k) for k in KEYS[kind])
            if key in seen:
                problems.append(f"line {line}: duplicate {KEYS[kind]} {key} (first on line {seen[key]})")
                continue
            seen[key] = line
            records.append(rec)
    if problems:
        raise CsvValidationError(path, problems)
    if not records:
        raise CsvValidationError(path, ["no data rows"])
    return records


# -- output ---------------------------------------------------------------------

def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(f"{float(v):.10g}")
        return x if math.isfinite(x) else None
    return v


def ensure_writable(output_dir: PathLike) -> Path:
    """Create ``output_dir`` if needed and prove a file can be written there."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".probe-"):
            pass
    except OSError as exc:
        raise PermissionError(f"output directory {out} is not writable: {exc}") from None
    return out


def write_table(rows: list[dict], path: Path, fmt: str) -> None:
    if not rows:
        raise ValueError(f"table {path.name} is empty")
    columns = list(rows[0])
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(c)) for c in columns])
    elif fmt == "json":
        doc = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
        path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit_results(tables: dict[str, list[dict]], output_dir: PathLike, fmt: str = "csv",
                 manifest: Optional[dict] = None) -> dict:
    """Write one file per table plus ``manifest.json``; returns the manifest."""
    if not tables:
        raise ValueError("no tables to emit")
    out = ensure_writable(output_dir)
    files = []
    for name, rows in tables.items():
        path = out / f"{name}.{fmt}"
        write_table(rows, path, fmt)
        files.append({"file": path.name, "rows": len(rows)})
    manifest = dict(manifest or {})
    manifest["files"] = files
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, default=str) + "\n", encoding="utf-8")
    return manifest


def read_table(path: PathLike) -> list[dict]:
    """Read back a CSV or JSON table emitted by :func:`emit_results` (numbers as floats)."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        conv = {}
        for k, v in row.items():
            try:
                conv[k] = float(v)
            except ValueError:
                conv[k] = v
        out.append(conv)
    return out
