"""CSV and JSON files with provenance headers.

Every CSV starts with ``#`` comment lines: tool name, version and the
SHA-256 of the resolved run configuration, optionally followed by
``# key=value`` metadata lines.  Units live in the column names.
"""
from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__

__all__ = [
    "SchemaError",
    "Table",
    "config_hash",
    "write_csv",
    "read_csv",
    "write_json",
    "require_columns",
]

_UNIT_SUFFIX = re.compile(r"^(?P<stem>.+?)_(?P<unit>ghz|mhz|khz|hz|ns|us|ms|s|g|mt|t|um|nm|mm|gpa|mpa)$", re.I)


class SchemaError(ValueError):
    """Input file does not match the expected column layout."""


def config_hash(config: Mapping) -> str:
    """SHA-256 of the canonical JSON form, ignoring ``output_dir``.

    Where the files are written does not change what is computed, so the
    same run in two directories carries the same hash.
    """
    body = {k: v for k, v in config.items() if k != "output_dir"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(
    path: str | Path,
    columns: Mapping[str, Sequence[float]],
    config: Mapping | None = None,
    meta: Mapping[str, object] | None = None,
) -> Path:
    path = Path(path)
    names = list(columns)
    data = []
    for n in names:
        col = np.asarray(columns[n])
        data.append(col if np.issubdtype(col.dtype, np.integer) else col.astype(float))
    n_rows = {len(d) for d in data}
    if len(n_rows) > 1:
        raise ValueError(f"columns have different lengths: {sorted(n_rows)}")
    lines = [f"# nvstrain {__version__} config_sha256={config_hash(config or {})}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(names))
    for row in zip(*(d.tolist() for d in data)):
        lines.append(",".join(_format(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class Table:
    columns: dict[str, np.ndarray]
    meta: dict[str, str] = field(default_factory=dict)
    path: str = ""

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def get(self, name: str) -> np.ndarray | None:
        return self.columns.get(name.lower())

    def __getitem__(self, name: str) -> np.ndarray:
        col = self.get(name)
        if col is None:
            raise SchemaError(f"{self.path}: missing column {name!r}")
        return col


def read_csv(path: str | Path) -> Table:
    """Read a numeric CSV; column names are lower-cased.

    Malformed rows raise :class:`SchemaError` with the 1-based line number.
    """
    path = Path(path)
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and " " not in body.split("=", 1)[0]:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = [c.strip().lower() for c in cells]
                if len(set(header)) != len(header):
                    raise SchemaError(f"{path}:{lineno}: duplicate column names")
                continue
            if len(cells) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, found {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: non-numeric value ({exc})") from None
    if header is None:
        raise SchemaError(f"{path}: no header row")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return Table({name: arr[:, i] for i, name in enumerate(header)}, meta, str(path))


def require_columns(table: Table, required: Sequence[str], optional: Sequence[str] = ()) -> None:
    """Check column names, reporting unit mismatches separately.

    A column such as ``f_mhz`` where ``f_ghz`` is expected is reported as a
    unit mismatch rather than a missing column.
    """
    have = set(table.columns)
    stems = {}
    for name in have:
        m = _UNIT_SUFFIX.match(name)
        if m:
            stems.setdefault(m["stem"].lower(), []).append(name)
    for name in list(required) + list(optional):
        key = name.lower()
        if key in have:
            continue
        m = _UNIT_SUFFIX.match(key)
        if m and m["stem"] in stems:
            raise SchemaError(
                f"{table.path}: unit mismatch for {name!r}: found {stems[m['stem']]}, expected unit {m['unit']!r}"
            )
        if name in required:
            raise SchemaError(f"{table.path}: missing column {name!r}")


def write_json(path: str | Path, payload: Mapping, config: Mapping | None = None) -> Path:
    """Write sorted, indented JSON.

    With ``config`` given, a ``generated_by`` entry records the tool version
    and config hash, mirroring the CSV header line.
    """
    path = Path(path)
    body = dict(payload)
    if config is not None:
        body["generated_by"] = {"tool": f"nvstrain {__version__}", "config_sha256": config_hash(config)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj: object) -> object:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj).__name__}")
