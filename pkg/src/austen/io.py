"""File formats: strict CSV tables and canonical JSON documents.

CSV schemas are exact: the header must match the expected columns in
order, every cell must parse as a finite float, and treatment cells
must be exactly 0 or 1. Errors name the file, row (1-based, header is
row 1), and column.

JSON documents all carry ``schema_version`` (currently 1) and a
``kind`` tag, and are written canonically (sorted keys, two-space
indent, trailing newline) so that identical content means identical
bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibration import LeaveOutPredictions
from .core import PredictionFrame
from .errors import DegenerateDataError, InputValidationError, SchemaError
from .reference_models import Dataset, GroupSpec

__all__ = [
    "SCHEMA_VERSION",
    "PREDICTIONS_HEADER",
    "LEAVE_OUT_HEADER",
    "read_predictions",
    "write_predictions",
    "read_leave_out",
    "write_leave_out",
    "group_name_from_path",
    "read_dataset",
    "write_dataset",
    "read_groups",
    "write_groups",
    "read_json_doc",
    "write_json_doc",
    "read_run_config",
]

SCHEMA_VERSION = 1
PREDICTIONS_HEADER = ("y", "t", "g", "q0", "q1")
LEAVE_OUT_HEADER = ("y", "t", "g_wo", "q_wo")


def _read_table(path, expected_header: Sequence[str] | None
                ) -> tuple[list[str], np.ndarray]:
    """Read a strict CSV of floats. Returns (header, value matrix).

    With ``expected_header`` the header must match exactly; a None
    header means the caller validates column names itself.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", path=str(path)) from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise SchemaError("file is empty", path=str(path))
    header = [c.strip() for c in rows[0]]
    if expected_header is not None and header != list(expected_header):
        raise SchemaError(
            f"expected header {','.join(expected_header)!r}, "
            f"got {','.join(header)!r}",
            path=str(path), row=1,
        )
    n_cols = len(header)
    if len(rows) < 2:
        raise SchemaError("no data rows", path=str(path))
    data = np.empty((len(rows) - 1, n_cols))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n_cols:
            raise SchemaError(
                f"expected {n_cols} cells, got {len(row)}",
                path=str(path), row=i,
            )
        for j, cell in enumerate(row):
            try:
                val = float(cell)
            except ValueError:
                raise SchemaError(
                    f"cell {cell!r} is not a number",
                    path=str(path), row=i, column=header[j],
                ) from None
            if not math.isfinite(val):
                raise SchemaError(
                    f"cell {cell!r} is not finite",
                    path=str(path), row=i, column=header[j],
                )
            data[i - 2, j] = val
    return header, data


def _check_t_column(path, t: np.ndarray, header: Sequence[str]) -> None:
    bad = np.nonzero((t != 0.0) & (t != 1.0))[0]
    if bad.size:
        raise SchemaError(
            f"treatment must be exactly 0 or 1, got {t[bad[0]]!r}",
            path=str(path), row=int(bad[0]) + 2, column="t",
        )


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_table(path, header: Sequence[str], columns: Sequence[np.ndarray],
                 int_columns: frozenset[str] = frozenset({"t"})) -> None:
    path = Path(path)
    lines = [",".join(header)]
    n = columns[0].shape[0]
    for i in range(n):
        cells = []
        for name, col in zip(header, columns):
            v = col[i]
            cells.append(str(int(v)) if name in int_columns else _fmt(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path) -> PredictionFrame:
    """Load a y,t,g,q0,q1 table into a PredictionFrame."""
    _, data = _read_table(path, PREDICTIONS_HEADER)
    _check_t_column(path, data[:, 1], PREDICTIONS_HEADER)
    try:
        return PredictionFrame(y=data[:, 0], t=data[:, 1], g=data[:, 2],
                               q0=data[:, 3], q1=data[:, 4])
    except SchemaError:
        raise
    except DegenerateDataError as exc:
        raise DegenerateDataError(f"{path}: {exc}") from exc
    except InputValidationError as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def write_predictions(path, frame: PredictionFrame) -> None:
    _write_table(path, PREDICTIONS_HEADER,
                 (frame.y, frame.t, frame.g, frame.q0, frame.q1))


def group_name_from_path(path) -> str:
    """Default group name for a leave-out file: the stem, with a
    'leave_out_' prefix stripped when present."""
    stem = Path(path).stem
    if stem.startswith("leave_out_") and len(stem) > len("leave_out_"):
        return stem[len("leave_out_"):]
    return stem


def read_leave_out(path, group_name: str | None = None,
                   frame: PredictionFrame | None = None) -> LeaveOutPredictions:
    """Load a y,t,g_wo,q_wo table.

    When ``frame`` is given the file's y and t columns must match it
    row for row (t exactly, y to 1e-8 relative), which catches files
    from a different dataset or a different row order.
    """
    _, data = _read_table(path, LEAVE_OUT_HEADER)
    _check_t_column(path, data[:, 1], LEAVE_OUT_HEADER)
    name = group_name if group_name is not None else group_name_from_path(path)
    if frame is not None:
        if data.shape[0] != frame.n:
            raise SchemaError(
                f"{data.shape[0]} rows, but the predictions frame has {frame.n}",
                path=str(path),
            )
        t_bad = np.nonzero(data[:, 1] != frame.t)[0]
        if t_bad.size:
            raise SchemaError(
                "treatment column does not match the predictions frame",
                path=str(path), row=int(t_bad[0]) + 2, column="t",
            )
        y_bad = np.nonzero(~np.isclose(data[:, 0], frame.y,
                                       rtol=1e-8, atol=1e-12))[0]
        if y_bad.size:
            raise SchemaError(
                "outcome column does not match the predictions frame",
                path=str(path), row=int(y_bad[0]) + 2, column="y",
            )
    try:
        return LeaveOutPredictions(group_name=name, g_wo=data[:, 2],
                                   q_wo=data[:, 3])
    except InputValidationError as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def write_leave_out(path, lo: LeaveOutPredictions,
                    frame: PredictionFrame) -> None:
    if lo.n != frame.n:
        raise InputValidationError(
            "leave-out predictions are not row-aligned with the frame"
        )
    _write_table(path, LEAVE_OUT_HEADER, (frame.y, frame.t, lo.g_wo, lo.q_wo))


def read_dataset(path) -> Dataset:
    """Load a raw table: y, t, then at least one covariate column."""
    header, data = _read_table(path, None)
    if len(header) < 3 or header[:2] != ["y", "t"]:
        raise SchemaError(
            f"expected header starting 'y,t' plus at least one covariate, "
            f"got {','.join(header)!r}",
            path=str(path), row=1,
        )
    _check_t_column(path, data[:, 1], header)
    try:
        return Dataset(y=data[:, 0], t=data[:, 1], x=data[:, 2:],
                       columns=tuple(header[2:]))
    except DegenerateDataError as exc:
        raise DegenerateDataError(f"{path}: {exc}") from exc
    except InputValidationError as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def write_dataset(path, dataset: Dataset) -> None:
    header = ("y", "t") + dataset.columns
    cols = [dataset.y, dataset.t] + [dataset.x[:, j]
                                     for j in range(dataset.x.shape[1])]
    _write_table(path, header, cols)


def write_json_doc(path, doc: dict) -> None:
    """Canonical JSON: sorted keys, 2-space indent, trailing newline."""
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def read_json_doc(path, expected_kind: str | None = None) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", path=str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", path=str(path)) from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object",
                          path=str(path))
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema_version {version!r} "
            f"(this build reads {SCHEMA_VERSION})",
            path=str(path),
        )
    if expected_kind is not None and doc.get("kind") != expected_kind:
        raise SchemaError(
            f"expected kind {expected_kind!r}, got {doc.get('kind')!r}",
            path=str(path),
        )
    return doc


def read_groups(path) -> GroupSpec:
    doc = read_json_doc(path, expected_kind="groups")
    groups = doc.get("groups")
    if not isinstance(groups, dict) or not groups:
        raise SchemaError("'groups' must be a non-empty object",
                          path=str(path))
    for name, cols in groups.items():
        if not isinstance(cols, list) or not all(isinstance(c, str) for c in cols):
            raise SchemaError(
                f"group {name!r} must map to a list of column names",
                path=str(path),
            )
    allow = doc.get("allow_overlap", False)
    if not isinstance(allow, bool):
        raise SchemaError("'allow_overlap' must be a boolean", path=str(path))
    try:
        return GroupSpec(groups={k: tuple(v) for k, v in groups.items()},
                         allow_overlap=allow)
    except InputValidationError as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def write_groups(path, groups: GroupSpec) -> None:
    write_json_doc(path, {
        "schema_version": SCHEMA_VERSION,
        "kind": "groups",
        "groups": {k: list(v) for k, v in groups.groups.items()},
        "allow_overlap": groups.allow_overlap,
    })


_RUN_CONFIG_KEYS = {
    "predictions": str,
    "leave_out": dict,
    "target_bias": (int, float),
    "estimand": str,
    "alpha_grid": list,
    "bootstrap": int,
    "level": (int, float),
    "seed": int,
    "out": str,
    "title": str,
}


def read_run_config(path) -> dict:
    """Plot/analysis settings as a JSON object; keys mirror the
    command-line flags and override them where present."""
    doc = read_json_doc(path, expected_kind="run_config")
    out: dict = {}
    for key, val in doc.items():
        if key in ("schema_version", "kind"):
            continue
        if key not in _RUN_CONFIG_KEYS:
            raise SchemaError(
                f"unknown key {key!r}; accepted keys: "
                f"{sorted(_RUN_CONFIG_KEYS)}",
                path=str(path),
            )
        want = _RUN_CONFIG_KEYS[key]
        if not isinstance(val, want) or isinstance(val, bool):
            raise SchemaError(
                f"key {key!r} has wrong type {type(val).__name__}",
                path=str(path),
            )
        out[key] = val
    if "estimand" in out and out["estimand"] not in ("ate", "att"):
        raise SchemaError(
            f"estimand must be 'ate' or 'att', got {out['estimand']!r}",
            path=str(path),
        )
    if "leave_out" in out:
        for k, v in out["leave_out"].items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise SchemaError(
                    "leave_out must map group names to file paths",
                    path=str(path),
                )
    if "alpha_grid" in out:
        ag = out["alpha_grid"]
        if (len(ag) != 3
                or not all(isinstance(v, (int, float))
                           and not isinstance(v, bool) for v in ag)):
            raise SchemaError(
                "alpha_grid must be [start, stop, count]", path=str(path)
            )
    return out
