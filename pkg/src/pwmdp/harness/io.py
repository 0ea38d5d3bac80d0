"""Trace serialization: CSV and JSON, with exact round-trips.

The CSV header is fixed to the trace field names; floats are written with
``repr`` so parsing recovers them bit-exactly. The JSON form is an array
of row objects. Both re-parse to traces equal to the original.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .experiment import TRACE_FIELDS, ExperimentTrace, TraceRow

__all__ = [
    "emit_trace",
    "read_trace",
    "trace_to_csv_text",
    "trace_to_json_text",
    "parse_trace_csv_text",
    "parse_trace_json_text",
]

_FLOAT_FIELDS = ("xi", "h_bar", "entropy", "lambda_w", "beta_eff", "err")


def _row_to_strings(row: TraceRow) -> list[str]:
    out = []
    for name in TRACE_FIELDS:
        value = getattr(row, name)
        out.append(repr(value) if isinstance(value, float) else str(value))
    return out


def trace_to_csv_text(trace: ExperimentTrace) -> str:
    lines = [",".join(TRACE_FIELDS)]
    for row in trace.rows:
        lines.append(",".join(_row_to_strings(row)))
    return "\n".join(lines) + "\n"


def trace_to_json_text(trace: ExperimentTrace) -> str:
    payload = [
        {name: getattr(row, name) for name in TRACE_FIELDS} for row in trace.rows
    ]
    return json.dumps(payload, indent=2) + "\n"


def _row_from_mapping(mapping: dict) -> TraceRow:
    return TraceRow(
        iter=int(mapping["iter"]),
        true_mode=int(mapping["true_mode"]),
        xi=float(mapping["xi"]),
        h_bar=float(mapping["h_bar"]),
        entropy=float(mapping["entropy"]),
        lambda_w=float(mapping["lambda_w"]),
        beta_eff=float(mapping["beta_eff"]),
        err=float(mapping["err"]),
        phase=str(mapping["phase"]),
    )


def parse_trace_csv_text(text: str) -> ExperimentTrace:
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames != list(TRACE_FIELDS):
        raise ValueError(
            f"unexpected CSV header {reader.fieldnames}, expected {list(TRACE_FIELDS)}"
        )
    return ExperimentTrace(tuple(_row_from_mapping(r) for r in reader))


def parse_trace_json_text(text: str) -> ExperimentTrace:
    payload = json.loads(text)
    if not isinstance(payload, list):
        raise ValueError("trace JSON must be an array of row objects")
    return ExperimentTrace(tuple(_row_from_mapping(r) for r in payload))


def emit_trace(trace: ExperimentTrace, fmt: str, path) -> Path:
    """Write a trace to ``path`` in the given format; returns the path.

    I/O failures raise OSError annotated with the offending path.
    """
    if fmt == "csv":
        text = trace_to_csv_text(trace)
    elif fmt == "json":
        text = trace_to_json_text(trace)
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def read_trace(path) -> ExperimentTrace:
    """Read a trace back from a .csv or .json file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    if path.suffix == ".json":
        return parse_trace_json_text(text)
    return parse_trace_csv_text(text)
