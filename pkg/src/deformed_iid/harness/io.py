"""Report and artifact writers: CSV, JSON and SVG."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

from ..errors import IOErrorWithPath

__all__ = [
    "format_number",
    "csv_text",
    "write_csv",
    "emit_csv",
    "json_text",
    "emit_json",
    "svg_scatter_text",
    "emit_svg_scatter",
    "eigenvalue_rows",
    "sanitize",
]


def format_number(x) -> str:
    """17 significant digits for floats, so values round-trip exactly."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(x) for x in row])
    return buf.getvalue()


def _write_text(path: str, text: str) -> None:
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOErrorWithPath(str(exc), path) from exc


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    _write_text(path, csv_text(header, rows))


def eigenvalue_rows(eigenvalues) -> list[tuple[float, float]]:
    z = np.asarray(eigenvalues, dtype=complex).ravel()
    return [(float(v.real), float(v.imag)) for v in z]


def _is_scalar(x) -> bool:
    return x is None or isinstance(x, (bool, int, float, str, np.bool_, np.integer, np.floating))


def emit_csv(report, path: str) -> None:
    """One row per trial record with every scalar field as a column."""
    records = report["trials"] if isinstance(report, dict) else report.to_dict()["trials"]
    keys = sorted({k for rec in records for k, v in rec.items() if _is_scalar(v)} - {"trial"})
    header = ["trial", *keys]
    rows = [[rec.get("trial"), *[rec.get(k) if _is_scalar(rec.get(k)) else None for k in keys]]
            for rec in records]
    write_csv(path, header, rows)


def sanitize(obj):
    """Convert numpy scalars and arrays to JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, complex):
        return {"re": sanitize(obj.real), "im": sanitize(obj.imag)}
    return obj


def json_text(obj) -> str:
    return json.dumps(sanitize(obj), sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def emit_json(report, path: str) -> None:
    obj = report if isinstance(report, (dict, list)) else report.to_dict()
    _write_text(path, json_text(obj))


def svg_scatter_text(eigenvalues, size: int = 1000) -> str:
    """Eigenvalues in the complex plane with the unit circle drawn for reference."""
    z = np.asarray(eigenvalues, dtype=complex).ravel()
    extent = max(1.2, 1.1 * float(np.abs(z).max())) if z.size else 1.2
    half = size / 2.0
    scale = 0.45 * size / extent
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{half:.3f}" x2="{size}" y2="{half:.3f}" stroke="#bbbbbb" stroke-width="1"/>',
        f'<line x1="{half:.3f}" y1="0" x2="{half:.3f}" y2="{size}" stroke="#bbbbbb" stroke-width="1"/>',
        f'<circle cx="{half:.3f}" cy="{half:.3f}" r="{scale:.3f}" fill="none" stroke="#d62728" stroke-width="2"/>',
    ]
    for v in z:
        cx = half + scale * v.real
        cy = half - scale * v.imag
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="2" fill="#1f77b4"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_svg_scatter(eigenvalues, path: str) -> None:
    _write_text(path, svg_scatter_text(eigenvalues))
