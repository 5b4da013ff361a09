"""Deterministic CSV, JSON and text-table writers for the CLI."""

import csv
import json
from pathlib import Path

import numpy as np

NO_DISTINCT_PEAK = "no distinct peak"
FIELD_HEADER = ["x_nm", "y_nm", "z_nm", "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re", "Ez_im", "I_norm"]


def fmt(value, digits=10):
    """Stable text form of a number; ``None`` becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    return str(value)


def write_csv(path, header, rows, digits=10):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v, digits) for v in row])
    return path


def write_scan(path, positions, intensity):
    return write_csv(path, ["pos_nm", "intensity"], zip(positions, intensity))


def write_field_grid(path, points, field, intensity):
    norm = intensity / intensity.max() if intensity.max() > 0.0 else intensity
    rows = (
        (p[0], p[1], p[2], e[0].real, e[0].imag, e[1].real, e[1].imag, e[2].real, e[2].imag, i)
        for p, e, i in zip(points, field, norm)
    )
    return write_csv(path, FIELD_HEADER, rows)


def write_intensity_grid(path, points, intensity):
    norm = intensity / intensity.max() if intensity.max() > 0.0 else intensity
    rows = ((p[0], p[1], p[2], i) for p, i in zip(points, norm))
    return write_csv(path, ["x_nm", "y_nm", "z_nm", "I_norm"], rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def format_table(headers, rows):
    """Plain fixed-width table; first column left aligned, the rest right aligned."""
    cells = [[str(h) for h in headers]] + [[c if isinstance(c, str) else fmt(c, 6) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for k, row in enumerate(cells):
        parts = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(parts).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def width_cell(value):
    """Table cell for a FWHM in nm, with the sentinel for split profiles."""
    return NO_DISTINCT_PEAK if value is None else f"{value:.1f}"
