"""Result records and their JSON / CSV / SVG renderings."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

CSV_COLUMNS = (
    "n", "trials", "all_real", "complex_pair", "indeterminate",
    "p_hat", "ci_lo", "ci_hi", "bound", "exact_num", "exact_den",
)
VOLATILE_KEYS = ("timestamp", "elapsed_seconds")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def as_float(value) -> float:
    """Numeric value of a record field that may be a ``"num/den"`` string."""
    return float(Fraction(value)) if isinstance(value, str) else float(value)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True, allow_nan=True) + "\n"


def render_csv(record: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in record["results"]:
        writer.writerow([_cell(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def render_svg(record: dict, width: int = 640, height: int = 400) -> str:
    """p_hat (or exact probability) against n, with CI whiskers and reference curves."""
    rows = record["results"]
    left, right, top, bottom = 60, 20, 20, 50
    pw, ph = width - left - right, height - top - bottom
    ns = [r["n"] for r in rows]
    log_x = len(ns) > 1 and ns[-1] / ns[0] >= 16
    fx = (lambda n: math.log2(n)) if log_x else float
    x0, x1 = fx(ns[0]), fx(ns[-1])
    span = (x1 - x0) or 1.0

    def sx(n):
        if len(ns) == 1:
            return left + pw / 2
        return left + (fx(n) - x0) / span * pw

    def sy(p):
        return top + (1.0 - p) * ph

    def polyline(points, cls, color, dash=""):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return (f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"{extra}/>')

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{escape(record["config"]["command"])} k={record["config"]["k"]}</title>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(tick)
        parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{tick:g}</text>')
    for n in ns:
        parts.append(f'<text x="{sx(n):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{n}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 10}" font-size="12" text-anchor="middle">'
                 f'n{" (log scale)" if log_x else ""}</text>')

    value_pts = []
    for r in rows:
        if r.get("exact_num") is not None:
            value_pts.append((r["n"], int(r["exact_num"]) / int(r["exact_den"])))
        elif r.get("p_hat") is not None:
            value_pts.append((r["n"], r["p_hat"]))
    if value_pts:
        parts.append(polyline([(sx(n), sy(p)) for n, p in value_pts], "estimate", "#1f77b4"))
    for r in rows:
        if r.get("ci_lo") is not None:
            x = sx(r["n"])
            parts.append(f'<line class="whisker" x1="{x:.2f}" y1="{sy(r["ci_lo"]):.2f}" '
                         f'x2="{x:.2f}" y2="{sy(r["ci_hi"]):.2f}" stroke="#1f77b4"/>')
    bounds = [(r["n"], r["bound"]) for r in rows if r.get("bound") is not None]
    if bounds:
        parts.append(polyline([(sx(n), sy(as_float(b))) for n, b in bounds], "bound", "#d62728", "6,3"))
    if record["config"]["k"] == 2:
        parts.append(polyline([(left, sy(0.5)), (left + pw, sy(0.5))], "half", "#2ca02c", "2,3"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "svg": render_svg}


def emit_outputs(record: dict, base: str | Path, formats) -> list[Path]:
    """Write ``base.<fmt>`` for each format atomically; returns the paths."""
    base = Path(base)
    written = []
    for fmt in formats:
        path = base.with_name(base.name + "." + fmt)
        _atomic_write(path, RENDERERS[fmt](record))
        written.append(path)
    return written


def stable_payload(record: dict) -> dict:
    """The record without wall-clock fields (for reproducibility comparisons)."""
    return {k: v for k, v in record.items() if k not in VOLATILE_KEYS}
