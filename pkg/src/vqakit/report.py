"""Report assembly and emission.

Reports are plain dicts with a fixed key order, so identical inputs and
configuration produce byte-identical JSON (and CSV). The optional timestamp
is the only non-deterministic field and is omitted when disabled.
Human-readable console summaries round to 4 decimals; serialized reports
keep full precision.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
from pathlib import Path

from . import __version__

__all__ = ["build_report", "render_report", "write_report", "flatten", "fmt4"]


def build_report(command: str, config: dict, sections: dict, timestamp: bool = True) -> dict:
    report = {
        "tool": "vqakit",
        "version": __version__,
        "command": command,
        "config": config,
    }
    if timestamp:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    report["sections"] = sections
    return report


def flatten(node, prefix: str = "") -> list[tuple[str, object]]:
    """Depth-first (key-path, scalar) pairs of a nested report."""
    rows: list[tuple[str, object]] = []
    if isinstance(node, dict):
        for key, value in node.items():
            rows.extend(flatten(value, f"{prefix}{key}."))
    elif isinstance(node, (list, tuple)):
        for i, value in enumerate(node):
            rows.extend(flatten(value, f"{prefix}{i}."))
    else:
        rows.append((prefix[:-1], node))
    return rows


def render_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in flatten(report):
            writer.writerow([key, json.dumps(value, ensure_ascii=False)])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report: dict, out: str | Path | None, fmt: str = "json") -> str:
    """Write to `out` (or return for stdout emission); returns the rendering."""
    rendered = render_report(report, fmt)
    if out is not None:
        Path(out).write_text(rendered, encoding="utf-8")
    return rendered


def fmt4(value) -> str:
    """4-decimal display form used in console summaries."""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)
