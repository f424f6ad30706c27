"""Delimited output formats and the per-run manifest."""

from __future__ import annotations

import csv
import json
import os
import time
from pathlib import Path


def resolve_outdir(outdir: str | None) -> Path:
    """--outdir flag, else NSFSEARCH_OUTDIR, else ./out."""
    path = Path(outdir or os.environ.get("NSFSEARCH_OUTDIR", "out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(v) -> str:
    """Full-precision text for a scalar (shortest round-trip repr for floats)."""
    f = float(v)
    return str(int(v)) if f.is_integer() and abs(f) < 1e15 else str(f)


def write_dat(path, xs, ys) -> Path:
    """Two whitespace-separated columns, one point per line, no header."""
    path = Path(path)
    with path.open("w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{_fmt(x)} {_fmt(y)}\n")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, default=str) + "\n")
    return path


def write_manifest(outdir: Path, command: str, config: dict) -> Path:
    """Record the fully resolved configuration so a run can be replayed."""
    manifest = {
        "command": command,
        "config": {k: config[k] for k in sorted(config)},
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    return write_json(outdir / "manifest.json", manifest)
