"""Manifest-driven evaluation over a (patch size, max angle) grid.

Manifest: JSON Lines, one clip per line::

    {"clip_id": "c01", "subset": "16ms", "alpha_gt": 0.24,
     "frames": [{"flow_path": "flow/0000.flo", "blur_path": "blur/0000.flo"}, ...]}

Relative paths resolve against the manifest's directory.  The report has
one cell per (subset, patch size, max angle) holding the mean absolute
error of the clip estimates, plus an ``Average`` column over subsets.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EstimationFailedError, FormatError, ParameterError, ShutterAngleError
from .estimator import estimate_clip
from .field_model import load_vector_field
from .validity import EstimationParams

REPORT_SCHEMA = "shutterangle.eval/1"


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    subset: str
    alpha_gt: float | None
    frames: list[tuple[Path, Path]]


def parse_manifest_line(line: str, base: Path) -> ClipEntry:
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if not isinstance(row, dict) or "frames" not in row or "clip_id" not in row:
        raise FormatError("manifest row needs 'clip_id' and 'frames'")
    frames = []
    for item in row["frames"]:
        try:
            frames.append((base / item["flow_path"], base / item["blur_path"]))
        except (KeyError, TypeError):
            raise FormatError("each frame needs 'flow_path' and 'blur_path'") from None
    alpha = row.get("alpha_gt")
    return ClipEntry(
        clip_id=str(row["clip_id"]),
        subset=str(row.get("subset", "default")),
        alpha_gt=None if alpha is None else float(alpha),
        frames=frames,
    )


def read_manifest(path) -> list[ClipEntry]:
    path = Path(path)
    base = path.parent
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            entries.append(parse_manifest_line(line, base))
        except FormatError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return entries


_SWEEP_ITEM = re.compile(r"^\s*(D|phi)\s*=\s*([^;=]+?)\s*$", re.IGNORECASE)


def parse_sweep(text: str) -> list[EstimationParams]:
    """Parse ``"D=10,20,30;phi=3,5,7"`` into the cartesian grid, D-major."""
    values: dict[str, list[float]] = {}
    for part in text.split(";"):
        m = _SWEEP_ITEM.match(part)
        if m is None:
            raise ParameterError(f"malformed sweep item {part!r}; expected D=... or phi=...")
        key = m.group(1).lower()
        if key in values:
            raise ParameterError(f"sweep key {key!r} given twice")
        try:
            values[key] = [float(v) for v in m.group(2).split(",")]
        except ValueError:
            raise ParameterError(f"non-numeric value in sweep item {part!r}") from None
    if set(values) != {"d", "phi"}:
        raise ParameterError("sweep must define both D and phi")
    for d in values["d"]:
        if d != int(d):
            raise ParameterError(f"patch size must be an integer, got {d}")
    return [
        EstimationParams(patch_size=int(d), max_angle=phi)
        for d in values["d"]
        for phi in values["phi"]
    ]


def load_pairs(entry: ClipEntry):
    return [(load_vector_field(f), load_vector_field(b)) for f, b in entry.frames]


def evaluate_manifest(
    entries: Sequence[ClipEntry],
    grid: Sequence[EstimationParams],
    threads: int = 1,
) -> dict:
    """Estimate every clip under every parameter cell and tabulate MAE.

    Rows that cannot be read or estimated are recorded under ``failed`` and
    left out of the error statistics.
    """
    loaded = []
    failed = []
    for entry in entries:
        if entry.alpha_gt is None:
            failed.append({"clip_id": entry.clip_id, "error": "missing alpha_gt"})
            continue
        try:
            loaded.append((entry, load_pairs(entry)))
        except (OSError, ShutterAngleError) as exc:
            failed.append({"clip_id": entry.clip_id, "error": f"{type(exc).__name__}: {exc}"})

    subsets = sorted({e.subset for e, _ in loaded})
    cells = []
    for params in grid:
        clips = []
        for entry, pairs in loaded:
            record = {"clip_id": entry.clip_id, "subset": entry.subset, "alpha_gt": entry.alpha_gt}
            try:
                est = estimate_clip(pairs, params, threads=threads)
            except (EstimationFailedError, ParameterError) as exc:
                record["error"] = str(exc)
            else:
                record["alpha_hat"] = est.alpha_glob
                record["abs_error"] = abs(entry.alpha_gt - est.alpha_glob)
            clips.append(record)

        mae = {}
        for subset in subsets:
            done = [c for c in clips if c["subset"] == subset and "alpha_hat" in c]
            mae[subset] = None
            if done:
                mae[subset] = sum(c["abs_error"] for c in done) / len(done)
        scored = [v for v in mae.values() if v is not None]
        cells.append({
            "patch_size": params.patch_size,
            "max_angle": params.max_angle,
            "mae": mae,
            "average": sum(scored) / len(scored) if scored else None,
            "clips": clips,
        })

    return {
        "schema": REPORT_SCHEMA,
        "subsets": subsets,
        "grid": [p.as_dict() for p in grid],
        "cells": cells,
        "failed": failed,
        "n_clips": len(entries),
        "n_failed": len(failed),
    }


def report_to_csv(report: dict) -> str:
    """Table-style CSV: one row per (D, phi) cell, one column per subset."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["D", "phi", *report["subsets"], "Average"])

    def fmt(v):
        return "" if v is None else repr(v)

    for cell in report["cells"]:
        writer.writerow([
            cell["patch_size"],
            fmt(cell["max_angle"]),
            *(fmt(cell["mae"][s]) for s in report["subsets"]),
            fmt(cell["average"]),
        ])
    return buf.getvalue()
