"""Report files and rendering.

All artifacts are JSON with a schema_version field and are written
atomically (temp file + rename) under a per-output-directory lock, so a
failed run never leaves a partial file and concurrent runs cannot
interleave writes.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

from filelock import FileLock, Timeout

from .errors import OutputLocked
from .metrics import EvaluationReport

SCHEMA_VERSION = 1
LOCK_NAME = ".radiocleanse.lock"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_json(path: str | Path, payload: dict) -> None:
    body = dict(payload)
    body.setdefault("schema_version", SCHEMA_VERSION)
    atomic_write_text(path, json.dumps(body, indent=2, sort_keys=False) + "\n")


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def write_points_csv(path: str | Path, points, header: tuple[str, str]) -> None:
    lines = [",".join(header)]
    lines.extend(f"{float(a)!r},{float(b)!r}" for a, b in points)
    atomic_write_text(path, "\n".join(lines) + "\n")


@contextmanager
def output_lock(out_dir: str | Path, timeout: float | None = None):
    """Exclusive lock on an output directory for the duration of a run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if timeout is None:
        timeout = float(os.environ.get("RADIOCLEANSE_LOCK_TIMEOUT", "10"))
    lock = FileLock(str(out_dir / LOCK_NAME))
    try:
        lock.acquire(timeout=timeout)
    except Timeout:
        raise OutputLocked(
            f"{out_dir}: another invocation holds the lock (timeout {timeout}s)"
        ) from None
    try:
        yield out_dir
    finally:
        lock.release()


def _cell(value, fmt: str = "{:.3f}") -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return fmt.format(value)
    return str(value)


_COLUMNS = [
    ("Dataset", lambda r: r.dataset),
    ("train", lambda r: r.train_size),
    ("test", lambda r: r.test_size),
    ("APs", lambda r: r.ap_count),
    ("rho", lambda r: None if r.rho is None else int(r.rho)),
    ("stat", lambda r: r.window_stat),
    ("zb%", lambda r: r.baseline.building_hit),
    ("zf%", lambda r: r.baseline.floor_hit),
    ("e2D", lambda r: r.baseline.mean_2d),
    ("e3D", lambda r: r.baseline.mean_3d),
    ("delta", lambda r: r.baseline.predict_time),
    ("~T", lambda r: None if r.normalized is None else r.normalized.train_size),
    ("~zb", lambda r: None if r.normalized is None else r.normalized.building_hit),
    ("~zf", lambda r: None if r.normalized is None else r.normalized.floor_hit),
    ("~e2D", lambda r: None if r.normalized is None else r.normalized.mean_2d),
    ("~e3D", lambda r: None if r.normalized is None else r.normalized.mean_3d),
    ("~delta", lambda r: None if r.normalized is None else r.normalized.predict_time),
]


def render_comparison_table(reports: list[EvaluationReport]) -> str:
    """Fixed-width comparison table: baseline absolutes plus normalized
    cleansed ratios, one dataset per row, with a mean row over the ratios."""
    rows = [[name for name, _ in _COLUMNS]]
    for report in reports:
        rows.append([_cell(getter(report)) for _, getter in _COLUMNS])

    norm_fields = ["train_size", "building_hit", "floor_hit", "mean_2d", "mean_3d", "predict_time"]
    cleansed = [r for r in reports if r.normalized is not None]
    if len(reports) > 1 and cleansed:
        avg_cells = ["Avg.", "", "", "", "", "", "", "", "", "", ""]
        for field in norm_fields:
            values = [getattr(r.normalized, field) for r in cleansed]
            values = [v for v in values if v is not None]
            avg_cells.append(_cell(sum(values) / len(values)) if values else "-")
        rows.append(avg_cells)

    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)))
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
