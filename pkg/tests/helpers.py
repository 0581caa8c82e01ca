"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from radiocleanse import MapMeta, RadioMap


def build_map(
    rows,
    n_aps: int | None = None,
    x=None,
    y=None,
    z=None,
    floor=None,
    building=None,
    name: str = "test",
):
    """Build a RadioMap from per-row cell specs.

    Each row is either a dict {ap_index: level} or a list where None marks
    a non-detected cell.  Positions default to distinct points on a line.
    """
    if n_aps is None:
        if isinstance(rows[0], dict):
            n_aps = max((max(r) for r in rows if r), default=-1) + 1
        else:
            n_aps = len(rows[0])
    m = len(rows)
    rss = np.full((m, n_aps), np.nan)
    for i, row in enumerate(rows):
        if isinstance(row, dict):
            for j, level in row.items():
                rss[i, j] = level
        else:
            for j, level in enumerate(row):
                if level is not None:
                    rss[i, j] = level
    return RadioMap(
        rss=rss,
        x=np.arange(m, dtype=float) if x is None else np.asarray(x, dtype=float),
        y=np.zeros(m) if y is None else np.asarray(y, dtype=float),
        z=None if z is None else np.asarray(z, dtype=float),
        floor=None if floor is None else np.asarray(floor),
        building=None if building is None else np.asarray(building),
        ap_ids=tuple(f"AP{j + 1:03d}" for j in range(n_aps)),
        meta=MapMeta(name=name),
    )


def random_map(rng: np.random.Generator, max_m: int = 60, max_n: int = 25,
               min_m: int = 2, integer_rss: bool = True) -> RadioMap:
    """Random map with a random detection density; integer RSS by default so
    ties exercise the rank tie-breaking."""
    m = int(rng.integers(min_m, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    density = rng.uniform(0.1, 0.9)
    det = rng.random((m, n)) < density
    if integer_rss:
        levels = rng.integers(-100, -29, size=(m, n)).astype(float)
    else:
        levels = rng.uniform(-100.0, -30.0, size=(m, n))
    rss = np.where(det, levels, np.nan)
    floor = rng.integers(0, 3, size=m)
    return RadioMap(
        rss=rss,
        x=rng.uniform(0, 100, m),
        y=rng.uniform(0, 100, m),
        floor=floor,
        ap_ids=tuple(f"AP{j + 1:03d}" for j in range(n)),
    )


def cleanse_outcome(fn, radio_map, config):
    """Run a cleansing callable and fold errors into a comparable value."""
    from radiocleanse.errors import AllRemoved, ZeroWindow

    try:
        report = fn(radio_map, config)
        if isinstance(report, tuple):
            report = report[1]
        return (
            "ok",
            report.kept.tolist(),
            report.removed.tolist(),
            report.match.values.tolist(),
            report.window,
        )
    except AllRemoved:
        return ("all-removed",)
    except ZeroWindow:
        return ("zero-window",)
