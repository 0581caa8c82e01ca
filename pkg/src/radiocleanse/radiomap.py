"""Radio map data model, CSV ingest/egress, and the positive-value transform.

A radio map is an m x n matrix of received-signal-strength levels (dBm, more
negative = weaker) with one position label per row.  Non-detected cells are
held as NaN in the float matrix, never as an in-band sentinel; the boolean
``detected`` mask is the authoritative partition.  File-level sentinels
(100 by convention) exist only at the CSV boundary.

All container types are frozen dataclasses whose arrays are marked
read-only, so instances can be shared freely across threads.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    EmptyFile,
    InvalidConfig,
    MalformedRow,
    MissingLabelColumn,
    NoApColumns,
    NonNumericCell,
    NoDetectedValues,
    RssOutOfBand,
)

DEFAULT_SENTINEL = 100.0
DEFAULT_BAND = (-110.0, 0.0)
DEFAULT_FLOOR_HEIGHT = 4.0  # toolkit default, metres per floor index


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.setflags(write=False)
    return out


def _fmt_num(v: float) -> str:
    """Integer-valued floats print without a decimal point so integer RSS
    round-trips bit-exactly; everything else uses repr (exact for doubles)."""
    f = float(v)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


@dataclass(frozen=True)
class MapMeta:
    """Dataset-level context carried alongside the matrix."""

    name: str = ""
    units: str = "m"
    floor_height: float = DEFAULT_FLOOR_HEIGHT
    sentinel: float = DEFAULT_SENTINEL


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV header names onto the canonical roles.

    Columns matching ``ap_pattern`` are RSS columns (in header order); the
    named label columns are looked up by exact name; anything else is
    ignored.  x and y are mandatory, the rest are used when present.
    """

    ap_pattern: str = r"^W?AP\d+$"
    x: str = "LONGITUDE"
    y: str = "LATITUDE"
    z: str = "HEIGHT"
    floor: str = "FLOOR"
    building: str = "BUILDINGID"

    def split(self, header: list[str]) -> tuple[list[str], dict[str, str]]:
        pattern = re.compile(self.ap_pattern)
        ap_cols = [c for c in header if pattern.match(c)]
        labels: dict[str, str] = {}
        for role in ("x", "y", "z", "floor", "building"):
            name = getattr(self, role)
            if name and name in header:
                labels[role] = name
        return ap_cols, labels


@dataclass(frozen=True)
class LoadProfile:
    """Loader settings read from a key=value config file."""

    schema: ColumnSchema
    sentinel: float = DEFAULT_SENTINEL
    floor_height: float = DEFAULT_FLOOR_HEIGHT


def load_profile(path: str | Path) -> LoadProfile:
    """Parse a key=value file ('#' starts a comment) into a LoadProfile.

    Recognised keys: ap_pattern, x, y, z, floor, building, sentinel,
    floor_height.  Unknown keys are an error so typos do not pass silently.
    """
    schema_kw: dict[str, str] = {}
    sentinel = DEFAULT_SENTINEL
    floor_height = DEFAULT_FLOOR_HEIGHT
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in ("ap_pattern", "x", "y", "z", "floor", "building"):
            schema_kw[key] = value
        elif key == "sentinel":
            sentinel = float(value)
        elif key == "floor_height":
            floor_height = float(value)
        else:
            raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
    return LoadProfile(ColumnSchema(**schema_kw), sentinel, floor_height)


@dataclass(frozen=True)
class Fingerprint:
    """Single-row view: RSS vector (None = not detected) plus position labels."""

    rss: tuple[float | None, ...]
    x: float
    y: float
    z: float | None = None
    floor: int | None = None
    building: int | None = None


@dataclass(frozen=True)
class RadioMap:
    """Labelled RSS matrix.

    rss holds NaN where an AP was not detected.  floor/building/z are None
    for datasets that do not carry those labels.
    """

    rss: np.ndarray
    x: np.ndarray
    y: np.ndarray
    ap_ids: tuple[str, ...]
    z: np.ndarray | None = None
    floor: np.ndarray | None = None
    building: np.ndarray | None = None
    meta: MapMeta = MapMeta()

    def __post_init__(self) -> None:
        rss = np.asarray(self.rss, dtype=np.float64)
        if rss.ndim != 2 or rss.shape[0] < 1 or rss.shape[1] < 1:
            raise InvalidConfig(f"rss must be a non-empty 2D matrix, got shape {rss.shape}")
        m, n = rss.shape
        if len(self.ap_ids) != n:
            raise InvalidConfig(f"{len(self.ap_ids)} AP ids for {n} RSS columns")
        if len(set(self.ap_ids)) != n:
            raise InvalidConfig("AP ids must be unique")
        object.__setattr__(self, "rss", _readonly(rss))
        object.__setattr__(self, "ap_ids", tuple(self.ap_ids))
        for field_name, required in (("x", True), ("y", True), ("z", False)):
            arr = getattr(self, field_name)
            if arr is None:
                if required:
                    raise InvalidConfig(f"{field_name} coordinates are required")
                continue
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != (m,):
                raise InvalidConfig(f"{field_name} must have shape ({m},), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InvalidConfig(f"{field_name} contains non-finite values")
            object.__setattr__(self, field_name, _readonly(arr))
        for field_name in ("floor", "building"):
            arr = getattr(self, field_name)
            if arr is None:
                continue
            arr = np.asarray(arr)
            if arr.shape != (m,):
                raise InvalidConfig(f"{field_name} must have shape ({m},), got {arr.shape}")
            if not np.issubdtype(arr.dtype, np.integer):
                if not np.all(arr == np.round(arr)):
                    raise NonNumericCell(f"{field_name} labels must be integers")
                arr = arr.astype(np.int64)
            object.__setattr__(self, field_name, _readonly(arr.astype(np.int64)))

    @property
    def m(self) -> int:
        return self.rss.shape[0]

    @property
    def n(self) -> int:
        return self.rss.shape[1]

    @cached_property
    def detected(self) -> np.ndarray:
        """Boolean mask of detected cells (the explicit absent-state partition)."""
        return _readonly(~np.isnan(self.rss))

    def fingerprint(self, i: int) -> Fingerprint:
        row = self.rss[i]
        return Fingerprint(
            rss=tuple(None if math.isnan(v) else float(v) for v in row),
            x=float(self.x[i]),
            y=float(self.y[i]),
            z=None if self.z is None else float(self.z[i]),
            floor=None if self.floor is None else int(self.floor[i]),
            building=None if self.building is None else int(self.building[i]),
        )

    def select_rows(self, indices) -> "RadioMap":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidConfig("cannot select an empty set of rows")
        return RadioMap(
            rss=self.rss[idx],
            x=self.x[idx],
            y=self.y[idx],
            ap_ids=self.ap_ids,
            z=None if self.z is None else self.z[idx],
            floor=None if self.floor is None else self.floor[idx],
            building=None if self.building is None else self.building[idx],
            meta=self.meta,
        )


@dataclass(frozen=True)
class PositiveMap:
    """Radio map after the positive-value transform.

    Detected levels become strictly positive reals (v - v_min + 1, clamped
    at 1), non-detected cells become exactly 0.  v_min is the reference
    learned on the training map and must be reused for test maps.
    """

    values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    ap_ids: tuple[str, ...]
    v_min: float
    z: np.ndarray | None = None
    floor: np.ndarray | None = None
    building: np.ndarray | None = None
    meta: MapMeta = MapMeta()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1:
            raise InvalidConfig("positive map must be a non-empty 2D matrix")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidConfig("positive map values must be finite and >= 0")
        object.__setattr__(self, "values", _readonly(values))
        for field_name in ("x", "y", "z"):
            arr = getattr(self, field_name)
            if arr is not None:
                object.__setattr__(self, field_name, _readonly(np.asarray(arr, dtype=np.float64)))
        for field_name in ("floor", "building"):
            arr = getattr(self, field_name)
            if arr is not None:
                object.__setattr__(self, field_name, _readonly(np.asarray(arr, dtype=np.int64)))
        object.__setattr__(self, "ap_ids", tuple(self.ap_ids))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def select_rows(self, indices) -> "PositiveMap":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidConfig("cannot select an empty set of rows")
        return PositiveMap(
            values=self.values[idx],
            x=self.x[idx],
            y=self.y[idx],
            ap_ids=self.ap_ids,
            v_min=self.v_min,
            z=None if self.z is None else self.z[idx],
            floor=None if self.floor is None else self.floor[idx],
            building=None if self.building is None else self.building[idx],
            meta=self.meta,
        )


def load_csv(
    path: str | Path,
    schema: ColumnSchema = ColumnSchema(),
    sentinel: float = DEFAULT_SENTINEL,
    band: tuple[float, float] = DEFAULT_BAND,
    name: str | None = None,
    floor_height: float = DEFAULT_FLOOR_HEIGHT,
) -> RadioMap:
    """Read a canonical radio-map CSV into a validated RadioMap.

    The file must be UTF-8, comma-separated, with a mandatory header row.
    Every cell equal to ``sentinel`` becomes non-detected; remaining cells
    must be numeric and lie inside ``band`` (inclusive).
    """
    path = Path(path)
    # strict structural pass first: pandas silently reshapes rows whose field
    # count disagrees with the header, which must be an error here
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: no header row")
        expected = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # pandas skips blank lines; match that
            if len(row) != expected:
                raise MalformedRow(
                    f"{path}: row {lineno}: expected {expected} fields, saw {len(row)}"
                )
    try:
        df = pd.read_csv(path, engine="c", encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path}: no header row") from None
    except pd.errors.ParserError as exc:
        raise MalformedRow(f"{path}: {exc}") from None
    if df.shape[0] == 0:
        raise EmptyFile(f"{path}: header only, no data rows")
    df.columns = [str(c).strip() for c in df.columns]

    ap_cols, labels = schema.split(list(df.columns))
    if not ap_cols:
        raise NoApColumns(f"{path}: no columns match AP pattern {schema.ap_pattern!r}")
    for role in ("x", "y"):
        if role not in labels:
            raise MissingLabelColumn(
                f"{path}: required column {getattr(schema, role)!r} ({role}) is missing"
            )

    def numeric(col: str) -> np.ndarray:
        series = df[col]
        if not np.issubdtype(series.dtype, np.number):
            coerced = pd.to_numeric(series, errors="coerce")
            bad = coerced.isna() & series.notna()
            if bad.any():
                i = int(np.flatnonzero(bad.to_numpy())[0])
                raise NonNumericCell(
                    f"{path}: row {i + 2}, column {col!r}: {series.iloc[i]!r} is not a number"
                )
            series = coerced
        if series.isna().any():
            i = int(np.flatnonzero(series.isna().to_numpy())[0])
            raise MalformedRow(f"{path}: row {i + 2}: missing value in column {col!r}")
        return series.to_numpy(dtype=np.float64)

    rss = np.column_stack([numeric(c) for c in ap_cols])
    detected = rss != float(sentinel)
    lo, hi = band
    out_of_band = detected & ((rss < lo) | (rss > hi))
    if out_of_band.any():
        i, j = (int(v[0]) for v in np.nonzero(out_of_band))
        raise RssOutOfBand(
            f"{path}: row {i + 2}, column {ap_cols[j]!r}: {rss[i, j]} outside [{lo}, {hi}]"
        )
    rss = np.where(detected, rss, np.nan)

    def label(role: str) -> np.ndarray | None:
        return numeric(labels[role]) if role in labels else None

    floor = label("floor")
    building = label("building")
    for role, arr in (("floor", floor), ("building", building)):
        if arr is not None and not np.all(arr == np.round(arr)):
            raise NonNumericCell(f"{path}: column {labels[role]!r} must hold integer labels")

    return RadioMap(
        rss=rss,
        x=label("x"),
        y=label("y"),
        ap_ids=tuple(ap_cols),
        z=label("z"),
        floor=None if floor is None else floor.astype(np.int64),
        building=None if building is None else building.astype(np.int64),
        meta=MapMeta(
            name=name if name is not None else path.stem,
            floor_height=floor_height,
            sentinel=float(sentinel),
        ),
    )


def save_csv(radio_map: RadioMap, path: str | Path, sentinel: float | None = None) -> None:
    """Write the canonical CSV; inverse of load_csv on cell values."""
    sent = radio_map.meta.sentinel if sentinel is None else float(sentinel)
    header = list(radio_map.ap_ids) + ["LONGITUDE", "LATITUDE"]
    if radio_map.floor is not None:
        header.append("FLOOR")
    if radio_map.building is not None:
        header.append("BUILDINGID")
    if radio_map.z is not None:
        header.append("HEIGHT")
    sent_str = _fmt_num(sent)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        det = radio_map.detected
        for i in range(radio_map.m):
            row = [
                _fmt_num(radio_map.rss[i, j]) if det[i, j] else sent_str
                for j in range(radio_map.n)
            ]
            row.append(_fmt_num(radio_map.x[i]))
            row.append(_fmt_num(radio_map.y[i]))
            if radio_map.floor is not None:
                row.append(str(int(radio_map.floor[i])))
            if radio_map.building is not None:
                row.append(str(int(radio_map.building[i])))
            if radio_map.z is not None:
                row.append(_fmt_num(radio_map.z[i]))
            writer.writerow(row)


def valid_counts(radio_map: RadioMap) -> np.ndarray:
    """Number of detected RSS values per fingerprint (length m)."""
    return radio_map.detected.sum(axis=1).astype(np.int64)


def to_positive(radio_map: RadioMap, v_min: float | None = None) -> PositiveMap:
    """Apply the order-preserving positive transform v -> v - v_min + 1.

    With v_min=None the reference is learned from this map (training use).
    Pass the training map's v_min for test maps; detected test values below
    the reference clamp to 1 so positivity is kept without refitting.
    """
    det = radio_map.detected
    if v_min is None:
        if not det.any():
            raise NoDetectedValues(f"map {radio_map.meta.name!r} has no detected values")
        v_min = float(np.nanmin(radio_map.rss))
    shifted = np.maximum(radio_map.rss - v_min + 1.0, 1.0)
    values = np.where(det, shifted, 0.0)
    return PositiveMap(
        values=values,
        x=radio_map.x,
        y=radio_map.y,
        ap_ids=radio_map.ap_ids,
        v_min=float(v_min),
        z=radio_map.z,
        floor=radio_map.floor,
        building=radio_map.building,
        meta=radio_map.meta,
    )


def ensure_z(radio_map: RadioMap, floor_height: float | None = None) -> RadioMap:
    """Fill the vertical coordinate when the dataset lacks one.

    Uses floor_index * floor_height when floor labels exist, otherwise a
    constant 0 (single-storey data), so 3D errors stay well defined.
    """
    if radio_map.z is not None:
        return radio_map
    height = radio_map.meta.floor_height if floor_height is None else float(floor_height)
    if radio_map.floor is not None:
        z = radio_map.floor.astype(np.float64) * height
    else:
        z = np.zeros(radio_map.m, dtype=np.float64)
    return replace(radio_map, z=z)
