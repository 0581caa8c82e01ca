"""Low-correlation fingerprint removal.

Pipeline: count detected values per row, derive the rank window from their
mean (floored) or max, rank each row's detected APs by descending RSS,
score every row by its best set-overlap percentage against any other row
whose ordered rank row differs, and drop rows whose best qualifying match
is zero.

The pairwise core is O(m^2) and is evaluated as a blocked boolean matmul:
shared-AP counts are small integers, exact in float32, so results are
bit-identical to the scalar definition regardless of BLAS thread count or
block size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import AllRemoved, InvalidConfig, ZeroWindow
from .radiomap import RadioMap, valid_counts

WindowStat = Literal["mean", "max"]

_BLOCK_ROWS = 512


@dataclass(frozen=True)
class CleanseConfig:
    """Threshold and window choice for a cleansing run.

    rho is the minimum match percentage on the 0-100 scale; a pair counts
    only when its match strictly exceeds rho.
    """

    rho: float = 30.0
    window_stat: WindowStat = "max"
    comparison: Literal["strict"] = "strict"

    def __post_init__(self) -> None:
        if not 0.0 <= float(self.rho) <= 100.0:
            raise InvalidConfig(f"rho must be in [0, 100], got {self.rho}")
        if self.window_stat not in ("mean", "max"):
            raise InvalidConfig(f"window_stat must be 'mean' or 'max', got {self.window_stat!r}")
        if self.comparison != "strict":
            raise InvalidConfig("only strict comparison (match > rho) is supported")


@dataclass(frozen=True)
class ApRankMatrix:
    """Per-row AP identifiers ordered by descending RSS, truncated at the window.

    Rows hold AP column indices; only detected APs appear, so sparse rows
    are shorter than the window rather than padded.  Ties on RSS break by
    ascending column index.
    """

    rows: tuple[np.ndarray, ...]
    window: int
    ap_ids: tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.rows)

    def identifiers(self, i: int) -> tuple[str, ...]:
        return tuple(self.ap_ids[j] for j in self.rows[i])


@dataclass(frozen=True)
class MatchVector:
    """Best qualifying match percentage per row; 0 means no qualifying pair."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class CleanseReport:
    """Audit record of one cleansing run (indices are zero-based)."""

    kept: np.ndarray
    removed: np.ndarray
    window: int
    rho: float
    window_stat: str
    match: MatchVector

    def to_dict(self) -> dict:
        return {
            "window": int(self.window),
            "rho": float(self.rho),
            "window_stat": self.window_stat,
            "kept": [int(i) for i in self.kept],
            "removed": [int(i) for i in self.removed],
            "match": [float(v) for v in self.match.values],
        }


def compute_window(nu: Iterable[int], stat: WindowStat) -> int:
    """Rank window from the per-row valid counts: floor(mean) or max."""
    arr = np.asarray(list(nu) if not isinstance(nu, np.ndarray) else nu, dtype=np.int64)
    if arr.size == 0:
        raise InvalidConfig("valid-count vector is empty")
    if arr.min() < 0:
        raise InvalidConfig("valid counts cannot be negative")
    if stat == "mean":
        window = int(np.floor(arr.mean()))
    elif stat == "max":
        window = int(arr.max())
    else:
        raise InvalidConfig(f"unknown window stat {stat!r}")
    if window == 0:
        raise ZeroWindow(f"window is 0 under stat {stat!r}; map has too few detected values")
    return window


def rank_aps(radio_map: RadioMap, window: int) -> ApRankMatrix:
    """Build the rank matrix: detected APs per row, strongest first."""
    if window < 1:
        raise InvalidConfig(f"window must be >= 1, got {window}")
    det = radio_map.detected
    work = np.where(det, radio_map.rss, -np.inf)
    # ascending argsort of the negated matrix = descending RSS; stable keeps
    # ascending column index on ties and pushes non-detected cells last
    order = np.argsort(-work, axis=1, kind="stable")
    nu = det.sum(axis=1)
    take = np.minimum(nu, window)
    rows = tuple(
        np.ascontiguousarray(order[i, : take[i]], dtype=np.int32) for i in range(radio_map.m)
    )
    return ApRankMatrix(rows=rows, window=int(window), ap_ids=radio_map.ap_ids)


def match_percentage(row_i: Sequence, row_l: Sequence, window: int) -> float:
    """Set-overlap percentage between two rank rows: 100 * |shared| / window."""
    if window < 1:
        raise InvalidConfig(f"window must be >= 1, got {window}")
    shared = len(set(row_i) & set(row_l))
    return 100.0 * shared / window


def best_match_vector(ranks: ApRankMatrix) -> np.ndarray:
    """Best match percentage per row against any row with a different
    ordered rank row (identical rows, including self, never qualify).

    Thresholding is left to the caller: the best qualifying match above a
    cutoff is this maximum whenever it exceeds the cutoff, else nothing
    qualifies.
    """
    m = ranks.m
    window = ranks.window
    # ordered-content group id; rows in the same group are element-wise equal
    group_of: dict[bytes, int] = {}
    gid = np.empty(m, dtype=np.int64)
    for i, row in enumerate(ranks.rows):
        gid[i] = group_of.setdefault(row.tobytes(), len(group_of))

    membership = np.zeros((m, len(ranks.ap_ids)), dtype=np.float32)
    for i, row in enumerate(ranks.rows):
        membership[i, row] = 1.0

    best = np.zeros(m, dtype=np.float64)
    for start in range(0, m, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, m)
        counts = membership[start:stop] @ membership.T  # exact small integers
        pct = counts.astype(np.float64)
        pct *= 100.0
        pct /= window
        pct[gid[start:stop, None] == gid[None, :]] = 0.0
        best[start:stop] = pct.max(axis=1)
    return best


def compute_match_vector(ranks: ApRankMatrix, config: CleanseConfig) -> MatchVector:
    """Per-row best match restricted to pairs strictly above rho."""
    best = best_match_vector(ranks)
    rho = float(config.rho)
    return MatchVector(values=np.where(best > rho, best, 0.0))


def _report_from_best(
    best: np.ndarray, window: int, config: CleanseConfig
) -> CleanseReport:
    rho = float(config.rho)
    values = np.where(best > rho, best, 0.0)
    kept = np.flatnonzero(values > 0.0)
    removed = np.flatnonzero(values == 0.0)
    return CleanseReport(
        kept=kept,
        removed=removed,
        window=int(window),
        rho=rho,
        window_stat=config.window_stat,
        match=MatchVector(values=values),
    )


def clean(radio_map: RadioMap, config: CleanseConfig) -> tuple[RadioMap, CleanseReport]:
    """Remove every fingerprint whose best qualifying match is zero.

    Returns the cleansed sub-map (original row order preserved) and the
    audit report covering all input rows.
    """
    nu = valid_counts(radio_map)
    window = compute_window(nu, config.window_stat)
    ranks = rank_aps(radio_map, window)
    best = best_match_vector(ranks)
    report = _report_from_best(best, window, config)
    if report.kept.size == 0:
        raise AllRemoved(
            f"every fingerprint has zero qualifying match at rho={config.rho}; "
            "lower the threshold"
        )
    return radio_map.select_rows(report.kept), report
