"""Run metrics, baseline normalization, and plot-ready data products.

Hit rates are percentages in [0, 100]; positioning errors are metres;
predict_time is the wall-clock seconds of the batch prediction only (fit
and load excluded).  Timing comparisons are only meaningful within one
machine and run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidConfig, MissingGroundTruth, ZeroBaselineField
from .positioning import BatchEstimates, Positioner
from .radiomap import PositiveMap, RadioMap


@dataclass(frozen=True)
class RunMetrics:
    """Quality and cost of one evaluation run."""

    building_hit: float | None
    floor_hit: float | None
    mean_2d: float
    mean_3d: float
    predict_time: float
    train_size: int

    def to_dict(self) -> dict:
        return {
            "building_hit": self.building_hit,
            "floor_hit": self.floor_hit,
            "mean_2d": self.mean_2d,
            "mean_3d": self.mean_3d,
            "predict_time": self.predict_time,
            "train_size": self.train_size,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunMetrics":
        return cls(**{key: payload[key] for key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class NormalizedMetrics:
    """Field-wise ratios of a run against a baseline run (unitless)."""

    building_hit: float | None
    floor_hit: float | None
    mean_2d: float
    mean_3d: float
    predict_time: float
    train_size: float

    def to_dict(self) -> dict:
        return {
            "building_hit": self.building_hit,
            "floor_hit": self.floor_hit,
            "mean_2d": self.mean_2d,
            "mean_3d": self.mean_3d,
            "predict_time": self.predict_time,
            "train_size": self.train_size,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NormalizedMetrics":
        return cls(**{key: payload[key] for key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class EvalOutcome:
    """RunMetrics plus the per-sample detail needed for ECDFs and audits."""

    metrics: RunMetrics
    errors_2d: np.ndarray
    errors_3d: np.ndarray
    floor_correct: np.ndarray | None
    building_correct: np.ndarray | None
    estimates: BatchEstimates


def evaluate_full(
    positioner: Positioner, test: PositiveMap, require: Sequence[str] = ()
) -> EvalOutcome:
    """Predict the whole test map and score it against its ground truth.

    require may list "floor" and/or "building" to make a missing label an
    error instead of a silently absent hit rate.
    """
    for label in require:
        if label == "floor" and (test.floor is None or not positioner.has_floor):
            raise MissingGroundTruth("floor hit rate requested but floor labels are missing")
        elif label == "building" and (test.building is None or not positioner.has_building):
            raise MissingGroundTruth("building hit rate requested but building labels are missing")
        elif label not in ("floor", "building"):
            raise InvalidConfig(f"unknown ground-truth label {label!r}")

    batch = positioner.predict_batch(test.values)
    dx = batch.x - test.x
    dy = batch.y - test.y
    dz = batch.z - (test.z if test.z is not None else np.zeros(test.m))
    errors_2d = np.sqrt(dx * dx + dy * dy)
    errors_3d = np.sqrt(dx * dx + dy * dy + dz * dz)

    floor_correct = building_correct = None
    floor_hit = building_hit = None
    if test.floor is not None and batch.floor is not None:
        floor_correct = batch.floor == test.floor
        floor_hit = 100.0 * float(np.count_nonzero(floor_correct)) / test.m
    if test.building is not None and batch.building is not None:
        building_correct = batch.building == test.building
        building_hit = 100.0 * float(np.count_nonzero(building_correct)) / test.m

    metrics = RunMetrics(
        building_hit=building_hit,
        floor_hit=floor_hit,
        mean_2d=float(errors_2d.mean()),
        mean_3d=float(errors_3d.mean()),
        predict_time=batch.elapsed,
        train_size=positioner.train_size,
    )
    return EvalOutcome(
        metrics=metrics,
        errors_2d=errors_2d,
        errors_3d=errors_3d,
        floor_correct=floor_correct,
        building_correct=building_correct,
        estimates=batch,
    )


def evaluate(
    positioner: Positioner, test: PositiveMap, require: Sequence[str] = ()
) -> RunMetrics:
    return evaluate_full(positioner, test, require).metrics


def _ratio(run_value, baseline_value, field: str) -> float | None:
    if run_value is None or baseline_value is None:
        return None
    if baseline_value == 0:
        raise ZeroBaselineField(f"baseline {field} is zero; ratio undefined")
    return run_value / baseline_value


def normalize(run: RunMetrics, baseline: RunMetrics) -> NormalizedMetrics:
    """Field-wise run/baseline ratios; a baseline normalized by itself is 1."""
    return NormalizedMetrics(
        building_hit=_ratio(run.building_hit, baseline.building_hit, "building_hit"),
        floor_hit=_ratio(run.floor_hit, baseline.floor_hit, "floor_hit"),
        mean_2d=_ratio(run.mean_2d, baseline.mean_2d, "mean_2d"),
        mean_3d=_ratio(run.mean_3d, baseline.mean_3d, "mean_3d"),
        predict_time=_ratio(run.predict_time, baseline.predict_time, "predict_time"),
        train_size=_ratio(float(run.train_size), float(baseline.train_size), "train_size"),
    )


def ecdf(errors: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (value, P(X <= value)) steps at each distinct sample."""
    arr = np.asarray(list(errors) if not isinstance(errors, np.ndarray) else errors, dtype=float)
    if arr.size == 0:
        raise InvalidConfig("ecdf needs at least one value")
    values, counts = np.unique(arr, return_counts=True)
    cumulative = np.cumsum(counts) / arr.size
    return [(float(v), float(p)) for v, p in zip(values, cumulative)]


def fraction_below(errors: Iterable[float], threshold: float) -> float:
    """P(error < threshold) over a sample of errors."""
    arr = np.asarray(list(errors) if not isinstance(errors, np.ndarray) else errors, dtype=float)
    if arr.size == 0:
        raise InvalidConfig("need at least one value")
    return float(np.count_nonzero(arr < threshold)) / arr.size


def rss_histogram(
    radio_map: RadioMap, bins: int | None = None, sentinel: float | None = None
) -> list[tuple[float, float]]:
    """Fraction of all cells per RSS bin, with non-detected cells in their
    own final bin centred on the sentinel value.

    bins=None uses 1-dBm-wide bins over the detected range; otherwise the
    detected range is split into that many equal bins.
    """
    if bins is not None and bins < 1:
        raise InvalidConfig(f"bins must be >= 1, got {bins}")
    sent = radio_map.meta.sentinel if sentinel is None else float(sentinel)
    det = radio_map.detected
    total = det.size
    nd_fraction = float(total - np.count_nonzero(det)) / total
    detected_values = radio_map.rss[det]
    points: list[tuple[float, float]] = []
    if detected_values.size:
        lo = float(detected_values.min())
        hi = float(detected_values.max())
        if bins is None:
            edges = np.arange(np.floor(lo) - 0.5, np.ceil(hi) + 1.0, 1.0)
        elif lo == hi:
            edges = np.array([lo - 0.5, lo + 0.5])
        else:
            edges = np.linspace(lo, hi, bins + 1)
        counts, edges = np.histogram(detected_values, bins=edges)
        centers = (edges[:-1] + edges[1:]) / 2.0
        points = [(float(c), float(cnt) / total) for c, cnt in zip(centers, counts)]
    points.append((sent, nd_fraction))
    return points


@dataclass(frozen=True)
class EvaluationReport:
    """Comparison of a baseline run against an optional cleansed run."""

    dataset: str
    train_size: int
    test_size: int
    ap_count: int
    baseline: RunMetrics
    rho: float | None = None
    window_stat: str | None = None
    window: int | None = None
    removed: int = 0
    cleansed: RunMetrics | None = None
    normalized: NormalizedMetrics | None = None
    config: dict | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "ap_count": self.ap_count,
            "rho": self.rho,
            "window_stat": self.window_stat,
            "window": self.window,
            "removed": self.removed,
            "baseline": self.baseline.to_dict(),
            "cleansed": None if self.cleansed is None else self.cleansed.to_dict(),
            "normalized": None if self.normalized is None else self.normalized.to_dict(),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvaluationReport":
        return cls(
            dataset=payload["dataset"],
            train_size=payload["train_size"],
            test_size=payload["test_size"],
            ap_count=payload["ap_count"],
            rho=payload.get("rho"),
            window_stat=payload.get("window_stat"),
            window=payload.get("window"),
            removed=payload.get("removed", 0),
            baseline=RunMetrics.from_dict(payload["baseline"]),
            cleansed=(
                None
                if payload.get("cleansed") is None
                else RunMetrics.from_dict(payload["cleansed"])
            ),
            normalized=(
                None
                if payload.get("normalized") is None
                else NormalizedMetrics.from_dict(payload["normalized"])
            ),
            config=payload.get("config"),
        )
