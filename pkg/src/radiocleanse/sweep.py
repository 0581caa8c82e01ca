"""Threshold search over the cleansing cutoff.

Coarse percentage grid (default every 5 points) plus integer refinement
inside any gap where quality drops below the best seen so far.  The chosen
threshold maximizes the number of removed fingerprints subject to not
degrading the mean 3D error or the floor hit rate relative to the
uncleansed baseline (objective "min_error" minimizes the error instead).

Tuning runs against a held-out validation split carved from the training
map by default; tuning directly on the test set reproduces older
evaluation protocols but leaks, so it must be requested explicitly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cleanse import CleanseConfig, WindowStat, _report_from_best, best_match_vector, compute_window, rank_aps
from .errors import InvalidConfig, ZeroBaselineField
from .metrics import NormalizedMetrics, RunMetrics, evaluate, normalize
from .positioning import KnnConfig, fit
from .radiomap import RadioMap, ensure_z, to_positive, valid_counts


@dataclass(frozen=True)
class ThresholdRecord:
    rho: int
    window_stat: str
    window: int
    removed: int
    kept: int
    metrics: RunMetrics | None
    normalized: NormalizedMetrics | None
    refined: bool
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "window_stat": self.window_stat,
            "window": self.window,
            "removed": self.removed,
            "kept": self.kept,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "normalized": None if self.normalized is None else self.normalized.to_dict(),
            "refined": self.refined,
            "failure": self.failure,
        }


@dataclass(frozen=True)
class SweepResult:
    records: tuple[ThresholdRecord, ...]
    chosen_rho: int | None
    chosen_stat: str | None
    no_safe_cleansing: bool
    baseline: RunMetrics
    grid_step: int
    tune_on: str
    objective: str
    final_baseline: RunMetrics | None = None
    final_cleansed: RunMetrics | None = None
    final_normalized: NormalizedMetrics | None = None

    def chosen_record(self) -> ThresholdRecord | None:
        for rec in self.records:
            if rec.rho == self.chosen_rho and rec.window_stat == self.chosen_stat:
                return rec
        return None

    def to_dict(self) -> dict:
        return {
            "grid_step": self.grid_step,
            "tune_on": self.tune_on,
            "objective": self.objective,
            "chosen_rho": self.chosen_rho,
            "chosen_stat": self.chosen_stat,
            "no_safe_cleansing": self.no_safe_cleansing,
            "baseline": self.baseline.to_dict(),
            "records": [rec.to_dict() for rec in self.records],
            "final_baseline": None if self.final_baseline is None else self.final_baseline.to_dict(),
            "final_cleansed": None if self.final_cleansed is None else self.final_cleansed.to_dict(),
            "final_normalized": (
                None if self.final_normalized is None else self.final_normalized.to_dict()
            ),
        }


def split_train_validation(
    radio_map: RadioMap, fraction: float = 0.8, seed: int = 0
) -> tuple[RadioMap, RadioMap]:
    """Deterministic row split; both parts keep the original row order."""
    if not 0.0 < fraction < 1.0:
        raise InvalidConfig(f"fraction must be in (0, 1), got {fraction}")
    m = radio_map.m
    if m < 2:
        raise InvalidConfig("cannot split a single-row map")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_fit = min(max(1, int(round(fraction * m))), m - 1)
    fit_idx = np.sort(perm[:n_fit])
    val_idx = np.sort(perm[n_fit:])
    return radio_map.select_rows(fit_idx), radio_map.select_rows(val_idx)


def _satisfies(rec: ThresholdRecord, baseline: RunMetrics) -> bool:
    if rec.metrics is None:
        return False
    if rec.metrics.mean_3d > baseline.mean_3d:
        return False
    if baseline.floor_hit is not None and rec.metrics.floor_hit is not None:
        if rec.metrics.floor_hit < baseline.floor_hit:
            return False
    return True


def _degraded(rec: ThresholdRecord, best_eps3: float | None, best_zf: float | None) -> bool:
    if rec.metrics is None:
        return True
    if best_eps3 is not None and rec.metrics.mean_3d > best_eps3:
        return True
    if best_zf is not None and rec.metrics.floor_hit is not None:
        if rec.metrics.floor_hit < best_zf:
            return True
    return False


def sweep(
    train: RadioMap,
    test: RadioMap,
    grid_step: int = 5,
    knn: KnnConfig = KnnConfig(),
    stats: tuple[WindowStat, ...] = ("max", "mean"),
    tune_on: str = "validation",
    val_fraction: float = 0.8,
    seed: int = 0,
    objective: str = "max_removed",
    floor_height: float | None = None,
    max_workers: int | None = None,
) -> SweepResult:
    """Evaluate the threshold grid and pick the operating point.

    Returns per-threshold records (sorted by rho), the chosen rho and
    window stat, and a final comparison of the chosen configuration on the
    full training map against the test map.
    """
    if not 1 <= grid_step <= 100:
        raise InvalidConfig(f"grid_step must be in [1, 100], got {grid_step}")
    if tune_on not in ("validation", "test"):
        raise InvalidConfig(f"tune_on must be 'validation' or 'test', got {tune_on!r}")
    if objective not in ("max_removed", "min_error"):
        raise InvalidConfig(f"objective must be 'max_removed' or 'min_error', got {objective!r}")
    if not stats:
        raise InvalidConfig("need at least one window stat")

    train_z = ensure_z(train, floor_height)
    test_z = ensure_z(test, floor_height)
    if tune_on == "validation":
        fit_raw, tune_raw = split_train_validation(train_z, val_fraction, seed)
    else:
        fit_raw, tune_raw = train_z, test_z

    fit_pos = to_positive(fit_raw)
    tune_pos = to_positive(tune_raw, v_min=fit_pos.v_min)
    baseline = evaluate(fit(fit_pos, knn), tune_pos)

    nu = valid_counts(fit_raw)
    plans: dict[str, tuple[int, np.ndarray]] = {}
    for stat in stats:
        window = compute_window(nu, stat)
        plans[stat] = (window, best_match_vector(rank_aps(fit_raw, window)))

    def eval_threshold(stat: str, rho: int, refined: bool) -> ThresholdRecord:
        window, best = plans[stat]
        report = _report_from_best(best, window, CleanseConfig(rho=float(rho), window_stat=stat))
        removed, kept = int(report.removed.size), int(report.kept.size)
        if kept == 0:
            return ThresholdRecord(rho, stat, window, removed, 0, None, None, refined,
                                   failure="all fingerprints removed")
        if knn.k > kept:
            return ThresholdRecord(rho, stat, window, removed, kept, None, None, refined,
                                   failure=f"fewer than k={knn.k} fingerprints left")
        run = evaluate(fit(fit_pos.select_rows(report.kept), knn), tune_pos)
        try:
            norm = normalize(run, baseline)
        except ZeroBaselineField:
            norm = None
        return ThresholdRecord(rho, stat, window, removed, kept, run, norm, refined)

    def eval_many(jobs: list[tuple[str, int, bool]]) -> list[ThresholdRecord]:
        if max_workers is not None and max_workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                return list(pool.map(lambda j: eval_threshold(*j), jobs))
        return [eval_threshold(*job) for job in jobs]

    coarse_grid = list(range(0, 100, grid_step))
    coarse = eval_many([(stat, rho, False) for stat in stats for rho in coarse_grid])

    refine_jobs: list[tuple[str, int, bool]] = []
    for stat in stats:
        stat_recs = sorted((r for r in coarse if r.window_stat == stat), key=lambda r: r.rho)
        best_eps3: float | None = None
        best_zf: float | None = None
        prev_rho: int | None = None
        for rec in stat_recs:
            if prev_rho is not None and _degraded(rec, best_eps3, best_zf):
                refine_jobs.extend((stat, rho, True) for rho in range(prev_rho + 1, rec.rho))
            if rec.metrics is not None:
                eps = rec.metrics.mean_3d
                best_eps3 = eps if best_eps3 is None else min(best_eps3, eps)
                if rec.metrics.floor_hit is not None:
                    zf = rec.metrics.floor_hit
                    best_zf = zf if best_zf is None else max(best_zf, zf)
            prev_rho = rec.rho
    refined = eval_many(refine_jobs)

    stat_order = {stat: i for i, stat in enumerate(stats)}
    records = tuple(sorted(coarse + refined, key=lambda r: (r.rho, stat_order[r.window_stat])))

    candidates = [rec for rec in records if _satisfies(rec, baseline)]
    no_safe = not candidates
    if candidates:
        if objective == "max_removed":
            chosen = min(candidates, key=lambda r: (-r.removed, r.rho, stat_order[r.window_stat]))
        else:
            chosen = min(
                candidates,
                key=lambda r: (r.metrics.mean_3d, -r.removed, r.rho, stat_order[r.window_stat]),
            )
    else:
        # nothing is safe: fall back to the least destructive record
        chosen = min(records, key=lambda r: (r.removed, r.rho, stat_order[r.window_stat]))

    final_baseline = final_cleansed = None
    final_norm = None
    if tune_on == "test":
        final_baseline = baseline
        final_cleansed = chosen.metrics
        if final_cleansed is not None:
            try:
                final_norm = normalize(final_cleansed, final_baseline)
            except ZeroBaselineField:
                final_norm = None
    else:
        train_pos = to_positive(train_z)
        test_pos = to_positive(test_z, v_min=train_pos.v_min)
        final_baseline = evaluate(fit(train_pos, knn), test_pos)
        full_window = compute_window(valid_counts(train_z), chosen.window_stat)
        full_best = best_match_vector(rank_aps(train_z, full_window))
        full_report = _report_from_best(
            full_best, full_window, CleanseConfig(rho=float(chosen.rho), window_stat=chosen.window_stat)
        )
        if full_report.kept.size >= max(1, knn.k):
            final_cleansed = evaluate(
                fit(train_pos.select_rows(full_report.kept), knn), test_pos
            )
            try:
                final_norm = normalize(final_cleansed, final_baseline)
            except ZeroBaselineField:
                final_norm = None

    return SweepResult(
        records=records,
        chosen_rho=chosen.rho,
        chosen_stat=chosen.window_stat,
        no_safe_cleansing=no_safe,
        baseline=baseline,
        grid_step=grid_step,
        tune_on=tune_on,
        objective=objective,
        final_baseline=final_baseline,
        final_cleansed=final_cleansed,
        final_normalized=final_norm,
    )
