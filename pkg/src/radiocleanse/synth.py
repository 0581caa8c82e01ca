"""Synthetic radio maps from a log-distance path-loss model, plus a naive
reference implementation of the cleansing pass for equivalence testing.

Everything here is seeded and reproducible: the same config yields
bit-identical maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cleanse import CleanseConfig, CleanseReport, MatchVector
from .errors import AllRemoved, InvalidConfig, ZeroWindow
from .radiomap import MapMeta, RadioMap


@dataclass(frozen=True)
class SynthConfig:
    ap_count: int = 20
    area: tuple[float, float] = (50.0, 50.0)
    floors: int = 1
    grid_spacing: float = 5.0
    tx_power: float = -30.0  # dBm at the 1 m reference distance
    path_loss_exponent: float = 2.0
    shadowing_sigma: float = 0.0  # dB
    detection_threshold: float = -95.0  # dBm; weaker signals are not detected
    outlier_count: int = 0
    seed: int = 0
    floor_height: float = 3.0
    grid_origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.ap_count < 1 or self.floors < 1:
            raise InvalidConfig("ap_count and floors must be >= 1")
        if self.grid_spacing <= 0 or min(self.area) <= 0:
            raise InvalidConfig("area and grid_spacing must be positive")
        if self.shadowing_sigma < 0:
            raise InvalidConfig("shadowing_sigma must be >= 0")
        if self.outlier_count < 0:
            raise InvalidConfig("outlier_count must be >= 0")


def path_loss_rss(distance: float, tx_power: float, path_loss_exponent: float) -> float:
    """Log-distance model: tx_power - 10 * n * log10(d / 1 m), capped at 0 dBm."""
    d = max(float(distance), 1e-9)
    return min(tx_power - 10.0 * path_loss_exponent * math.log10(d), 0.0)


def _grid_points(config: SynthConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x0, y0 = config.grid_origin
    width, depth = config.area
    xs = np.arange(x0, x0 + width + 1e-9, config.grid_spacing)
    ys = np.arange(y0, y0 + depth + 1e-9, config.grid_spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    per_floor = gx.size
    x = np.tile(gx.ravel(), config.floors)
    y = np.tile(gy.ravel(), config.floors)
    floor = np.repeat(np.arange(config.floors), per_floor)
    return x, y, floor


def _model_rss(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    ap_xyz: np.ndarray,
    config: SynthConfig,
    rng: np.random.Generator | None,
) -> np.ndarray:
    dx = x[:, None] - ap_xyz[None, :, 0]
    dy = y[:, None] - ap_xyz[None, :, 1]
    dz = z[:, None] - ap_xyz[None, :, 2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    dist = np.maximum(dist, 1e-9)
    rss = config.tx_power - 10.0 * config.path_loss_exponent * np.log10(dist)
    if rng is not None and config.shadowing_sigma > 0:
        rss = rss + rng.normal(0.0, config.shadowing_sigma, size=rss.shape)
    rss = np.minimum(rss, 0.0)
    return np.where(rss >= config.detection_threshold, rss, np.nan)


def generate(config: SynthConfig) -> tuple[RadioMap, RadioMap, np.ndarray]:
    """Grid-sampled clean map, the same map with injected outliers appended,
    and the (zero-based) indices of the injected rows in the poisoned map.

    Outliers model junk crowdsourced uploads: a random subset of APs marked
    detected with uniformly random levels, at a random position.
    """
    rng = np.random.default_rng(config.seed)
    width, depth = config.area
    n = config.ap_count

    ap_x = rng.uniform(0.0, width, size=n)
    ap_y = rng.uniform(0.0, depth, size=n)
    ap_floor = rng.integers(0, config.floors, size=n)
    ap_z = ap_floor * config.floor_height + 2.0  # mounted above head height
    ap_xyz = np.column_stack([ap_x, ap_y, ap_z])

    x, y, floor = _grid_points(config)
    z = floor * config.floor_height
    shadow_rng = rng if config.shadowing_sigma > 0 else None
    rss = _model_rss(x, y, z, ap_xyz, config, shadow_rng)

    ap_ids = tuple(f"AP{j + 1:03d}" for j in range(n))
    meta = MapMeta(name=f"synth-{config.seed}", floor_height=config.floor_height)
    clean_map = RadioMap(rss=rss, x=x, y=y, ap_ids=ap_ids, z=z, floor=floor, meta=meta)

    if config.outlier_count == 0:
        return clean_map, clean_map, np.empty(0, dtype=np.int64)

    mean_nu = float(np.mean((~np.isnan(rss)).sum(axis=1)))
    # junk rows stay below typical richness: a random row detecting nearly
    # every AP would be indistinguishable from a dense genuine fingerprint
    max_size = max(1, min(n, int(math.ceil(0.75 * mean_nu))))
    out = config.outlier_count
    ox = rng.uniform(0.0, width, size=out)
    oy = rng.uniform(0.0, depth, size=out)
    ofloor = rng.integers(0, config.floors, size=out)
    oz = ofloor * config.floor_height
    orss = np.full((out, n), np.nan)
    for i in range(out):
        size = int(rng.integers(1, max_size + 1))
        aps = rng.choice(n, size=size, replace=False)
        levels = rng.uniform(config.detection_threshold, 0.0, size=size)
        orss[i, aps] = levels

    poisoned = RadioMap(
        rss=np.vstack([rss, orss]),
        x=np.concatenate([x, ox]),
        y=np.concatenate([y, oy]),
        ap_ids=ap_ids,
        z=np.concatenate([z, oz]),
        floor=np.concatenate([floor, ofloor]),
        meta=MapMeta(name=f"synth-{config.seed}-poisoned", floor_height=config.floor_height),
    )
    outlier_indices = np.arange(clean_map.m, clean_map.m + out, dtype=np.int64)
    return clean_map, poisoned, outlier_indices


def generate_queries(config: SynthConfig, count: int, seed: int | None = None) -> RadioMap:
    """Clean fingerprints at uniformly random positions, for use as a test set."""
    if count < 1:
        raise InvalidConfig("count must be >= 1")
    rng = np.random.default_rng(config.seed + 1 if seed is None else seed)
    width, depth = config.area
    # regenerate AP placement exactly as generate() does
    gen_rng = np.random.default_rng(config.seed)
    ap_x = gen_rng.uniform(0.0, width, size=config.ap_count)
    ap_y = gen_rng.uniform(0.0, depth, size=config.ap_count)
    ap_floor = gen_rng.integers(0, config.floors, size=config.ap_count)
    ap_z = ap_floor * config.floor_height + 2.0
    ap_xyz = np.column_stack([ap_x, ap_y, ap_z])

    x = rng.uniform(0.0, width, size=count)
    y = rng.uniform(0.0, depth, size=count)
    floor = rng.integers(0, config.floors, size=count)
    z = floor * config.floor_height
    shadow_rng = rng if config.shadowing_sigma > 0 else None
    rss = _model_rss(x, y, z, ap_xyz, config, shadow_rng)
    ap_ids = tuple(f"AP{j + 1:03d}" for j in range(config.ap_count))
    return RadioMap(
        rss=rss,
        x=x,
        y=y,
        ap_ids=ap_ids,
        z=z,
        floor=floor,
        meta=MapMeta(name=f"synth-{config.seed}-queries", floor_height=config.floor_height),
    )


def oracle_clean(radio_map: RadioMap, config: CleanseConfig) -> CleanseReport:
    """Naive reference cleansing: per-pair loops, no vectorization.

    Same contract as cleanse.clean (it returns the report; callers slice
    the map themselves).  Intentionally slow; use for maps with a few
    hundred rows at most.
    """
    m, n = radio_map.m, radio_map.n
    rss = radio_map.rss
    det = radio_map.detected

    nu = [int(det[i].sum()) for i in range(m)]
    if config.window_stat == "mean":
        window = math.floor(sum(nu) / m)
    else:
        window = max(nu)
    if window == 0:
        raise ZeroWindow("window is 0; map has too few detected values")

    rank_rows: list[tuple[int, ...]] = []
    for i in range(m):
        cols = [j for j in range(n) if det[i, j]]
        cols.sort(key=lambda j: (-rss[i, j], j))
        rank_rows.append(tuple(cols[:window]))
    rank_sets = [set(row) for row in rank_rows]

    rho = float(config.rho)
    match = [0.0] * m
    for i in range(m):
        best = 0.0
        for l in range(m):
            pct = 100.0 * len(rank_sets[i] & rank_sets[l]) / window
            if rank_rows[i] != rank_rows[l] and pct > best and pct > rho:
                best = pct
        match[i] = best

    values = np.asarray(match, dtype=np.float64)
    kept = np.flatnonzero(values > 0.0)
    removed = np.flatnonzero(values == 0.0)
    if kept.size == 0:
        raise AllRemoved(f"every fingerprint has zero qualifying match at rho={config.rho}")
    return CleanseReport(
        kept=kept,
        removed=removed,
        window=int(window),
        rho=rho,
        window_stat=config.window_stat,
        match=MatchVector(values=values),
    )
