"""Brute-force k-NN matching over positive-representation radio maps.

The engine is a blocked linear scan (scipy cdist); no index structure, so
results are reproducible and equal to the scalar definition bit for bit.
Distance ties break by lowest training-row index.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptyTrainingSet, InvalidConfig
from .radiomap import PositiveMap

Distance = Literal["manhattan"]

_QUERY_BLOCK = 256


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1
    distance: Distance = "manhattan"

    def __post_init__(self) -> None:
        if int(self.k) < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.distance != "manhattan":
            raise InvalidConfig(f"unsupported distance {self.distance!r}")


@dataclass(frozen=True)
class PositionEstimate:
    x: float
    y: float
    z: float
    floor: int | None
    building: int | None
    query_time: float
    neighbors: tuple[int, ...]


@dataclass(frozen=True)
class BatchEstimates:
    """Vectorized prediction results for a query batch."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    floor: np.ndarray | None
    building: np.ndarray | None
    neighbors: np.ndarray  # (q, k) training-row indices, nearest first
    elapsed: float  # wall-clock seconds for the whole batch

    def __len__(self) -> int:
        return self.neighbors.shape[0]

    def estimate(self, i: int) -> PositionEstimate:
        per_query = self.elapsed / len(self) if len(self) else 0.0
        return PositionEstimate(
            x=float(self.x[i]),
            y=float(self.y[i]),
            z=float(self.z[i]),
            floor=None if self.floor is None else int(self.floor[i]),
            building=None if self.building is None else int(self.building[i]),
            query_time=per_query,
            neighbors=tuple(int(j) for j in self.neighbors[i]),
        )


def _majority(labels: np.ndarray, ordered_neighbors: np.ndarray) -> int:
    """Majority label among the neighbors; ties go to the nearer neighbor."""
    votes = Counter(int(labels[j]) for j in ordered_neighbors)
    top = max(votes.values())
    for j in ordered_neighbors:
        if votes[int(labels[j])] == top:
            return int(labels[j])
    raise AssertionError("unreachable")


class Positioner:
    """Immutable 1..k-NN matcher built by fit(); safe to share across threads."""

    def __init__(self, train: PositiveMap, config: KnnConfig):
        if train.m == 0:
            raise EmptyTrainingSet("training map has no fingerprints")
        if config.k > train.m:
            raise InvalidConfig(f"k={config.k} exceeds training size {train.m}")
        self.config = config
        self._values = train.values  # already read-only
        self._x = train.x
        self._y = train.y
        self._z = train.z if train.z is not None else np.zeros(train.m)
        self._floor = train.floor
        self._building = train.building

    @property
    def train_size(self) -> int:
        return self._values.shape[0]

    @property
    def n_features(self) -> int:
        return self._values.shape[1]

    @property
    def has_floor(self) -> bool:
        return self._floor is not None

    @property
    def has_building(self) -> bool:
        return self._building is not None

    def predict(self, query) -> PositionEstimate:
        q = np.asarray(query, dtype=np.float64).reshape(1, -1)
        if q.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"query has {q.shape[1]} values, training map has {self.n_features} APs"
            )
        batch = self.predict_batch(q)
        est = batch.estimate(0)
        return est

    def predict_batch(self, queries) -> BatchEstimates:
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if queries.ndim != 2:
            raise DimensionMismatch("query batch must be a 2D array")
        if queries.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"queries have {queries.shape[1]} values, training map has "
                f"{self.n_features} APs"
            )
        q_count = queries.shape[0]
        k = self.config.k
        neighbors = np.empty((q_count, k), dtype=np.int64)
        started = time.perf_counter()
        for start in range(0, q_count, _QUERY_BLOCK):
            stop = min(start + _QUERY_BLOCK, q_count)
            dists = cdist(queries[start:stop], self._values, metric="cityblock")
            for r in range(stop - start):
                # stable sort keeps the lower row index first on equal distance
                neighbors[start + r] = np.argsort(dists[r], kind="stable")[:k]
        x = self._x[neighbors].mean(axis=1)
        y = self._y[neighbors].mean(axis=1)
        z = self._z[neighbors].mean(axis=1)
        floor = building = None
        if self._floor is not None:
            floor = np.array([_majority(self._floor, row) for row in neighbors], dtype=np.int64)
        if self._building is not None:
            building = np.array(
                [_majority(self._building, row) for row in neighbors], dtype=np.int64
            )
        elapsed = time.perf_counter() - started
        return BatchEstimates(
            x=x, y=y, z=z, floor=floor, building=building, neighbors=neighbors, elapsed=elapsed
        )


def fit(train: PositiveMap, config: KnnConfig = KnnConfig()) -> Positioner:
    """Build a positioner over the training map; holds read-only references."""
    return Positioner(train, config)
