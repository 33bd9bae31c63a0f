"""Re-identification ranking metrics: CMC at selected ranks and mAP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..config.constants import CMC_RANKS
from ..exceptions import ContractError, DimensionError


@dataclass(frozen=True)
class RetrievalProtocol:
    """How a gallery is filtered per query.

    Attributes:
        exclude_same_camera: Drop gallery entries sharing both identity and camera
            with the query (only when camera ids are supplied).
        shared_split: The gallery contains the query images themselves; each
            query's own entry is always removed.
    """

    exclude_same_camera: bool = True
    shared_split: bool = False


@dataclass
class RankingResult:
    """Per-query rankings and the aggregated scores.

    ``orders[i]`` is the full gallery ordering for query i (ascending distance,
    ties by gallery index); ``average_precisions`` and ``rank1_hits`` hold one
    entry per evaluated query.
    """

    orders: List[np.ndarray]
    average_precisions: np.ndarray
    rank1_hits: np.ndarray
    cmc: Dict[int, float] = field(default_factory=dict)
    excluded_queries: int = 0

    @property
    def mean_ap(self) -> float:
        return float(self.average_precisions.mean()) if self.average_precisions.size else 0.0

    @property
    def rank1(self) -> float:
        return float(self.rank1_hits.mean()) if self.rank1_hits.size else 0.0

    def summary(self) -> Dict[str, float]:
        out = {f"rank{k}": v for k, v in self.cmc.items()}
        out["mAP"] = self.mean_ap
        out["evaluated_queries"] = float(self.rank1_hits.size)
        out["excluded_queries"] = float(self.excluded_queries)
        return out


def pairwise_distance(q: np.ndarray, g: np.ndarray) -> float:
    """Squared Euclidean distance (2 − 2·cos for unit vectors)."""
    q = np.asarray(q, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if q.shape != g.shape:
        raise DimensionError("feature vectors differ in length", shapes=(q.shape, g.shape))
    diff = q - g
    return float(diff @ diff)


def distance_matrix(queries: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    if queries.shape[1] != gallery.shape[1]:
        raise DimensionError(
            "query and gallery features differ in length", shapes=(queries.shape, gallery.shape)
        )
    return cdist(queries, gallery, metric="sqeuclidean")


def average_precision(matches: np.ndarray) -> float:
    """Staircase AP: mean precision at each relevant position of a ranked list."""
    hits = np.flatnonzero(matches)
    if hits.size == 0:
        return 0.0
    precision_at_hits = np.arange(1, hits.size + 1) / (hits + 1)
    return float(precision_at_hits.mean())


def cmc_map(
    query_features: np.ndarray,
    gallery_features: np.ndarray,
    query_pids: Sequence[int],
    gallery_pids: Sequence[int],
    protocol: RetrievalProtocol = RetrievalProtocol(),
    query_cameras: Optional[Sequence[int]] = None,
    gallery_cameras: Optional[Sequence[int]] = None,
    self_indices: Optional[Sequence[int]] = None,
    ranks: Sequence[int] = CMC_RANKS,
) -> RankingResult:
    """Rank the gallery for every query and score it.

    Queries whose identity has no valid gallery entry are skipped and counted in
    ``excluded_queries``.

    Args:
        self_indices: Gallery position of each query's own image; required under
            ``protocol.shared_split``.

    Raises:
        ContractError: If the gallery is empty, or a shared split lacks ``self_indices``.
    """
    queries = np.atleast_2d(np.asarray(query_features, dtype=np.float64))
    gallery = np.atleast_2d(np.asarray(gallery_features, dtype=np.float64))
    if gallery.shape[0] == 0 or len(gallery_pids) == 0:
        raise ContractError("gallery is empty")
    if protocol.shared_split and self_indices is None:
        raise ContractError("shared split needs each query's gallery position")

    query_pids = np.asarray(query_pids)
    gallery_pids = np.asarray(gallery_pids)
    use_cameras = (
        protocol.exclude_same_camera and query_cameras is not None and gallery_cameras is not None
    )
    if use_cameras:
        query_cameras = np.asarray(query_cameras)
        gallery_cameras = np.asarray(gallery_cameras)

    distances = distance_matrix(queries, gallery)
    orders: List[np.ndarray] = []
    aps: List[float] = []
    rank1: List[bool] = []
    cmc_hits = {k: 0 for k in ranks}
    excluded = 0

    for i in range(queries.shape[0]):
        order = np.argsort(distances[i], kind="stable")
        orders.append(order)
        keep = np.ones(order.size, dtype=bool)
        same_pid = gallery_pids[order] == query_pids[i]
        if use_cameras:
            keep &= ~(same_pid & (gallery_cameras[order] == query_cameras[i]))
        if protocol.shared_split:
            keep &= order != self_indices[i]
        matches = same_pid[keep]
        if not matches.any():
            excluded += 1
            continue
        aps.append(average_precision(matches))
        rank1.append(bool(matches[0]))
        for k in ranks:
            cmc_hits[k] += int(matches[:k].any())

    evaluated = len(aps)
    cmc = {k: (cmc_hits[k] / evaluated if evaluated else 0.0) for k in ranks}
    return RankingResult(
        orders=orders,
        average_precisions=np.array(aps),
        rank1_hits=np.array(rank1, dtype=bool),
        cmc=cmc,
        excluded_queries=excluded,
    )
