"""
Sequence-alignment baseline: Levenshtein distances, average-linkage
hierarchical clustering and Dunn-index selection of the cluster count.
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit, prange
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from amdc.errors import ValidationError
from amdc.sequences import Sequence, SequenceSet

logger = logging.getLogger(__name__)


@njit(cache=False)
def _levenshtein_kernel(a: np.ndarray, b: np.ndarray) -> int:
    previous = np.arange(b.size + 1)
    current = np.empty(b.size + 1, dtype=previous.dtype)
    for i in range(1, a.size + 1):
        current[0] = i
        for j in range(1, b.size + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
        previous, current = current, previous
    return previous[b.size]


@njit(parallel=True, cache=False)
def _pairwise_kernel(states: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    out = np.empty(rows.size, dtype=np.int64)
    for k in prange(rows.size):
        out[k] = _levenshtein_kernel(states[rows[k]], states[cols[k]])
    return out


def _codes(value: Any) -> np.ndarray:
    if isinstance(value, Sequence):
        return np.ascontiguousarray(value.states)
    if isinstance(value, str):
        return np.array([ord(c) for c in value], dtype=np.int64)
    return np.ascontiguousarray(value, dtype=np.int64)


def levenshtein(a: Sequence | str | np.ndarray, b: Sequence | str | np.ndarray) -> int:
    """Unit-cost edit distance (insertions, deletions, substitutions)."""
    return int(_levenshtein_kernel(_codes(a), _codes(b)))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric ``n x n`` matrix of pairwise distances with zero diagonal."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(f"Distance matrix must be square, got {values.shape}")
        if not np.array_equal(values, values.T):
            raise ValidationError("Distance matrix must be symmetric")
        if (np.diag(values) != 0).any() or (values < 0).any():
            raise ValidationError("Distance matrix needs a zero diagonal and non-negative entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def condensed(self) -> np.ndarray:
        return squareform(self.values, checks=False)


def distance_matrix(data: SequenceSet) -> DistanceMatrix:
    """
    All pairwise Levenshtein distances.

    Pairs of the upper triangle are spread over numba's thread pool; the
    result does not depend on the thread count.
    """
    if data.n < 2:
        raise ValidationError(f"Need at least 2 sequences, got {data.n}")
    data.require_complete()
    states = np.ascontiguousarray(data.states)
    rows, cols = np.triu_indices(data.n, k=1)
    distances = _pairwise_kernel(states, rows, cols)
    values = np.zeros((data.n, data.n))
    values[rows, cols] = distances
    values[cols, rows] = distances
    logger.debug("Computed %d Levenshtein distances (l=%d)", rows.size, data.length)
    return DistanceMatrix(values)


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Average-linkage merge history in SciPy linkage format."""

    merges: np.ndarray

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def to_records(self) -> list[tuple[int, int, float, int]]:
        """Merges as ``(left, right, height, size)``."""
        return [(int(a), int(b), float(h), int(s)) for a, b, h, s in self.merges]


def linkage_tree(dm: DistanceMatrix) -> Dendrogram:
    return Dendrogram(linkage(dm.condensed(), method="average"))


def hierarchical(dm: DistanceMatrix, p: int, tree: Dendrogram | None = None) -> np.ndarray:
    """Cut an average-linkage (UPGMA) tree into ``p`` clusters."""
    if not 1 <= p <= dm.n:
        raise ValidationError(f"p must be in [1, {dm.n}], got {p}")
    tree = tree or linkage_tree(dm)
    return cut_tree(tree.merges, n_clusters=p).ravel().astype(np.int64)


def dunn_index(dm: DistanceMatrix, assignments: Iterable[int]) -> float:
    """
    Smallest distance between points of different clusters divided by the
    largest within-cluster diameter; ``inf`` when every cluster has diameter 0.
    """
    labels = np.asarray(assignments)
    if labels.shape != (dm.n,):
        raise ValidationError(f"Expected {dm.n} assignments, got {labels.shape}")
    if np.unique(labels).size < 2:
        raise ValidationError("Dunn index needs at least 2 clusters")
    same = labels[:, None] == labels[None, :]
    diameter = float(dm.values[same].max())
    separation = float(dm.values[~same].min())
    if diameter == 0:
        return float("inf")
    return separation / diameter


@dataclass(frozen=True, eq=False)
class HierResult:
    assignments: np.ndarray
    p: int
    dunn: dict[int, float] = field(default_factory=dict)
    tree: Dendrogram | None = None
    distances: DistanceMatrix | None = None
    degenerate: bool = False


def hier_fit(
    data: SequenceSet, p_grid: Iterable[int] | None = None, dm: DistanceMatrix | None = None
) -> HierResult:
    """
    Baseline pipeline: distance matrix once, one cut per ``p``, pick the
    largest Dunn index (ties go to smaller ``p``).
    """
    dm = dm or distance_matrix(data)
    ps = sorted(set(p_grid)) if p_grid is not None else list(range(2, min(10, dm.n) + 1))
    if not ps or ps[0] < 2 or ps[-1] > dm.n:
        raise ValidationError(f"p grid must lie in [2, {dm.n}], got {ps}")

    tree = linkage_tree(dm)
    dunn: dict[int, float] = {}
    best_p, best_value = ps[0], -1.0
    for p in ps:
        dunn[p] = dunn_index(dm, hierarchical(dm, p, tree))
        logger.debug("hierarchical p=%d Dunn=%.6g", p, dunn[p])
        if dunn[p] > best_value:
            best_p, best_value = p, dunn[p]

    degenerate = bool(dm.values.max() == 0)
    if degenerate:
        logger.warning("Degenerate data: all pairwise distances are zero")
    logger.info("Hierarchical baseline selected p=%d (Dunn=%.6g)", best_p, best_value)
    return HierResult(hierarchical(dm, best_p, tree), best_p, dunn, tree, dm, degenerate)
