"""
K-means on the SVD embedding, adjacency-matrix cluster metrics and model
selection over the embedding dimension ``h`` and cluster count ``p``.

The within-cluster metric measures how well each cluster's mean structure
(the singular vectors of its mean adjacency matrix) reproduces each member
when combined with the member's own singular values. The between-cluster
metric does the same for cluster means against the grand mean. Their
Calinski-Harabasz style ratio ``D`` selects ``(h, p)``.
"""

import logging
import string
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from sklearn.cluster import kmeans_plusplus

from amdc.adjacency import WeightVector, assemble, center
from amdc.decomposition import SvdFactors, decompose, project_onto, signed_svd
from amdc.errors import DecompositionError, ValidationError
from amdc.sequences import Alphabet, SequenceSet

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 300
DEFAULT_RESTARTS = 10
DEFAULT_MAX_H = 10
DEFAULT_P_GRID = tuple(range(2, 11))

# Metric values below this fraction of sum ||T_i||_F^2 are treated as zero
SNAP_TOLERANCE = 1e-12


class SelectionCriterion(str, Enum):
    """Index maximized when choosing ``(h, p)``."""

    AMDC = "amdc"  # D from the SVD-based within/between metrics
    STANDARD = "standard"  # CH ratio of plain matrix sums of squares


def cluster_label(k: int) -> str:
    """Display name of canonical cluster ``k``: A, B, ..., Z, then K27, K28, ..."""
    return string.ascii_uppercase[k] if k < 26 else f"K{k + 1}"


# K-means


@dataclass(frozen=True, eq=False)
class KMeansResult:
    assignments: np.ndarray
    centers: np.ndarray
    objective: float
    iterations: int
    history: tuple[float, ...] = ()


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _fill_empty(labels: np.ndarray, own: np.ndarray, p: int) -> np.ndarray:
    """Move the point farthest from its center into each empty cluster."""
    counts = np.bincount(labels, minlength=p)
    for empty in np.flatnonzero(counts == 0):
        candidates = np.where(counts[labels] > 1, own, -1.0)
        far = int(np.argmax(candidates))
        counts[labels[far]] -= 1
        labels[far] = empty
        counts[empty] = 1
        own[far] = 0.0
    return labels


def _centers_of(points: np.ndarray, labels: np.ndarray, p: int) -> np.ndarray:
    sums = np.zeros((p, points.shape[1]))
    np.add.at(sums, labels, points)
    return sums / np.bincount(labels, minlength=p)[:, None]


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int) -> KMeansResult:
    p = centers.shape[0]
    labels: np.ndarray | None = None
    history: list[float] = []
    iteration = 0
    for iteration in range(1, max_iter + 1):
        d2 = _squared_distances(points, centers)
        new = np.argmin(d2, axis=1)
        new = _fill_empty(new, d2[np.arange(len(new)), new].copy(), p)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = _centers_of(points, labels, p)
        history.append(float(((points - centers[labels]) ** 2).sum()))
        logger.debug("k-means p=%d iteration %d objective %.10g", p, iteration, history[-1])
    assert labels is not None
    return KMeansResult(labels, centers, history[-1], iteration, tuple(history))


def kmeans(
    points: np.ndarray,
    p: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int | np.random.SeedSequence = 0,
    max_iter: int = MAX_ITERATIONS,
) -> KMeansResult:
    """
    Lloyd's k-means with k-means++ seeding; best of ``restarts`` runs.

    Runs stop when assignments no longer change or after ``max_iter``
    iterations. Assignment ties go to the lowest cluster index. The result is
    deterministic given ``seed``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError(f"Points must be a 2-D array, got shape {points.shape}")
    if not 1 <= p <= points.shape[0]:
        raise ValidationError(f"p must be in [1, {points.shape[0]}], got {p}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")

    rng = np.random.default_rng(seed)
    best: KMeansResult | None = None
    for _ in range(restarts):
        state = int(rng.integers(np.iinfo(np.int32).max))
        initial, _ = kmeans_plusplus(points, n_clusters=p, random_state=state)
        result = _lloyd(points, initial, max_iter)
        if best is None or result.objective < best.objective:
            best = result
    assert best is not None
    return best


# Metrics


def _as_tensor(matrices: Any) -> np.ndarray:
    if isinstance(matrices, np.ndarray):
        tensor = matrices.astype(np.float64, copy=False)
    else:
        tensor = np.stack([getattr(t, "entries", t) for t in matrices]).astype(np.float64)
    if tensor.ndim != 3 or tensor.shape[1] != tensor.shape[2]:
        raise ValidationError(f"Expected a stack of square matrices, got shape {tensor.shape}")
    return tensor


def _partition(assignments: Iterable[int], n: int) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.shape != (n,):
        raise ValidationError(f"Expected {n} assignments, got {labels.shape}")
    if labels.min() < 0:
        raise ValidationError("Cluster indices must be non-negative")
    sizes = np.bincount(labels)
    if (sizes == 0).any():
        raise ValidationError(f"Clusters {np.flatnonzero(sizes == 0).tolist()} are empty")
    return labels, sizes


def _cluster_means(tensor: np.ndarray, labels: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    sums = np.zeros((sizes.size,) + tensor.shape[1:])
    np.add.at(sums, labels, tensor)
    return sums / sizes[:, None, None]


def _snap(value: float, scale: float) -> float:
    return 0.0 if value < SNAP_TOLERANCE * scale else value


def _reconstruct(u: np.ndarray, s: np.ndarray, vt: np.ndarray) -> np.ndarray:
    return (u * s[..., None, :]) @ vt


def within_metric(matrices: Any, assignments: Iterable[int]) -> float:
    """Sum over members of ``||T_i - U_(k) diag(S_i) V_(k)^T||_F^2``."""
    tensor = _as_tensor(matrices)
    labels, sizes = _partition(assignments, tensor.shape[0])
    u_k, _, vt_k = signed_svd(_cluster_means(tensor, labels, sizes))
    s_i = np.linalg.svd(tensor, compute_uv=False)
    residual = tensor - _reconstruct(u_k[labels], s_i, vt_k[labels])
    return _snap(float((residual**2).sum()), float((tensor**2).sum()))


def between_metric(matrices: Any, assignments: Iterable[int]) -> float:
    """Size-weighted sum of ``||T_(k) - U_(0) diag(S_(k)) V_(0)^T||_F^2``."""
    tensor = _as_tensor(matrices)
    labels, sizes = _partition(assignments, tensor.shape[0])
    means = _cluster_means(tensor, labels, sizes)
    u_0, _, vt_0 = signed_svd(tensor.mean(axis=0))
    s_k = np.linalg.svd(means, compute_uv=False)
    residual = means - _reconstruct(u_0[None], s_k, vt_0[None])
    per_cluster = (residual**2).sum(axis=(1, 2))
    return _snap(float(sizes @ per_cluster), float((tensor**2).sum()))


def _ch_ratio(between: float, within: float, n: int, p: int) -> float | None:
    if p < 2:
        return None
    if between == 0:
        return 0.0
    if within == 0 or n == p:
        return float("inf")
    return (between / (p - 1)) / (within / (n - p))


def _json_float(value: float | None) -> float | str | None:
    if value is not None and np.isinf(value):
        return "inf"
    return value


def _from_json_float(value: Any) -> float | None:
    return None if value is None else float(value)


@dataclass(frozen=True)
class MetricReport:
    """
    Cluster metrics of one partition.

    ``D`` and ``D_standard`` are ``None`` for a single cluster and ``inf``
    when the within term vanishes while the between term does not.
    """

    d_w: float
    d_b: float
    D: float | None
    wss: float
    bss: float
    D_standard: float | None

    def score(self, criterion: SelectionCriterion) -> tuple[int, float]:
        """Total order used for selection: absent < finite < infinite (by between term)."""
        value, between = (
            (self.D, self.d_b) if criterion == SelectionCriterion.AMDC else (self.D_standard, self.bss)
        )
        if value is None:
            return (-1, 0.0)
        if np.isinf(value):
            return (1, between)
        return (0, value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "d_w": self.d_w,
            "d_b": self.d_b,
            "D": _json_float(self.D),
            "wss": self.wss,
            "bss": self.bss,
            "D_standard": _json_float(self.D_standard),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricReport":
        return cls(
            d_w=float(data["d_w"]),
            d_b=float(data["d_b"]),
            D=_from_json_float(data.get("D")),
            wss=float(data["wss"]),
            bss=float(data["bss"]),
            D_standard=_from_json_float(data.get("D_standard")),
        )


def metric_D(matrices: Any, assignments: Iterable[int]) -> MetricReport:
    """
    Compute the AMDC index ``D`` together with the plain sums of squares.

    ``WSS`` and ``BSS`` are the Frobenius sums of squares of members around
    their cluster mean and of cluster means around the grand mean;
    ``D_standard`` combines them the same way ``D`` combines ``d_w`` and
    ``d_b``.
    """
    tensor = _as_tensor(matrices)
    labels, sizes = _partition(assignments, tensor.shape[0])
    n, p = tensor.shape[0], sizes.size
    scale = float((tensor**2).sum())

    d_w = within_metric(tensor, labels)
    d_b = between_metric(tensor, labels)
    means = _cluster_means(tensor, labels, sizes)
    wss = _snap(float(((tensor - means[labels]) ** 2).sum()), scale)
    bss = _snap(float(sizes @ ((means - tensor.mean(axis=0)) ** 2).sum(axis=(1, 2))), scale)
    return MetricReport(
        d_w=d_w,
        d_b=d_b,
        D=_ch_ratio(d_b, d_w, n, p),
        wss=wss,
        bss=bss,
        D_standard=_ch_ratio(bss, wss, n, p),
    )


# Model selection


@dataclass(frozen=True, eq=False)
class GridCell:
    """One evaluated ``(h, p)`` combination."""

    h: int
    p: int
    metrics: MetricReport
    objective: float
    assignments: np.ndarray
    centers: np.ndarray

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {"h": self.h, "p": self.p}
        row.update(self.metrics.to_dict())
        row["objective"] = self.objective
        return row


def select_cell(cells: Iterable[GridCell], criterion: SelectionCriterion) -> GridCell:
    """Best cell by ``criterion``; ties go to smaller ``p``, then smaller ``h``."""
    cells = list(cells)
    if not cells:
        raise ValidationError("No grid cells to select from")
    return max(cells, key=lambda c: (c.metrics.score(criterion), -c.p, -c.h))


def canonical_labels(assignments: np.ndarray) -> np.ndarray:
    """Relabel clusters by decreasing size, ties by first appearance."""
    labels = np.asarray(assignments)
    ids, first, sizes = np.unique(labels, return_index=True, return_counts=True)
    order = np.lexsort((first, -sizes))
    mapping = np.empty(ids.max() + 1, dtype=np.int64)
    mapping[ids[order]] = np.arange(ids.size)
    return mapping[labels]


def resolve_grids(
    factors: SvdFactors,
    n: int,
    h_grid: Iterable[int] | None = None,
    p_grid: Iterable[int] | None = None,
) -> tuple[list[int], list[int]]:
    """
    Validate the grids against the data.

    ``h`` values beyond the numerical rank are dropped with a warning; the
    default ``h`` grid is ``1..min(10, rank)`` and the default ``p`` grid is
    ``2..min(10, n)``.
    """
    rank = factors.rank
    if rank == 0:
        raise DecompositionError("Centered data matrix is zero; sequences carry no variation")
    if h_grid is None:
        hs = list(range(1, min(DEFAULT_MAX_H, rank) + 1))
    else:
        hs = sorted(set(h_grid))
        if not hs or hs[0] < 1:
            raise ValidationError(f"h grid must contain positive integers, got {hs}")
        dropped = [h for h in hs if h > rank]
        if dropped:
            logger.warning("Dropping h values %s above the data rank %d", dropped, rank)
            hs = [h for h in hs if h <= rank]
        if not hs:
            raise ValidationError(f"No h value in the grid is within the data rank {rank}")
    if p_grid is None:
        ps = [p for p in DEFAULT_P_GRID if p <= n]
    else:
        ps = sorted(set(p_grid))
        if not ps or ps[0] < 1:
            raise ValidationError(f"p grid must contain positive integers, got {ps}")
        if ps[-1] > n:
            raise ValidationError(f"p grid maximum {ps[-1]} exceeds the number of sequences {n}")
    if not ps:
        raise ValidationError(f"Need at least 2 sequences to cluster, got {n}")
    return hs, ps


def _fit_cell(
    tensor: np.ndarray, points: np.ndarray, h: int, p: int, restarts: int, seed: int
) -> GridCell:
    result = kmeans(points, p, restarts, np.random.SeedSequence([seed, h, p]))
    report = metric_D(tensor, result.assignments)
    logger.debug("h=%d p=%d D=%s d_w=%.6g d_b=%.6g", h, p, report.D, report.d_w, report.d_b)
    return GridCell(h, p, report, result.objective, result.assignments, result.centers)


def fit_grid(
    tensor: np.ndarray,
    factors: SvdFactors,
    h_grid: Iterable[int],
    p_grid: Iterable[int],
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[GridCell]:
    """
    Run k-means and the metrics for every ``(h, p)``.

    Cell ``(h, p)`` is seeded from ``(seed, h, p)``, so results do not depend
    on ``n_jobs`` or on completion order.
    """
    jobs = [
        delayed(_fit_cell)(tensor, factors.V[:, :h], h, p, restarts, seed)
        for h in h_grid
        for p in p_grid
    ]
    return list(Parallel(n_jobs=n_jobs, prefer="threads")(jobs))


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """
    A fitted AMDC model.

    Clusters are numbered canonically (largest first). ``basis`` and
    ``scales`` are the first ``h`` left singular vectors and singular values,
    enough to embed new sequences with :meth:`embed`.
    """

    h: int
    p: int
    assignments: np.ndarray
    centers: np.ndarray
    cluster_means: np.ndarray
    grand_mean: np.ndarray
    metrics: MetricReport
    basis: np.ndarray
    scales: np.ndarray
    alphabet: Alphabet
    length: int
    criterion: SelectionCriterion = SelectionCriterion.AMDC
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    h_grid: tuple[int, ...] = ()
    p_grid: tuple[int, ...] = ()
    weighted: bool = False
    degenerate: bool = False
    grid: tuple[GridCell, ...] = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return int(self.assignments.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.p)

    @property
    def labels(self) -> list[str]:
        return [cluster_label(k) for k in range(self.p)]

    def embed(self, data: SequenceSet, weights: WeightVector | None = None) -> np.ndarray:
        """Coordinates of (possibly new) sequences in this model's embedding."""
        if data.alphabet != self.alphabet or data.length != self.length:
            raise ValidationError("Sequences do not match the model's alphabet and length")
        return project_onto(self.basis, self.scales, center(assemble(data, weights)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "h": self.h,
            "p": self.p,
            "criterion": self.criterion.value,
            "metrics": self.metrics.to_dict(),
            "assignments": self.assignments.tolist(),
            "centers": self.centers.tolist(),
            "cluster_means": self.cluster_means.tolist(),
            "grand_mean": self.grand_mean.tolist(),
            "basis": self.basis.tolist(),
            "scales": self.scales.tolist(),
            "alphabet": list(self.alphabet.symbols),
            "length": self.length,
            "restarts": self.restarts,
            "seed": self.seed,
            "h_grid": list(self.h_grid),
            "p_grid": list(self.p_grid),
            "weighted": self.weighted,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClusterModel":
        return cls(
            h=int(data["h"]),
            p=int(data["p"]),
            assignments=np.asarray(data["assignments"], dtype=np.int64),
            centers=np.asarray(data["centers"], dtype=np.float64),
            cluster_means=np.asarray(data["cluster_means"], dtype=np.float64),
            grand_mean=np.asarray(data["grand_mean"], dtype=np.float64),
            metrics=MetricReport.from_dict(data["metrics"]),
            basis=np.asarray(data["basis"], dtype=np.float64),
            scales=np.asarray(data["scales"], dtype=np.float64),
            alphabet=Alphabet(tuple(data["alphabet"])),
            length=int(data["length"]),
            criterion=SelectionCriterion(data.get("criterion", SelectionCriterion.AMDC.value)),
            restarts=int(data.get("restarts", DEFAULT_RESTARTS)),
            seed=int(data.get("seed", 0)),
            h_grid=tuple(data.get("h_grid", ())),
            p_grid=tuple(data.get("p_grid", ())),
            weighted=bool(data.get("weighted", False)),
            degenerate=bool(data.get("degenerate", False)),
        )


def fit(
    data: SequenceSet,
    weights: WeightVector | None = None,
    h_grid: Iterable[int] | None = None,
    p_grid: Iterable[int] | None = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    criterion: SelectionCriterion = SelectionCriterion.AMDC,
    n_jobs: int = 1,
) -> ClusterModel:
    """
    Fit AMDC: adjacency matrices, centering, SVD, then k-means and metrics
    over the ``(h, p)`` grid.

    Args:
        data: Complete sequences
        weights: Optional transition weights
        h_grid: Embedding dimensions to try (default ``1..min(10, rank)``)
        p_grid: Cluster counts to try (default ``2..min(10, n)``)
        restarts: k-means++ initializations per cell
        seed: Base seed; each cell derives its own
        criterion: Index maximized for selection
        n_jobs: Worker threads for the grid

    Returns:
        The best model; ties go to smaller ``p`` then smaller ``h``
    """
    dm = assemble(data, weights)
    tensor = dm.matrices()
    factors = decompose(center(dm))
    hs, ps = resolve_grids(factors, data.n, h_grid, p_grid)
    logger.info("Fitting %d sequences over h=%s p=%s", data.n, hs, ps)

    cells = fit_grid(tensor, factors, hs, ps, restarts, seed, n_jobs)
    best = select_cell(cells, criterion)
    split = [c for c in cells if c.p > 1]
    degenerate = bool(split) and all(c.metrics.d_b == 0 for c in split)
    if degenerate:
        logger.warning("Degenerate data: no partition separates the cluster means (d_b = 0)")

    canonical = canonical_labels(best.assignments)
    order = np.empty(best.p, dtype=np.int64)
    order[canonical] = best.assignments
    sizes = np.bincount(canonical, minlength=best.p)
    logger.info("Selected h=%d p=%d (D=%s)", best.h, best.p, best.metrics.D)

    return ClusterModel(
        h=best.h,
        p=best.p,
        assignments=canonical,
        centers=best.centers[order],
        cluster_means=_cluster_means(tensor, canonical, sizes),
        grand_mean=tensor.mean(axis=0),
        metrics=best.metrics,
        basis=factors.U[:, : best.h].copy(),
        scales=factors.S[: best.h].copy(),
        alphabet=data.alphabet,
        length=data.length,
        criterion=criterion,
        restarts=restarts,
        seed=seed,
        h_grid=tuple(hs),
        p_grid=tuple(ps),
        weighted=weights is not None,
        degenerate=degenerate,
        grid=tuple(cells),
    )


def assign(model: ClusterModel, points: np.ndarray) -> np.ndarray:
    """Nearest model center by Euclidean distance; ties go to the lowest index."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != model.h:
        raise ValidationError(f"Points have {points.shape[1]} coordinates, model uses h={model.h}")
    return np.argmin(_squared_distances(points, model.centers), axis=1)
