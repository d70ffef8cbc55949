"""
Bootstrap cluster stability.

Each replicate resamples groups (individuals) with replacement, then
sequences within each sampled group, refits AMDC on the resample and
assigns the original sequences to the replicate's cluster centers. An
observation's stability is the mean Jaccard similarity between its
co-cluster set in the reference partition and in each replicate.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from amdc.adjacency import WeightVector
from amdc.clustering import ClusterModel, assign, cluster_label, fit
from amdc.errors import ValidationError
from amdc.sequences import SequenceSet

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 100


def _resample(groups: list[list[int]], rng: np.random.Generator) -> np.ndarray:
    chosen = rng.integers(len(groups), size=len(groups))
    parts = [rng.choice(groups[g], size=len(groups[g]), replace=True) for g in chosen]
    return np.concatenate(parts)


def _group_members(data: SequenceSet) -> list[list[int]]:
    """Indices per group in sorted group order; empty group ids stand alone."""
    members: dict[str, list[int]] = defaultdict(list)
    for i, seq in enumerate(data):
        members[seq.group_id or f"\0{i}"].append(i)
    return [members[g] for g in sorted(members)]


@dataclass
class BootstrapResult:
    partitions: list[np.ndarray] = field(default_factory=list)
    selected_p: list[int] = field(default_factory=list)
    failures: int = 0


def _replicate(
    data: SequenceSet,
    groups: list[list[int]],
    model: ClusterModel,
    weights: WeightVector | None,
    seed: int,
    b: int,
) -> tuple[np.ndarray, int] | None:
    rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
    sample = data.subset(_resample(groups, rng))
    try:
        refit = fit(
            sample,
            weights,
            h_grid=model.h_grid or None,
            p_grid=model.p_grid or None,
            restarts=model.restarts,
            seed=model.seed,
            criterion=model.criterion,
        )
        return assign(refit, refit.embed(data, weights)), refit.p
    except Exception as e:
        logger.warning("Bootstrap replicate %d failed: %s", b, e)
        return None


def bootstrap_partitions(
    data: SequenceSet,
    model: ClusterModel,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    weights: WeightVector | None = None,
    n_jobs: int = 1,
) -> BootstrapResult:
    """
    Partitions of the original data induced by refitting on ``B`` two-stage
    bootstrap resamples.

    Refits reuse the model's grids, restarts, seed and criterion but choose
    their own ``(h, p)``. Replicate ``b`` resamples with seed ``(seed, b)``.
    """
    if B < 1:
        raise ValidationError(f"B must be >= 1, got {B}")
    groups = _group_members(data)
    logger.info("Bootstrap: %d replicate(s) over %d group(s)", B, len(groups))
    outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_replicate)(data, groups, model, weights, seed, b) for b in range(B)
    )
    result = BootstrapResult()
    for outcome in outcomes:
        if outcome is None:
            result.failures += 1
        else:
            result.partitions.append(outcome[0])
            result.selected_p.append(outcome[1])
    return result


def _co_cluster(labels: np.ndarray) -> np.ndarray:
    mask = labels[:, None] == labels[None, :]
    np.fill_diagonal(mask, False)
    return mask


@dataclass
class StabilityReport:
    """Per-observation stability scores and their summaries."""

    scores: np.ndarray
    reference: np.ndarray
    replicates: int
    failures: int = 0
    selected_p: list[int] = field(default_factory=list)
    reference_p: int | None = None

    @property
    def overall_mean(self) -> float:
        return float(self.scores.mean())

    @property
    def overall_median(self) -> float:
        return float(np.median(self.scores))

    def per_cluster(self) -> dict[int, dict[str, float]]:
        return {
            int(k): {
                "mean": float(self.scores[self.reference == k].mean()),
                "median": float(np.median(self.scores[self.reference == k])),
                "size": int((self.reference == k).sum()),
            }
            for k in np.unique(self.reference)
        }

    def p_distribution(self) -> dict[int, int]:
        unique, counts = np.unique(self.selected_p, return_counts=True)
        return {int(p): int(c) for p, c in zip(unique, counts)}

    @property
    def within_one(self) -> float | None:
        """Share of replicates selecting within one cluster of the reference count."""
        if self.reference_p is None or not self.selected_p:
            return None
        return float(np.mean(np.abs(np.asarray(self.selected_p) - self.reference_p) <= 1))

    def to_frame(self, ids: list[str]) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": ids,
                "cluster": [cluster_label(int(k)) for k in self.reference],
                "stability": self.scores,
            }
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "replicates": self.replicates,
            "failures": self.failures,
            "overall_mean": self.overall_mean,
            "overall_median": self.overall_median,
            "clusters": {cluster_label(k): v for k, v in self.per_cluster().items()},
            "reference_p": self.reference_p,
            "selected_p_distribution": {str(p): c for p, c in self.p_distribution().items()},
            "within_one": self.within_one,
        }


def stability_scores(
    reference: Any,
    partitions: list[Any],
    selected_p: list[int] | None = None,
    reference_p: int | None = None,
    failures: int = 0,
) -> StabilityReport:
    """
    Mean Jaccard similarity of each observation's co-cluster sets.

    For observation ``i`` and replicate ``b`` the score is
    ``|co_ref(i) & co_b(i)| / |co_ref(i) | co_b(i)|``, where ``co`` is the set
    of other observations in the same cluster; an empty union scores 1.
    """
    reference = np.asarray(reference)
    if not partitions:
        raise ValidationError("No partitions to score (all replicates failed?)")
    ref_mask = _co_cluster(reference)
    total = np.zeros(reference.size)
    for partition in partitions:
        labels = np.asarray(partition)
        if labels.shape != reference.shape:
            raise ValidationError("Partitions must cover the same observations as the reference")
        mask = _co_cluster(labels)
        shared = (ref_mask & mask).sum(axis=1)
        union = (ref_mask | mask).sum(axis=1)
        total += np.where(union == 0, 1.0, shared / np.maximum(union, 1))
    return StabilityReport(
        scores=total / len(partitions),
        reference=reference,
        replicates=len(partitions),
        failures=failures,
        selected_p=list(selected_p or []),
        reference_p=reference_p,
    )
