"""
Unit tests for k-means, the cluster metrics and model selection.

Tests cover:
- k-means determinism, convergence and empty-cluster repair
- d_w, d_b, D, WSS, BSS against a brute-force recomputation
- Edge cases of D (single cluster, zero between term, zero within term)
- Selection order, canonical labels and the fitted model
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import calinski_harabasz_score

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from amdc.adjacency import adjacency_tensor
from amdc.clustering import (
    ClusterModel,
    GridCell,
    MetricReport,
    SelectionCriterion,
    _fill_empty,
    assign,
    between_metric,
    canonical_labels,
    cluster_label,
    fit,
    kmeans,
    metric_D,
    select_cell,
    within_metric,
)
from amdc.errors import DecompositionError, ValidationError
from amdc.sequences import Alphabet, Sequence, SequenceSet
from amdc.simulation import bijective_accuracy

ABC = Alphabet(("A", "B", "C"))


def random_tensor(n, m=3, length=40, seed=0):
    rng = np.random.default_rng(seed)
    alphabet = Alphabet(tuple("ABCD"[:m]))
    states = rng.integers(0, m, size=(n, length))
    data = SequenceSet(alphabet, tuple(Sequence(f"s{i}", row) for i, row in enumerate(states)))
    return adjacency_tensor(data)


def brute_force(tensor, labels):
    """Straight recomputation of every metric, one matrix at a time."""
    n = len(tensor)
    clusters = sorted(set(labels.tolist()))
    p = len(clusters)
    means = {k: tensor[labels == k].mean(axis=0) for k in clusters}
    grand = tensor.mean(axis=0)

    d_w = 0.0
    for i in range(n):
        u, _, vt = np.linalg.svd(means[labels[i]])
        s = np.linalg.svd(tensor[i], compute_uv=False)
        d_w += np.linalg.norm(tensor[i] - u @ np.diag(s) @ vt) ** 2
    u0, _, v0t = np.linalg.svd(grand)
    d_b = 0.0
    for k in clusters:
        s = np.linalg.svd(means[k], compute_uv=False)
        d_b += (labels == k).sum() * np.linalg.norm(means[k] - u0 @ np.diag(s) @ v0t) ** 2
    wss = sum(np.linalg.norm(tensor[i] - means[labels[i]]) ** 2 for i in range(n))
    bss = sum((labels == k).sum() * np.linalg.norm(means[k] - grand) ** 2 for k in clusters)
    return {
        "d_w": d_w,
        "d_b": d_b,
        "D": (d_b / (p - 1)) / (d_w / (n - p)),
        "wss": wss,
        "bss": bss,
        "D_standard": (bss / (p - 1)) / (wss / (n - p)),
    }


def two_group_set(per_group=10, length=60, seed=0):
    """Group 0 is one long A run then one long B run, group 1 alternates B and C."""
    rng = np.random.default_rng(seed)
    sequences = []
    for i in range(per_group):
        cut = length // 2 + int(rng.integers(-1, 2))
        sequences.append(Sequence(f"slow{i}", [0] * cut + [1] * (length - cut), group_id=f"g{i}"))
    for i in range(per_group):
        offset = int(rng.integers(0, 2))
        states = [1 + (j + offset) % 2 for j in range(length)]
        sequences.append(Sequence(f"fast{i}", states, group_id=f"h{i}"))
    truth = np.repeat([0, 1], per_group)
    return SequenceSet(ABC, tuple(sequences)), truth


class TestKMeans:
    """Test Lloyd's algorithm with k-means++ seeding."""

    @pytest.mark.unit
    def test_separated_blobs(self):
        rng = np.random.default_rng(0)
        points = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(5, 0.1, (20, 2))])
        result = kmeans(points, 2, restarts=3, seed=1)
        assert bijective_accuracy(np.repeat([0, 1], 20), result.assignments) == 1.0
        assert result.iterations >= 1

    @pytest.mark.unit
    def test_deterministic_given_seed(self):
        points = np.random.default_rng(4).normal(size=(50, 3))
        a = kmeans(points, 4, restarts=5, seed=11)
        b = kmeans(points, 4, restarts=5, seed=11)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        assert a.objective == b.objective

    @pytest.mark.unit
    def test_objective_history_non_increasing(self):
        points = np.random.default_rng(5).normal(size=(80, 2))
        result = kmeans(points, 5, restarts=1, seed=2)
        assert all(b <= a + 1e-12 for a, b in zip(result.history, result.history[1:]))
        assert result.objective == result.history[-1]

    @pytest.mark.unit
    def test_no_empty_clusters_with_duplicates(self):
        points = np.array([[0.0], [0.0], [0.0], [10.0]])
        result = kmeans(points, 3, restarts=2, seed=0)
        assert (np.bincount(result.assignments, minlength=3) > 0).all()

    @pytest.mark.unit
    def test_fill_empty_moves_farthest_point(self):
        labels = np.array([0, 0, 0, 1])
        own = np.array([0.1, 3.0, 0.2, 9.0])
        filled = _fill_empty(labels.copy(), own.copy(), 3)
        # Point 3 is a singleton, so the farthest point of cluster 0 moves
        np.testing.assert_array_equal(filled, [0, 2, 0, 1])

    @pytest.mark.unit
    def test_invalid_arguments(self):
        points = np.zeros((3, 2))
        with pytest.raises(ValidationError):
            kmeans(points, 4)
        with pytest.raises(ValidationError):
            kmeans(points, 2, restarts=0)


class TestMetrics:
    """Test the cluster metrics against a brute-force recomputation."""

    @pytest.mark.unit
    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for trial in range(20):
            n = int(rng.integers(4, 11))
            p = int(rng.integers(2, min(4, n - 1) + 1))
            labels = rng.permutation(np.arange(n) % p)
            tensor = random_tensor(n, seed=trial)

            report = metric_D(tensor, labels)
            expected = brute_force(tensor, labels)
            for key, value in expected.items():
                assert getattr(report, key) == pytest.approx(value, rel=1e-9, abs=1e-10), key

    @pytest.mark.unit
    def test_standard_index_matches_sklearn(self):
        tensor = random_tensor(12, seed=7)
        labels = np.arange(12) % 3
        report = metric_D(tensor, labels)
        expected = calinski_harabasz_score(tensor.reshape(12, -1), labels)
        assert report.D_standard == pytest.approx(expected, rel=1e-9)

    @pytest.mark.unit
    def test_invariant_under_relabeling_and_permutation(self):
        tensor = random_tensor(9, seed=11)
        labels = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2])
        relabeled = np.array([2, 0, 1])[labels]
        order = np.random.default_rng(5).permutation(9)

        d_w, d_b = within_metric(tensor, labels), between_metric(tensor, labels)
        assert within_metric(tensor, relabeled) == pytest.approx(d_w, rel=1e-10)
        assert between_metric(tensor, relabeled) == pytest.approx(d_b, rel=1e-10)
        assert within_metric(tensor[order], labels[order]) == pytest.approx(d_w, rel=1e-10)
        assert between_metric(tensor[order], labels[order]) == pytest.approx(d_b, rel=1e-10)
        assert metric_D(tensor, relabeled).D == pytest.approx(metric_D(tensor, labels).D, rel=1e-10)

    @pytest.mark.unit
    def test_single_cluster_has_no_index(self):
        report = metric_D(random_tensor(5), np.zeros(5, dtype=int))
        assert report.D is None
        assert report.D_standard is None
        assert report.d_b == 0.0

    @pytest.mark.unit
    def test_identical_matrices_give_zero(self):
        tensor = np.repeat(random_tensor(1), 6, axis=0)
        report = metric_D(tensor, np.arange(6) % 2)
        assert report.d_b == 0.0
        assert report.D == 0.0
        assert report.D_standard == 0.0

    @pytest.mark.unit
    def test_tight_clusters_give_infinity(self):
        base = random_tensor(2, seed=3)
        tensor = np.concatenate([np.repeat(base[:1], 3, axis=0), np.repeat(base[1:], 3, axis=0)])
        report = metric_D(tensor, np.repeat([0, 1], 3))
        assert report.d_w == 0.0
        assert report.d_b > 0
        assert report.D == float("inf")
        assert report.D_standard == float("inf")

    @pytest.mark.unit
    def test_one_sequence_per_cluster_is_infinite(self):
        report = metric_D(random_tensor(3, seed=9), [0, 1, 2])
        assert report.D == float("inf")

    @pytest.mark.unit
    def test_empty_cluster_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            metric_D(random_tensor(4), [0, 0, 2, 2])

    @pytest.mark.unit
    def test_report_serialization(self):
        report = MetricReport(1.0, 2.0, float("inf"), 3.0, 4.0, None)
        data = report.to_dict()
        assert data["D"] == "inf"
        assert MetricReport.from_dict(data) == report


def cell(h, p, D, d_b=1.0):
    return GridCell(h, p, MetricReport(1.0, d_b, D, 1.0, d_b, D), 0.0, np.zeros(p), np.zeros((p, h)))


class TestSelection:
    """Test the selection order and canonical labelling."""

    @pytest.mark.unit
    def test_largest_finite_index_wins(self):
        best = select_cell([cell(1, 2, 3.0), cell(1, 3, 7.5), cell(2, 4, 5.0)], SelectionCriterion.AMDC)
        assert (best.h, best.p) == (1, 3)

    @pytest.mark.unit
    def test_infinite_beats_finite_then_between_term(self):
        cells = [cell(1, 2, 1e9), cell(1, 3, float("inf"), d_b=2.0), cell(1, 4, float("inf"), d_b=5.0)]
        assert select_cell(cells, SelectionCriterion.AMDC).p == 4

    @pytest.mark.unit
    def test_absent_index_loses(self):
        assert select_cell([cell(1, 1, None), cell(1, 2, 0.0)], SelectionCriterion.AMDC).p == 2

    @pytest.mark.unit
    def test_ties_prefer_smaller_p_then_h(self):
        cells = [cell(2, 3, 4.0), cell(1, 3, 4.0), cell(1, 2, 4.0)]
        best = select_cell(cells, SelectionCriterion.AMDC)
        assert (best.h, best.p) == (1, 2)

    @pytest.mark.unit
    def test_canonical_labels(self):
        np.testing.assert_array_equal(canonical_labels(np.array([2, 2, 0, 1, 1, 1])), [1, 1, 2, 0, 0, 0])
        np.testing.assert_array_equal(canonical_labels(np.array([5, 3, 3, 5])), [0, 1, 1, 0])

    @pytest.mark.unit
    def test_cluster_label(self):
        assert cluster_label(0) == "A"
        assert cluster_label(25) == "Z"
        assert cluster_label(26) == "K27"


class TestFit:
    """Test the full AMDC fit."""

    @pytest.mark.integration
    def test_recovers_two_groups(self):
        data, truth = two_group_set()
        model = fit(data, h_grid=[1, 2], p_grid=[2], restarts=5, seed=3)
        assert model.p == 2
        assert bijective_accuracy(truth, model.assignments) == 1.0
        np.testing.assert_array_equal(model.sizes, [10, 10])
        assert model.labels == ["A", "B"]
        assert len(model.grid) == 2

    @pytest.mark.integration
    def test_default_grid_and_canonical_order(self):
        data, _ = two_group_set(seed=1)
        model = fit(data, restarts=3, seed=0)
        assert model.p in model.p_grid
        assert model.h in model.h_grid
        assert max(model.p_grid) <= 10
        assert list(model.sizes) == sorted(model.sizes, reverse=True)
        expected = metric_D(adjacency_tensor(data), model.assignments)
        assert model.metrics.d_w == pytest.approx(expected.d_w, rel=1e-9, abs=1e-10)
        assert model.metrics.d_b == pytest.approx(expected.d_b, rel=1e-9, abs=1e-10)

    @pytest.mark.integration
    def test_threads_do_not_change_result(self):
        data, _ = two_group_set(seed=2)
        a = fit(data, h_grid=[1, 2, 3], p_grid=[2, 3, 4], restarts=3, seed=5, n_jobs=1)
        b = fit(data, h_grid=[1, 2, 3], p_grid=[2, 3, 4], restarts=3, seed=5, n_jobs=3)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        assert (a.h, a.p) == (b.h, b.p)

    @pytest.mark.integration
    def test_model_round_trip_and_assign(self):
        data, _ = two_group_set(seed=4)
        model = fit(data, h_grid=[2], p_grid=[2], restarts=3, seed=0)
        again = ClusterModel.from_dict(model.to_dict())
        assert (again.h, again.p, again.metrics) == (model.h, model.p, model.metrics)
        np.testing.assert_array_equal(assign(again, again.embed(data)), model.assignments)

    @pytest.mark.unit
    def test_h_above_rank_dropped(self, caplog):
        data, _ = two_group_set()
        model = fit(data, h_grid=[1, 50], p_grid=[2], restarts=2, seed=0)
        assert model.h_grid == (1,)
        assert "Dropping h values" in caplog.text

    @pytest.mark.unit
    def test_p_above_n_rejected(self):
        data, _ = two_group_set(per_group=2)
        with pytest.raises(ValidationError, match="exceeds"):
            fit(data, p_grid=[2, 5])

    @pytest.mark.unit
    def test_constant_data_rejected(self):
        # Every one of the nine transitions exactly once: the centered matrix is zero
        states = [0, 0, 1, 0, 2, 1, 1, 2, 2, 0]
        data = SequenceSet(ABC, tuple(Sequence(f"s{i}", states) for i in range(4)))
        with pytest.raises(DecompositionError):
            fit(data)
