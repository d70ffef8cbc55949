"""
Unit tests for the Levenshtein / average-linkage baseline.

Tests cover:
- Edit distance against a full-table dynamic program
- Pairwise distance matrix
- Average-linkage merge heights against a naive implementation
- Dunn index against direct enumeration and the selection rule
"""

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from amdc.baseline import (
    DistanceMatrix,
    distance_matrix,
    dunn_index,
    hier_fit,
    hierarchical,
    levenshtein,
    linkage_tree,
)
from amdc.errors import MissingDataError, ValidationError
from amdc.sequences import MISSING, Alphabet, Sequence, SequenceSet

AB = Alphabet(("A", "B"))


def edit_distance_table(a, b):
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=int)
    table[:, 0] = np.arange(len(a) + 1)
    table[0, :] = np.arange(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i, j] = min(
                table[i - 1, j] + 1,
                table[i, j - 1] + 1,
                table[i - 1, j - 1] + (a[i - 1] != b[j - 1]),
            )
    return int(table[-1, -1])


def naive_average_linkage_heights(values):
    clusters = [[i] for i in range(len(values))]
    heights = []
    while len(clusters) > 1:
        best = None
        for x, y in itertools.combinations(range(len(clusters)), 2):
            d = values[np.ix_(clusters[x], clusters[y])].mean()
            if best is None or d < best[0]:
                best = (d, x, y)
        d, x, y = best
        heights.append(d)
        clusters[x] = clusters[x] + clusters[y]
        del clusters[y]
    return np.array(heights)


def random_set(n, length, m=3, seed=0):
    rng = np.random.default_rng(seed)
    alphabet = Alphabet(tuple("ABCD"[:m]))
    states = rng.integers(0, m, size=(n, length))
    return SequenceSet(alphabet, tuple(Sequence(f"s{i}", row) for i, row in enumerate(states)))


def two_block_set(per_group=6, length=30, seed=0):
    rng = np.random.default_rng(seed)
    sequences = []
    for group in (0, 1):
        for i in range(per_group):
            states = np.full(length, group)
            states[rng.integers(length)] = 1 - group
            sequences.append(Sequence(f"g{group}_{i}", states))
    return SequenceSet(AB, tuple(sequences)), np.repeat([0, 1], per_group)


class TestLevenshtein:
    """Test the edit distance kernel."""

    @pytest.mark.unit
    def test_known_pairs(self):
        assert levenshtein("kitten", "sitting") == 3
        assert levenshtein("flaw", "lawn") == 2
        assert levenshtein("abc", "abc") == 0
        assert levenshtein("abc", "") == 3

    @pytest.mark.unit
    def test_matches_full_table(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            a = rng.integers(0, 3, size=int(rng.integers(1, 15)))
            b = rng.integers(0, 3, size=int(rng.integers(1, 15)))
            assert levenshtein(a, b) == edit_distance_table(a.tolist(), b.tolist())

    @pytest.mark.unit
    def test_accepts_sequences(self):
        a, b = Sequence("a", [0, 1, 1, 0]), Sequence("b", [1, 1, 1, 0])
        assert levenshtein(a, b) == 1


class TestDistanceMatrix:
    """Test the pairwise distance matrix."""

    @pytest.mark.unit
    def test_matches_pairwise_calls(self):
        data = random_set(8, 20)
        dm = distance_matrix(data)
        assert dm.n == 8
        for i, j in itertools.combinations(range(8), 2):
            assert dm.values[i, j] == levenshtein(data[i], data[j])
            assert dm.values[j, i] == dm.values[i, j]
        assert (np.diag(dm.values) == 0).all()

    @pytest.mark.unit
    def test_missing_rejected(self):
        data = SequenceSet(AB, (Sequence("a", [0, MISSING]), Sequence("b", [0, 1])))
        with pytest.raises(MissingDataError):
            distance_matrix(data)

    @pytest.mark.unit
    def test_validation(self):
        with pytest.raises(ValidationError, match="symmetric"):
            DistanceMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with pytest.raises(ValidationError):
            DistanceMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]))


class TestHierarchical:
    """Test average linkage and the Dunn index."""

    @pytest.mark.unit
    def test_heights_match_naive_linkage(self):
        points = np.random.default_rng(3).normal(size=(12, 2))
        values = squareform(pdist(points))
        tree = linkage_tree(DistanceMatrix(values))
        np.testing.assert_allclose(np.sort(tree.heights), np.sort(naive_average_linkage_heights(values)))
        assert len(tree.to_records()) == 11

    @pytest.mark.unit
    def test_cut_gives_p_clusters(self):
        dm = distance_matrix(random_set(10, 15, seed=2))
        for p in (1, 2, 5, 10):
            assert np.unique(hierarchical(dm, p)).size == p

    @pytest.mark.unit
    def test_dunn_matches_enumeration(self):
        points = np.random.default_rng(5).normal(size=(9, 2))
        dm = DistanceMatrix(squareform(pdist(points)))
        labels = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
        separation = min(
            dm.values[i, j] for i, j in itertools.combinations(range(9), 2) if labels[i] != labels[j]
        )
        diameter = max(
            dm.values[i, j] for i, j in itertools.combinations(range(9), 2) if labels[i] == labels[j]
        )
        assert dunn_index(dm, labels) == pytest.approx(separation / diameter)

    @pytest.mark.unit
    def test_dunn_of_singletons_is_infinite(self):
        dm = DistanceMatrix(squareform(pdist(np.arange(3.0)[:, None])))
        assert dunn_index(dm, [0, 1, 2]) == float("inf")
        with pytest.raises(ValidationError):
            dunn_index(dm, [0, 0, 0])

    @pytest.mark.integration
    def test_hier_fit_selects_two_blocks(self):
        data, truth = two_block_set()
        result = hier_fit(data, range(2, 6))
        assert result.p == 2
        assert set(result.dunn) == {2, 3, 4, 5}
        assert not result.degenerate
        assert (result.assignments[:6] == result.assignments[0]).all()
        assert (result.assignments[6:] != result.assignments[0]).all()

    @pytest.mark.unit
    def test_identical_sequences_are_degenerate(self):
        data = SequenceSet(AB, tuple(Sequence(f"s{i}", [0, 1, 1, 0]) for i in range(4)))
        result = hier_fit(data, [2, 3])
        assert result.degenerate
        assert result.p == 2

    @pytest.mark.unit
    def test_grid_bounds(self):
        data, _ = two_block_set(per_group=2)
        with pytest.raises(ValidationError):
            hier_fit(data, [1, 2])
        with pytest.raises(ValidationError):
            hier_fit(data, [2, 9])
