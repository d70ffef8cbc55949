"""
Unit tests for adjacency matrices, weights and the data matrix.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from amdc.adjacency import (
    AdjacencyMatrix,
    WeightVector,
    WeightWindow,
    adjacency_tensor,
    assemble,
    build_adjacency,
    build_weighted_adjacency,
    center,
    entry_labels,
)
from amdc.errors import MissingDataError, ValidationError
from amdc.sequences import MISSING, Alphabet, Sequence, SequenceSet

AB = Alphabet(("A", "B"))


def random_set(n=6, length=12, m=3, seed=0):
    rng = np.random.default_rng(seed)
    alphabet = Alphabet(tuple("ABCDEFG"[:m]))
    states = rng.integers(0, m, size=(n, length))
    return SequenceSet(alphabet, tuple(Sequence(f"s{i}", row) for i, row in enumerate(states)))


class TestBuildAdjacency:
    """Test transition counting."""

    @pytest.mark.unit
    def test_counts(self):
        adj = build_adjacency(Sequence("x", [0, 1, 0, 1]), 2)
        np.testing.assert_array_equal(adj.entries, [[0, 2], [1, 0]])
        assert adj.total == 3
        np.testing.assert_array_equal(adj.vec(), [0, 2, 1, 0])

    @pytest.mark.unit
    def test_constant_sequence(self):
        adj = build_adjacency(Sequence("x", [1] * 5), 3)
        assert adj.entries[1, 1] == 4
        assert adj.total == 4

    @pytest.mark.unit
    def test_missing_rejected(self):
        with pytest.raises(MissingDataError):
            build_adjacency(Sequence("x", [0, MISSING, 1]), 2)

    @pytest.mark.unit
    def test_from_vector_round_trip(self):
        adj = build_adjacency(Sequence("x", [0, 0, 1, 1, 0]), 2)
        again = AdjacencyMatrix.from_vector(adj.vec(), adj.length)
        np.testing.assert_array_equal(again.entries, adj.entries)

    @pytest.mark.unit
    def test_transition_probabilities(self):
        adj = build_adjacency(Sequence("x", [0, 0, 1, 0, 0]), 2)
        probabilities = adj.transition_probabilities()
        np.testing.assert_allclose(probabilities[0], [2 / 3, 1 / 3])
        np.testing.assert_allclose(probabilities[1], [1.0, 0.0])

    @pytest.mark.unit
    def test_tensor_matches_per_sequence(self):
        data = random_set()
        tensor = adjacency_tensor(data)
        for i, seq in enumerate(data):
            np.testing.assert_array_equal(tensor[i], build_adjacency(seq, 3).entries)


class TestWeights:
    """Test weighted counts and window weights."""

    @pytest.mark.unit
    def test_uniform_weights_give_plain_counts(self):
        seq = Sequence("x", [0, 1, 0, 1])
        weighted = build_weighted_adjacency(seq, WeightVector([5.0, 5.0, 5.0]), 2)
        np.testing.assert_array_equal(weighted.entries, build_adjacency(seq, 2).entries)
        assert weighted.weighted

    @pytest.mark.unit
    def test_weighted_counts_rescaled(self):
        seq = Sequence("x", [0, 1, 0, 1])
        weighted = build_weighted_adjacency(seq, WeightVector([2.0, 1.0, 1.0]), 2)
        np.testing.assert_allclose(weighted.entries, [[0, 2.25], [0.75, 0]])
        assert weighted.total == pytest.approx(3.0)

    @pytest.mark.unit
    def test_weighted_tensor_matches_per_sequence(self):
        data = random_set(length=8)
        weights = WeightVector(np.arange(1, 8, dtype=float))
        tensor = adjacency_tensor(data, weights)
        for i, seq in enumerate(data):
            np.testing.assert_allclose(tensor[i], build_weighted_adjacency(seq, weights, 3).entries)

    @pytest.mark.unit
    def test_weight_length_checked(self):
        with pytest.raises(ValidationError, match="entries"):
            build_weighted_adjacency(Sequence("x", [0, 1, 0]), WeightVector([1.0]), 2)

    @pytest.mark.unit
    def test_weights_must_be_positive(self):
        with pytest.raises(ValidationError):
            WeightVector([1.0, 0.0])
        with pytest.raises(ValidationError):
            WeightWindow("09:00-17:00", -1.0)

    @pytest.mark.unit
    def test_windows_repeat_daily_and_multiply(self):
        windows = [WeightWindow("01:00-03:00", 2.0), WeightWindow("02:00-04:00", 3.0)]
        weights = WeightVector.from_windows(windows, length=8, quantum=60, day_span=(0, 240))
        np.testing.assert_array_equal(weights.w, [1, 2, 6, 3, 1, 2, 6])

    @pytest.mark.unit
    def test_uniform_vector(self):
        assert WeightVector.uniform(4).is_uniform
        assert len(WeightVector.uniform(4)) == 3


class TestInvariants:
    """Count invariants over many random sequences."""

    @pytest.mark.unit
    def test_random_sequences(self):
        rng = np.random.default_rng(11)
        for i in range(1000):
            m = int(rng.integers(2, 6))
            length = int(rng.integers(2, 60))
            seq = Sequence(f"s{i}", rng.integers(0, m, size=length))
            plain = build_adjacency(seq, m)

            assert plain.entries.sum() == length - 1
            occupancy = np.bincount(seq.states[:-1], minlength=m)
            np.testing.assert_array_equal(plain.entries.sum(axis=1), occupancy)

            uniform = build_weighted_adjacency(seq, WeightVector.uniform(length), m)
            assert np.array_equal(uniform.entries, plain.entries)

            w = rng.uniform(0.1, 5.0, size=length - 1)
            weighted = build_weighted_adjacency(seq, WeightVector(w), m)
            assert abs(weighted.entries.sum() - (length - 1)) <= 1e-9
            scaled = build_weighted_adjacency(seq, WeightVector(3.7 * w), m)
            np.testing.assert_allclose(scaled.entries, weighted.entries, rtol=1e-12, atol=1e-12)


class TestDataMatrix:
    """Test assembly and centering."""

    @pytest.mark.unit
    def test_assemble_shape_and_columns(self):
        data = random_set(n=5, m=3)
        dm = assemble(data)
        assert dm.values.shape == (9, 5)
        np.testing.assert_array_equal(dm.values[:, 2], build_adjacency(data[2], 3).vec())

    @pytest.mark.unit
    def test_centered_columns_sum_to_zero(self):
        dm = center(assemble(random_set()))
        np.testing.assert_allclose(dm.values.sum(axis=0), 0.0, atol=1e-12)
        assert dm.offset == pytest.approx(11 / 9)

    @pytest.mark.unit
    def test_centering_twice_rejected(self):
        dm = center(assemble(random_set()))
        with pytest.raises(ValidationError, match="already centered"):
            center(dm)

    @pytest.mark.unit
    def test_matrices_undo_centering(self):
        data = random_set()
        np.testing.assert_allclose(center(assemble(data)).matrices(), adjacency_tensor(data))

    @pytest.mark.unit
    def test_missing_data_rejected(self):
        data = SequenceSet(AB, (Sequence("x", [0, MISSING, 1]),))
        with pytest.raises(MissingDataError):
            assemble(data)

    @pytest.mark.unit
    def test_entry_labels(self):
        assert entry_labels(AB) == ["A→A", "A→B", "B→A", "B→B"]
