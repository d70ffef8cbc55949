"""
Adjacency matrices of categorical sequences.

The adjacency matrix of a sequence counts ordered transitions between
consecutive positions: entry ``(u, v)`` is the number of positions ``j`` with
state ``u`` at ``j`` and state ``v`` at ``j + 1``. Vectorized row-major, one
column per sequence, these form the data matrix that AMDC decomposes.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any

import numpy as np

from amdc.errors import MissingDataError, ValidationError
from amdc.sequences import (
    DEFAULT_DAY_SPAN,
    DEFAULT_QUANTUM,
    MISSING,
    Alphabet,
    Sequence,
    SequenceSet,
    parse_clock_window,
)

logger = logging.getLogger(__name__)

ARROW = "→"


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """
    Transition-count matrix of one sequence.

    Entries sum to ``length - 1``. Unweighted matrices are integer-valued.
    """

    entries: np.ndarray
    length: int
    weighted: bool = False

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError(f"Adjacency matrix must be square, got shape {entries.shape}")
        if (entries < 0).any():
            raise ValidationError("Adjacency matrix entries must be non-negative")
        object.__setattr__(self, "entries", _read_only(entries))

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def total(self) -> float:
        return float(self.entries.sum())

    def vec(self) -> np.ndarray:
        """Row-major vectorization: row ``u`` occupies positions ``u*m .. u*m+m-1``."""
        return self.entries.reshape(-1).copy()

    @classmethod
    def from_vector(cls, vector: np.ndarray, length: int, weighted: bool = False) -> "AdjacencyMatrix":
        vector = np.asarray(vector, dtype=np.float64)
        m = math.isqrt(vector.size)
        if m * m != vector.size:
            raise ValidationError(f"Vector of size {vector.size} is not a vectorized square matrix")
        return cls(vector.reshape(m, m), length, weighted)

    def transition_probabilities(self) -> np.ndarray:
        """Row-normalized copy; rows without outgoing transitions stay zero."""
        sums = self.entries.sum(axis=1, keepdims=True)
        return np.divide(self.entries, sums, out=np.zeros_like(self.entries), where=sums > 0)


@dataclass(frozen=True)
class WeightWindow:
    """Relative weight for transitions whose source position lies in a clock window."""

    window: str
    relative_weight: float

    def __post_init__(self) -> None:
        parse_clock_window(self.window)
        if not self.relative_weight > 0 or not math.isfinite(self.relative_weight):
            raise ValidationError(f"Relative weight must be positive, got {self.relative_weight}")

    @property
    def bounds(self) -> tuple[int, int]:
        return parse_clock_window(self.window)

    def to_dict(self) -> dict[str, Any]:
        return {"window": self.window, "relative_weight": self.relative_weight}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "WeightWindow":
        return cls(str(data["window"]), float(data["relative_weight"]))


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Positive weights ``w_j`` for the transition from position ``j`` to ``j + 1``."""

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        if w.size == 0:
            raise ValidationError("Weight vector is empty")
        if not np.isfinite(w).all() or (w <= 0).any():
            raise ValidationError("Weights must be finite and strictly positive")
        object.__setattr__(self, "w", _read_only(w))

    def __len__(self) -> int:
        return int(self.w.size)

    @property
    def is_uniform(self) -> bool:
        return bool((self.w == self.w[0]).all())

    @classmethod
    def uniform(cls, length: int) -> "WeightVector":
        """Weights of a length-``length`` sequence that leave counts unchanged."""
        if length < 2:
            raise ValidationError(f"Sequence length must be >= 2, got {length}")
        return cls(np.ones(length - 1))

    @classmethod
    def from_windows(
        cls,
        windows: Iterable[WeightWindow],
        length: int,
        quantum: int = DEFAULT_QUANTUM,
        day_span: tuple[int, int] = DEFAULT_DAY_SPAN,
    ) -> "WeightVector":
        """
        Build weights from clock windows.

        Windows repeat every day, so multi-day sequences are weighted day by
        day. A position takes the product of the weights of all windows that
        contain its start time; positions outside every window weigh 1.
        """
        per_day = (day_span[1] - day_span[0]) // quantum
        if per_day < 1:
            raise ValidationError(f"Day span {day_span} is shorter than one {quantum}-minute quantum")
        source = np.arange(length - 1)
        minutes = day_span[0] + (source % per_day) * quantum
        w = np.ones(length - 1)
        for window in windows:
            start, end = window.bounds
            w[(minutes >= start) & (minutes < end)] *= window.relative_weight
        return cls(w)


def _transition_codes(states: np.ndarray, m: int) -> np.ndarray:
    if (states == MISSING).any():
        raise MissingDataError("Cannot build an adjacency matrix from a sequence with missing data")
    if states.max() >= m:
        raise ValidationError(f"State index {int(states.max())} out of range for {m} states")
    return states[..., :-1] * m + states[..., 1:]


def build_adjacency(seq: Sequence, m: int) -> AdjacencyMatrix:
    """Count the transitions of ``seq`` over an alphabet of size ``m``."""
    codes = _transition_codes(seq.states, m)
    counts = np.bincount(codes, minlength=m * m).astype(np.float64)
    return AdjacencyMatrix(counts.reshape(m, m), seq.length)


def build_weighted_adjacency(seq: Sequence, weights: WeightVector, m: int) -> AdjacencyMatrix:
    """
    Weighted transition counts, rescaled so the entries sum to ``length - 1``.

    Uniform weights return the plain counts unchanged.
    """
    if len(weights) != seq.length - 1:
        raise ValidationError(
            f"Weight vector has {len(weights)} entries, sequence '{seq.id}' needs {seq.length - 1}"
        )
    if weights.is_uniform:
        plain = build_adjacency(seq, m)
        return AdjacencyMatrix(plain.entries, plain.length, weighted=True)
    codes = _transition_codes(seq.states, m)
    raw = np.bincount(codes, weights=weights.w, minlength=m * m)
    scaled = raw * ((seq.length - 1) / raw.sum())
    return AdjacencyMatrix(scaled.reshape(m, m), seq.length, weighted=True)


def adjacency_tensor(data: SequenceSet, weights: WeightVector | None = None) -> np.ndarray:
    """
    Adjacency matrices of every sequence as one ``n x m x m`` array.

    Equivalent to calling :func:`build_adjacency` (or the weighted variant)
    per sequence, computed with a single ``bincount``.
    """
    m, n, length = data.alphabet.size, data.n, data.length
    codes = _transition_codes(data.states, m) + (np.arange(n) * m * m)[:, None]
    if weights is None or weights.is_uniform:
        if weights is not None and len(weights) != length - 1:
            raise ValidationError(f"Weight vector has {len(weights)} entries, need {length - 1}")
        counts = np.bincount(codes.ravel(), minlength=n * m * m).astype(np.float64)
        return counts.reshape(n, m, m)
    if len(weights) != length - 1:
        raise ValidationError(f"Weight vector has {len(weights)} entries, need {length - 1}")
    raw = np.bincount(codes.ravel(), weights=np.tile(weights.w, n), minlength=n * m * m)
    raw = raw.reshape(n, m * m)
    raw *= ((length - 1) / raw.sum(axis=1))[:, None]
    return raw.reshape(n, m, m)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    The ``m^2 x n`` matrix whose column ``i`` is the vectorized adjacency
    matrix of sequence ``i``, optionally centered.
    """

    values: np.ndarray
    length: int
    m: int
    centered: bool = False
    weighted: bool = False

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != self.m * self.m:
            raise ValidationError(
                f"Data matrix must have {self.m * self.m} rows, got shape {values.shape}"
            )
        object.__setattr__(self, "values", _read_only(values))

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    @property
    def offset(self) -> float:
        """Constant subtracted from every entry by :func:`center`."""
        return (self.length - 1) / (self.m * self.m)

    def matrices(self) -> np.ndarray:
        """Uncentered adjacency matrices as an ``n x m x m`` array."""
        values = self.values + self.offset if self.centered else self.values
        return values.T.reshape(self.n, self.m, self.m)

    def column(self, i: int) -> AdjacencyMatrix:
        return AdjacencyMatrix(self.matrices()[i], self.length, self.weighted)


def assemble(data: SequenceSet, weights: WeightVector | None = None) -> DataMatrix:
    """Stack vectorized adjacency matrices column-wise."""
    data.require_complete()
    tensor = adjacency_tensor(data, weights)
    values = tensor.reshape(data.n, -1).T
    logger.debug("Assembled %dx%d data matrix", *values.shape)
    return DataMatrix(values, data.length, data.alphabet.size, weighted=weights is not None)


def center(dm: DataMatrix) -> DataMatrix:
    """Subtract ``(l - 1) / m^2`` from every entry; column sums become zero."""
    if dm.centered:
        raise ValidationError("Data matrix is already centered")
    return DataMatrix(dm.values - dm.offset, dm.length, dm.m, centered=True, weighted=dm.weighted)


def entry_labels(alphabet: Alphabet) -> list[str]:
    """Labels ``from→to`` for the rows of a data matrix, in vectorization order."""
    return [f"{a}{ARROW}{b}" for a in alphabet.symbols for b in alphabet.symbols]
