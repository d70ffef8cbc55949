"""
Core sequence model for amdc.

Alphabets, sequences, raw activity episodes and sequence sets, plus the
dataset preparation steps that turn episode logs into fixed-length day
sequences: majority-rule aggregation, state collapsing, filtering and
day-to-week concatenation.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from functools import cached_property
from typing import Any

import numpy as np

from amdc.errors import EmptyDatasetError, InputError, MissingDataError, ValidationError

logger = logging.getLogger(__name__)

# Index stored at positions with no episode coverage
MISSING = -1
MISSING_LABEL = "*"

DEFAULT_QUANTUM = 5
DEFAULT_DAY_SPAN = (0, 24 * 60)

WEEKDAY_NAMES = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")
WORKWEEK = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")


def parse_clock(value: str) -> int:
    """Parse ``HH:MM`` into minutes after midnight (``24:00`` is allowed)."""
    try:
        hours, minutes = value.strip().split(":")
        total = int(hours) * 60 + int(minutes)
    except ValueError:
        raise ValidationError(f"Invalid clock time '{value}', expected HH:MM")
    if not 0 <= int(minutes) < 60 or not 0 <= total <= 24 * 60:
        raise ValidationError(f"Clock time out of range: '{value}'")
    return total


def parse_clock_window(value: str) -> tuple[int, int]:
    """Parse ``HH:MM-HH:MM`` into a ``[start, end)`` pair of minutes."""
    try:
        start, end = value.split("-")
    except ValueError:
        raise ValidationError(f"Invalid clock window '{value}', expected HH:MM-HH:MM")
    window = parse_clock(start), parse_clock(end)
    if window[1] <= window[0]:
        raise ValidationError(f"Clock window '{value}' must end after it starts")
    return window


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of state labels; fixes the row/column order of every matrix."""

    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ValidationError(f"Alphabet needs at least 2 states, got {list(symbols)}")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"Alphabet has duplicate labels: {list(symbols)}")
        if any(not s or s == MISSING_LABEL for s in symbols):
            raise ValidationError(f"Alphabet labels must be non-empty and not '{MISSING_LABEL}'")

    @classmethod
    def infer(cls, labels: Iterable[str]) -> "Alphabet":
        """Build an alphabet from observed labels in lexicographic order."""
        return cls(tuple(sorted({str(label) for label in labels} - {MISSING_LABEL})))

    @property
    def size(self) -> int:
        return len(self.symbols)

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise InputError(f"Unknown state '{label}' (alphabet: {list(self.symbols)})")

    def label(self, index: int) -> str:
        return MISSING_LABEL if index == MISSING else self.symbols[index]

    @property
    def single_char(self) -> bool:
        """Whether every label is one character (compact CSV form is possible)."""
        return all(len(s) == 1 for s in self.symbols)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, label: object) -> bool:
        return label in self._lookup

    def to_dict(self) -> dict[str, Any]:
        return {"symbols": list(self.symbols)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Alphabet":
        return cls(tuple(data["symbols"]))


@dataclass(frozen=True, eq=False)
class Sequence:
    """
    One categorical sequence.

    ``states`` holds alphabet indices, one per time quantum of ``quantum``
    minutes. Positions without data hold ``MISSING``.
    """

    id: str
    states: np.ndarray
    group_id: str = ""
    quantum: int = DEFAULT_QUANTUM
    date: date | None = None

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=np.int64).reshape(-1)
        if states.size < 2:
            raise ValidationError(f"Sequence '{self.id}' must have length >= 2")
        if states.min() < MISSING:
            raise ValidationError(f"Sequence '{self.id}' has negative state indices")
        states.flags.writeable = False
        object.__setattr__(self, "states", states)

    @property
    def length(self) -> int:
        return int(self.states.size)

    @property
    def missing(self) -> bool:
        return bool((self.states == MISSING).any())

    def to_string(self, alphabet: Alphabet, separator: str = "") -> str:
        return separator.join(alphabet.label(int(s)) for s in self.states)

    def with_states(self, states: np.ndarray, **changes: Any) -> "Sequence":
        values = {
            "id": self.id,
            "group_id": self.group_id,
            "quantum": self.quantum,
            "date": self.date,
        }
        values.update(changes)
        return Sequence(states=states, **values)

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class Episode:
    """A contiguous interval spent in one activity state."""

    group_id: str
    date: date
    start: datetime
    end: datetime
    state: str

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValidationError(
                f"Episode for '{self.group_id}' on {self.date} has start {self.start} "
                f"not before end {self.end}"
            )


@dataclass(frozen=True, eq=False)
class SequenceSet:
    """A dataset of equal-length sequences over one alphabet."""

    alphabet: Alphabet
    sequences: tuple[Sequence, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        sequences = tuple(self.sequences)
        object.__setattr__(self, "sequences", sequences)
        if not sequences:
            raise EmptyDatasetError("A sequence set needs at least one sequence")
        lengths = {s.length for s in sequences}
        if len(lengths) != 1:
            raise ValidationError(f"Sequences must share one length, found {sorted(lengths)}")
        top = max(int(s.states.max()) for s in sequences)
        if top >= self.alphabet.size:
            raise ValidationError(
                f"State index {top} out of range for alphabet of size {self.alphabet.size}"
            )

    @property
    def length(self) -> int:
        return self.sequences[0].length

    @property
    def n(self) -> int:
        return len(self.sequences)

    @property
    def quantum(self) -> int:
        return self.sequences[0].quantum

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sequences]

    @property
    def group_ids(self) -> list[str]:
        return [s.group_id for s in self.sequences]

    @cached_property
    def states(self) -> np.ndarray:
        """``n x l`` matrix of state indices."""
        matrix = np.vstack([s.states for s in self.sequences])
        matrix.flags.writeable = False
        return matrix

    @property
    def has_missing(self) -> bool:
        return bool((self.states == MISSING).any())

    def require_complete(self) -> None:
        if self.has_missing:
            bad = [s.id for s in self.sequences if s.missing]
            raise MissingDataError(
                f"{len(bad)} sequence(s) contain missing positions, e.g. '{bad[0]}'; "
                "filter them first"
            )

    def subset(self, indices: Iterable[int]) -> "SequenceSet":
        return SequenceSet(self.alphabet, tuple(self.sequences[i] for i in indices))

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Sequence]:
        return iter(self.sequences)

    def __getitem__(self, index: int) -> Sequence:
        return self.sequences[index]


# Episode ingestion


def episodes_to_sequence(
    episodes: list[Episode],
    alphabet: Alphabet,
    quantum: int = DEFAULT_QUANTUM,
    day_span: tuple[int, int] = DEFAULT_DAY_SPAN,
    sequence_id: str | None = None,
) -> Sequence:
    """
    Aggregate one day of episodes into a fixed-length sequence.

    Each position holds the state that covers the majority of its
    ``quantum``-minute interval. Ties go to the state covering the earliest
    instant of the interval. Intervals with no coverage at all are stored as
    ``MISSING``.

    Args:
        episodes: Episodes of one group on one date
        alphabet: Alphabet the episode states map into
        quantum: Interval length in minutes
        day_span: ``[start, end)`` minutes after midnight
        sequence_id: Identifier (default ``<group_id>_<date>``)

    Returns:
        Sequence of length ``(end - start) / quantum``
    """
    if not episodes:
        raise InputError("No episodes given")
    keys = {(e.group_id, e.date) for e in episodes}
    if len(keys) != 1:
        raise ValidationError(f"Episodes must share one group and date, got {sorted(keys)}")
    group_id, day = keys.pop()

    span_start, span_end = day_span
    if quantum <= 0 or span_end <= span_start or (span_end - span_start) % quantum:
        raise ValidationError(
            f"Quantum {quantum} min must evenly divide the day span {span_start}-{span_end}"
        )
    length = (span_end - span_start) // quantum

    ordered = sorted(episodes, key=lambda e: (e.start, e.end))
    for previous, current in zip(ordered, ordered[1:]):
        if current.start < previous.end:
            raise ValidationError(
                f"Overlapping episodes for '{group_id}' on {day}: "
                f"{previous.state} until {previous.end} and {current.state} from {current.start}"
            )

    midnight = datetime.combine(day, time())
    edges = 60.0 * (span_start + quantum * np.arange(length + 1))
    lower, upper = edges[:-1], edges[1:]
    coverage = np.zeros((length, alphabet.size))
    first_instant = np.full((length, alphabet.size), np.inf)

    for episode in ordered:
        k = alphabet.index(episode.state)
        begin = np.maximum(lower, (episode.start - midnight).total_seconds())
        finish = np.minimum(upper, (episode.end - midnight).total_seconds())
        overlap = np.clip(finish - begin, 0.0, None)
        coverage[:, k] += overlap
        touched = overlap > 0
        first_instant[touched, k] = np.minimum(first_instant[touched, k], begin[touched])

    best = coverage.max(axis=1)
    candidates = np.where(coverage == best[:, None], first_instant, np.inf)
    states = np.argmin(candidates, axis=1)
    states[best <= 0] = MISSING

    if (states == MISSING).any():
        logger.debug(
            "%s on %s: %d of %d positions missing",
            group_id,
            day,
            int((states == MISSING).sum()),
            length,
        )
    return Sequence(
        id=sequence_id or f"{group_id}_{day.isoformat()}",
        states=states,
        group_id=group_id,
        quantum=quantum,
        date=day,
    )


def episodes_to_sequences(
    episodes: Iterable[Episode],
    alphabet: Alphabet,
    quantum: int = DEFAULT_QUANTUM,
    day_span: tuple[int, int] = DEFAULT_DAY_SPAN,
) -> SequenceSet:
    """Convert an episode log into one sequence per (group, date)."""
    by_day: dict[tuple[str, date], list[Episode]] = defaultdict(list)
    for episode in episodes:
        by_day[(episode.group_id, episode.date)].append(episode)
    if not by_day:
        raise EmptyDatasetError("Episode log is empty")

    sequences = [
        episodes_to_sequence(by_day[key], alphabet, quantum, day_span) for key in sorted(by_day)
    ]
    logger.info("Built %d day sequences from %d groups", len(sequences), len({k[0] for k in by_day}))
    return SequenceSet(alphabet, tuple(sequences))


# Dataset preparation


def map_states(
    data: SequenceSet, mapping: Mapping[str, str], target: Alphabet | None = None
) -> SequenceSet:
    """
    Collapse states through a label mapping.

    Args:
        data: Source sequences
        mapping: Source label -> target label, total on the source alphabet
        target: Target alphabet (default: inferred from the mapping's values)
    """
    unmapped = [s for s in data.alphabet.symbols if s not in mapping]
    if unmapped:
        raise InputError(f"State mapping has no entry for: {unmapped}")
    target = target or Alphabet.infer(mapping[s] for s in data.alphabet.symbols)
    lookup = np.array([target.index(mapping[s]) for s in data.alphabet.symbols], dtype=np.int64)

    sequences = tuple(
        seq.with_states(np.where(seq.states == MISSING, MISSING, lookup[seq.states]))
        for seq in data
    )
    return SequenceSet(target, sequences)


@dataclass(frozen=True)
class FilterRules:
    """Rules applied by :func:`filter_dataset`; ``None`` disables a rule."""

    drop_missing: bool = True
    max_nonhome_fraction: float | None = 0.9
    nonhome_states: tuple[str, ...] = ("W", "T", "O")
    max_per_group: int | None = 20
    seed: int = 0

    def validate(self) -> None:
        if self.max_nonhome_fraction is not None and not 0.0 <= self.max_nonhome_fraction <= 1.0:
            raise ValidationError(
                f"max_nonhome_fraction must be in [0, 1], got {self.max_nonhome_fraction}"
            )
        if self.max_per_group is not None and self.max_per_group < 1:
            raise ValidationError(f"max_per_group must be >= 1, got {self.max_per_group}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "drop_missing": self.drop_missing,
            "max_nonhome_fraction": self.max_nonhome_fraction,
            "nonhome_states": list(self.nonhome_states),
            "max_per_group": self.max_per_group,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FilterRules":
        defaults = cls()
        return cls(
            drop_missing=data.get("drop_missing", defaults.drop_missing),
            max_nonhome_fraction=data.get("max_nonhome_fraction", defaults.max_nonhome_fraction),
            nonhome_states=tuple(data.get("nonhome_states", defaults.nonhome_states)),
            max_per_group=data.get("max_per_group", defaults.max_per_group),
            seed=data.get("seed", defaults.seed),
        )


def filter_dataset(data: SequenceSet, rules: FilterRules) -> SequenceSet:
    """
    Drop incomplete and implausible sequences and cap sequences per group.

    The non-home fraction is measured over all positions of the sequence.
    Sequences with an empty group id each count as their own group.
    Per-group sampling visits groups in sorted order with one generator seeded
    by ``rules.seed``; kept sequences retain their original order.
    """
    rules.validate()
    keep = np.ones(data.n, dtype=bool)

    if rules.drop_missing:
        missing = (data.states == MISSING).any(axis=1)
        keep &= ~missing
        logger.info("Dropped %d sequence(s) with missing data", int(missing.sum()))

    if rules.max_nonhome_fraction is not None:
        codes = [data.alphabet.index(s) for s in rules.nonhome_states if s in data.alphabet]
        fraction = np.isin(data.states, codes).mean(axis=1)
        implausible = keep & (fraction > rules.max_nonhome_fraction)
        keep &= ~implausible
        logger.info(
            "Dropped %d sequence(s) above %.0f%% non-home time",
            int(implausible.sum()),
            100 * rules.max_nonhome_fraction,
        )

    if rules.max_per_group is not None:
        members: dict[str, list[int]] = defaultdict(list)
        for i in np.flatnonzero(keep):
            # An empty group id is a group of one
            members[data.sequences[i].group_id or f"\0{i}"].append(int(i))
        rng = np.random.default_rng(rules.seed)
        for group in sorted(members):
            indices = members[group]
            if len(indices) > rules.max_per_group:
                chosen = set(rng.choice(indices, size=rules.max_per_group, replace=False).tolist())
                for i in indices:
                    keep[i] = i in chosen

    if not keep.any():
        raise EmptyDatasetError("No sequences left after filtering")
    if keep.all():
        return data
    logger.info("Kept %d of %d sequences", int(keep.sum()), data.n)
    return data.subset(np.flatnonzero(keep))


def weekday_index(name: str) -> int:
    """Map a weekday name or 3-letter prefix to ``date.weekday()`` numbering."""
    key = name.strip().lower()
    for i, full in enumerate(WEEKDAY_NAMES):
        if key == full or (len(key) >= 3 and full.startswith(key)):
            return i
    raise ValidationError(f"Unknown weekday '{name}'")


def concat_weeks(data: SequenceSet, days: Iterable[str] = WORKWEEK) -> list[Sequence]:
    """
    Concatenate dated day sequences into multi-day sequences.

    For each group, every run of dates matching ``days`` (offsets measured from
    the first requested weekday) yields one concatenated sequence. Groups
    without a complete run are omitted; the omitted count is logged. The
    result is empty when no group has a complete run.
    """
    days = list(days)
    weekdays = [weekday_index(d) for d in days]
    if not weekdays:
        raise ValidationError("concat_weeks needs at least one day")
    offsets = [(w - weekdays[0]) % 7 for w in weekdays]
    if any(b <= a for a, b in zip(offsets, offsets[1:])):
        raise ValidationError(f"Days must be distinct and in calendar order: {list(days)}")
    if any(s.date is None for s in data):
        raise ValidationError("concat_weeks needs dated sequences")

    by_group: dict[str, dict[date, Sequence]] = defaultdict(dict)
    for seq in data:
        by_group[seq.group_id].setdefault(seq.date, seq)  # type: ignore[arg-type]

    weeks: list[Sequence] = []
    omitted = 0
    for group in sorted(by_group):
        dated = by_group[group]
        found = 0
        for start in sorted(dated):
            if start.weekday() != weekdays[0]:
                continue
            run = [start + timedelta(days=o) for o in offsets]
            if all(d in dated for d in run):
                states = np.concatenate([dated[d].states for d in run])
                weeks.append(dated[start].with_states(states, id=f"{group}_{start.isoformat()}_week"))
                found += 1
        if not found:
            omitted += 1

    logger.info("Built %d week sequence(s); %d group(s) had no complete run", len(weeks), omitted)
    return weeks
