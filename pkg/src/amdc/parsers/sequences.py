"""
Readers and writers for sequence and assignment tables.

``sequences.csv`` comes in two forms, detected from the header:

- compact: ``id,group_id[,date],states`` where ``states`` is a string with
  one character per position
- wide: ``id,group_id[,date],s1,...,sl`` with one label per cell

Missing positions are written as ``*`` (compact) or an empty cell (wide).
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from amdc.errors import InputError
from amdc.sequences import (
    DEFAULT_QUANTUM,
    MISSING,
    MISSING_LABEL,
    Alphabet,
    Sequence,
    SequenceSet,
)

logger = logging.getLogger(__name__)

META_COLUMNS = ("id", "group_id", "date")


def _read_table(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise InputError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Cannot read {path}: {e}") from e
    frame.columns = [c.strip() for c in frame.columns]
    if "id" not in frame.columns:
        raise InputError(f"{path} has no 'id' column")
    return frame


def read_sequences(
    path: str | Path, alphabet: Alphabet | None = None, quantum: int = DEFAULT_QUANTUM
) -> SequenceSet:
    """
    Load a sequence table.

    Args:
        path: CSV file in compact or wide form
        alphabet: Alphabet to use (default: inferred, sorted)
        quantum: Minutes per position
    """
    path = Path(path)
    frame = _read_table(path)
    if "states" in frame.columns:
        rows = [list(s.strip()) for s in frame["states"]]
    else:
        position_columns = [c for c in frame.columns if c not in META_COLUMNS]
        if not position_columns:
            raise InputError(f"{path} has neither a 'states' column nor position columns")
        rows = frame[position_columns].map(str.strip).values.tolist()
    rows = [[MISSING_LABEL if label in ("", MISSING_LABEL) else label for label in r] for r in rows]

    alphabet = alphabet or Alphabet.infer(label for r in rows for label in r)
    groups = frame["group_id"] if "group_id" in frame.columns else [""] * len(frame)
    if "date" in frame.columns:
        try:
            dates = [pd.Timestamp(d).date() if d else None for d in frame["date"]]
        except ValueError as e:
            raise InputError(f"Invalid date in {path}: {e}") from e
    else:
        dates = [None] * len(frame)

    sequences = []
    for seq_id, group, day, labels in zip(frame["id"], groups, dates, rows):
        states = np.array(
            [MISSING if label == MISSING_LABEL else alphabet.index(label) for label in labels]
        )
        sequences.append(Sequence(id=seq_id, states=states, group_id=group, quantum=quantum, date=day))
    data = SequenceSet(alphabet, tuple(sequences))
    logger.info("Read %d sequences of length %d from %s", data.n, data.length, path)
    return data


def sequences_frame(data: SequenceSet) -> pd.DataFrame:
    """Table form of ``data``: compact when every label is one character."""
    frame = pd.DataFrame({"id": data.ids, "group_id": data.group_ids})
    if any(s.date is not None for s in data):
        frame["date"] = [s.date.isoformat() if s.date else "" for s in data]
    if data.alphabet.single_char:
        frame["states"] = [s.to_string(data.alphabet) for s in data]
        return frame
    labels = np.array(list(data.alphabet.symbols) + [""], dtype=object)
    positions = pd.DataFrame(
        labels[data.states], columns=[f"s{j + 1}" for j in range(data.length)]
    )
    return pd.concat([frame, positions], axis=1)


def write_sequences(path: str | Path, data: SequenceSet) -> Path:
    path = Path(path)
    sequences_frame(data).to_csv(path, index=False, lineterminator="\n")
    return path


def read_assignments(path: str | Path) -> dict[str, str]:
    """Read an ``id,cluster`` table into a mapping."""
    path = Path(path)
    frame = _read_table(path)
    if "cluster" not in frame.columns:
        raise InputError(f"{path} has no 'cluster' column")
    return dict(zip(frame["id"], frame["cluster"]))
