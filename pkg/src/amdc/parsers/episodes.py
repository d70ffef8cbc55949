"""
Reader for episode logs (``episodes.csv``).

Expected columns: ``group_id,date,start,end,state``. The timestamp columns
may also be named ``start_iso8601``/``end_iso8601``. Timestamps are
ISO 8601 local times; dates are ``YYYY-MM-DD``.
"""

import logging
from pathlib import Path

import pandas as pd

from amdc.errors import InputError
from amdc.sequences import Episode

logger = logging.getLogger(__name__)

_ALIASES = {"start_iso8601": "start", "end_iso8601": "end"}
REQUIRED_COLUMNS = ("group_id", "date", "start", "end", "state")


def read_episodes(path: str | Path) -> list[Episode]:
    """Load episodes; malformed rows raise :class:`InputError` naming the row."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Cannot read episodes from {path}: {e}") from e
    frame = frame.rename(columns=lambda c: _ALIASES.get(c.strip(), c.strip()))
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f"{path} is missing column(s) {missing}")

    try:
        dates = pd.to_datetime(frame["date"], format="%Y-%m-%d").dt.date
        starts = pd.to_datetime(frame["start"], format="ISO8601")
        ends = pd.to_datetime(frame["end"], format="ISO8601")
    except (ValueError, TypeError) as e:
        raise InputError(f"Invalid date or timestamp in {path}: {e}") from e
    if getattr(starts.dt, "tz", None) is not None or getattr(ends.dt, "tz", None) is not None:
        starts, ends = starts.dt.tz_localize(None), ends.dt.tz_localize(None)

    episodes = []
    for row, (group, day, start, end, state) in enumerate(
        zip(frame["group_id"], dates, starts, ends, frame["state"]), start=2
    ):
        try:
            episodes.append(
                Episode(str(group), day, start.to_pydatetime(), end.to_pydatetime(), state.strip())
            )
        except ValueError as e:
            raise InputError(f"{path}, line {row}: {e}") from e
    logger.info("Read %d episodes from %s", len(episodes), path)
    return episodes
