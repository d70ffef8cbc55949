"""
Readers for amdc input files.

This package turns episode logs and sequence tables into the sequence model.
"""

from .episodes import read_episodes
from .sequences import read_assignments, read_sequences, write_sequences

__all__ = ["read_episodes", "read_sequences", "read_assignments", "write_sequences"]
