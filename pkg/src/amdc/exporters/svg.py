"""
SVG heatmap exporter for sequence clusters.

Renders one SVG 1.1 document per cluster: one row per sequence, one column
per time position, cells colored by state. Every panel has the same height
regardless of cluster size.
"""

import logging
from collections.abc import Iterable
from typing import Any
from xml.sax.saxutils import escape

import numpy as np

from amdc.clustering import cluster_label
from amdc.errors import ValidationError
from amdc.sequences import MISSING, Alphabet, SequenceSet

logger = logging.getLogger(__name__)

DEFAULT_PALETTE = {"H": "#4e79a7", "W": "#f28e2b", "T": "#e15759", "O": "#59a14f"}
FALLBACK_COLORS = (
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
)
MISSING_COLOR = "#ffffff"
SEPARATOR_COLOR = "#000000"


def _fmt(value: float) -> str:
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text or "0"


def darken(color: str, amount: float) -> str:
    """Blend a ``#rrggbb`` color toward black by ``amount`` in [0, 1]."""
    rgb = [int(color[i : i + 2], 16) for i in (1, 3, 5)]
    return "#" + "".join(f"{round(c * (1 - amount)):02x}" for c in rgb)


def _runs(row: np.ndarray) -> list[tuple[int, int, int]]:
    """``(start, length, state)`` for each run of equal states."""
    change = np.flatnonzero(np.diff(row)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [row.size]))
    return [(int(s), int(e - s), int(row[s])) for s, e in zip(starts, ends)]


class SvgHeatmapExporter:
    """
    Export clustered sequences as SVG heatmaps.

    Supports:
    - A fixed palette per state label, with fallback colors for others
    - Cluster titles with the share of all sequences
    - Day separators for multi-day sequences
    - Darker rows for sequences whose cluster changed against a reference
    """

    def __init__(
        self,
        palette: dict[str, str] | None = None,
        panel_width: int = 600,
        panel_height: int = 300,
        day_length: int | None = None,
        highlight_amount: float = 0.35,
    ):
        """
        Initialize the exporter.

        Args:
            palette: State label -> ``#rrggbb`` color (merged over the default)
            panel_width: Width of the heatmap area in pixels
            panel_height: Height of the heatmap area in pixels, shared by all panels
            day_length: Positions per day; separators are drawn between days
            highlight_amount: How far changed rows are darkened toward black
        """
        self.palette = {**DEFAULT_PALETTE, **(palette or {})}
        self.panel_width = panel_width
        self.panel_height = panel_height
        self.day_length = day_length
        self.highlight_amount = highlight_amount
        self.title_height = 24
        self.legend_height = 22

    def colors_for(self, alphabet: Alphabet) -> list[str]:
        fallback = iter(c for c in FALLBACK_COLORS if c not in self.palette.values())
        colors = []
        for i, label in enumerate(alphabet.symbols):
            color = self.palette.get(label)
            if color is None:
                color = next(fallback, FALLBACK_COLORS[i % len(FALLBACK_COLORS)])
            colors.append(color)
        return colors

    def export_cluster(
        self,
        data: SequenceSet,
        members: np.ndarray,
        title: str,
        changed: np.ndarray | None = None,
    ) -> str:
        """
        Export one cluster panel.

        Args:
            data: All sequences
            members: Indices of this cluster's sequences, in drawing order
            title: Panel title
            changed: Boolean mask over ``members`` of rows to darken

        Returns:
            SVG document as string
        """
        if members.size == 0:
            raise ValidationError(f"Cluster '{title}' has no sequences")
        colors = self.colors_for(data.alphabet)
        length = data.length
        cell = self.panel_width / length
        row_height = self.panel_height / members.size
        top = self.title_height
        width = self.panel_width
        height = top + self.panel_height + self.legend_height

        lines = ['<?xml version="1.0" encoding="UTF-8"?>']
        lines.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
        )
        lines.append(
            f'<text x="0" y="{top - 8}" font-family="sans-serif" font-size="14">{escape(title)}</text>'
        )
        lines.append('<g shape-rendering="crispEdges">')
        for r, index in enumerate(members):
            darker = changed is not None and bool(changed[r])
            y = _fmt(top + r * row_height)
            h = _fmt(row_height)
            for start, run, state in _runs(data.states[index]):
                color = MISSING_COLOR if state == MISSING else colors[state]
                if darker:
                    color = darken(color, self.highlight_amount)
                lines.append(
                    f'<rect x="{_fmt(start * cell)}" y="{y}" width="{_fmt(run * cell)}" '
                    f'height="{h}" fill="{color}"/>'
                )
        lines.append("</g>")

        lines.extend(self._separators(length, cell, top))
        lines.extend(self._legend(data.alphabet, colors, top + self.panel_height + 4))
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def _separators(self, length: int, cell: float, top: int) -> list[str]:
        if not self.day_length or length <= self.day_length:
            return []
        bottom = top + self.panel_height
        return [
            f'<line x1="{_fmt(k * cell)}" y1="{top}" x2="{_fmt(k * cell)}" y2="{bottom}" '
            f'stroke="{SEPARATOR_COLOR}" stroke-width="1"/>'
            for k in range(self.day_length, length, self.day_length)
        ]

    def _legend(self, alphabet: Alphabet, colors: list[str], y: int) -> list[str]:
        lines = []
        for i, (label, color) in enumerate(zip(alphabet.symbols, colors)):
            x = i * 80
            lines.append(f'<rect x="{x}" y="{y}" width="12" height="12" fill="{color}"/>')
            lines.append(
                f'<text x="{x + 16}" y="{y + 11}" font-family="sans-serif" '
                f'font-size="11">{escape(label)}</text>'
            )
        return lines

    def export_partition(
        self,
        data: SequenceSet,
        assignments: Iterable[int],
        n_clusters: int | None = None,
        top: int | None = None,
        changed: Iterable[bool] | None = None,
    ) -> dict[str, str]:
        """
        Export every non-empty cluster.

        Returns:
            Cluster name -> SVG document, largest clusters first
        """
        labels = np.asarray(list(assignments), dtype=np.int64)
        if labels.shape != (data.n,):
            raise ValidationError(f"Expected {data.n} assignments, got {labels.size}")
        changed_mask = None if changed is None else np.asarray(list(changed), dtype=bool)
        sizes = np.bincount(labels, minlength=n_clusters or 0)

        order = sorted(range(sizes.size), key=lambda k: (-sizes[k], k))
        documents: dict[str, str] = {}
        for k in order:
            if sizes[k] == 0:
                logger.warning("Skipping empty cluster %s", cluster_label(k))
                continue
            if top is not None and len(documents) >= top:
                break
            members = np.flatnonzero(labels == k)
            percent = 100.0 * members.size / data.n
            title = f"Cluster {cluster_label(k)} ({percent:.1f}%)"
            rows = None if changed_mask is None else changed_mask[members]
            documents[cluster_label(k)] = self.export_cluster(data, members, title, rows)
        return documents


def render_clusters(
    data: SequenceSet,
    assignments: Iterable[int],
    palette: dict[str, str] | None = None,
    **options: Any,
) -> dict[str, str]:
    """Convenience wrapper: one SVG document per cluster."""
    exporter_options = {k: options.pop(k) for k in ("day_length",) if k in options}
    exporter = SvgHeatmapExporter(palette, **exporter_options)
    return exporter.export_partition(data, assignments, **options)
