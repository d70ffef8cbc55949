"""
Exporters for amdc results.

This package writes cluster heatmaps (SVG) and the CSV/JSON run artifacts.
"""

from .svg import SvgHeatmapExporter, render_clusters
from .tables import write_assignments, write_frame, write_json, write_manifest

__all__ = [
    "SvgHeatmapExporter",
    "render_clusters",
    "write_assignments",
    "write_frame",
    "write_json",
    "write_manifest",
]
