"""Rendering of solver evaluation exports: per-group heatmap panels and
markdown summary tables, driven purely by the documented file contracts."""

from .exports import EvalReportData, ExportError, FieldExport, read_field, read_report
from .panels import PanelStats, render_panels
from .summary import render_summary

__version__ = "0.1.0"

__all__ = [
    "EvalReportData", "ExportError", "FieldExport", "PanelStats",
    "read_field", "read_report", "render_panels", "render_summary",
]
