"""Markdown summary table over one or more evaluation reports: training-set
size against mean relative error and mean speedup."""

from __future__ import annotations

from .exports import read_report


def render_summary(report_paths) -> str:
    """One table row per report, ordered as given."""
    paths = list(report_paths)
    if not paths:
        raise ValueError("no reports given")
    reports = [read_report(p) for p in paths]

    lines = [
        "| N_snap | Mean rel. L2 error | Mean speedup |",
        "| --- | --- | --- |",
    ]
    for rep in reports:
        lines.append(
            f"| {rep.n_snapshots} | {rep.mean_error:.3e} | {rep.mean_speedup:.1f} |"
        )
    return "\n".join(lines) + "\n"
