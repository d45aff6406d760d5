"""Three-panel heatmap figures: reference solution, reduced solution, and
pointwise relative error, one image per energy group.

Flux panels use a logarithmic color scale (the checkerboard flux spans
orders of magnitude through the absorbers); values at or below zero are
clipped to a floor for display only. The error panel stays linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.colors import LogNorm

import numpy as np

from .exports import ExportError, FieldExport, read_field

_LOG_FLOOR_RATIO = 1e-10
_ERROR_FLOOR = 1e-16


@dataclass(frozen=True)
class PanelStats:
    """What each rendered image actually displayed (for verification)."""

    path: Path
    group: int
    flux_vmin: float
    flux_vmax: float
    error_vmin: float
    error_vmax: float


def _check_matching(fom: FieldExport, rom: FieldExport, err: FieldExport):
    shapes = {"fom": fom.shape, "rom": rom.shape, "error": err.shape}
    if len(set(shapes.values())) != 1:
        raise ExportError(
            "exports do not share dimensions: "
            + ", ".join(f"{k}={v}" for k, v in shapes.items())
        )


def _group_output_path(output, group: int) -> Path:
    output = Path(output)
    suffix = output.suffix or ".png"
    return output.with_name(f"{output.stem}_g{group}{suffix}")


def render_panels(fom_path, rom_path, error_path, output_path,
                  groups=None, vmin=None, vmax=None):
    """Render one three-panel image per group; returns PanelStats per image.

    ``groups`` selects a subset (default: all). ``vmin``/``vmax`` override
    the flux color-scale bounds shared by the two solution panels.
    """
    fom = read_field(fom_path)
    rom = read_field(rom_path)
    err = read_field(error_path)
    _check_matching(fom, rom, err)

    if groups is None:
        groups = range(fom.n_groups)
    stats = []
    for g in groups:
        if not 0 <= g < fom.n_groups:
            raise ExportError(f"group {g} out of range for {fom.n_groups} groups")
        path = _group_output_path(output_path, g)
        stats.append(_render_group(fom, rom, err, g, path, vmin, vmax))
    return stats


def _render_group(fom, rom, err, g, path, vmin, vmax) -> PanelStats:
    flux_pair = np.stack([fom.grids[g], rom.grids[g]])
    top = float(flux_pair.max())
    if vmax is not None:
        top = float(vmax)
    if top <= 0.0:
        top = 1.0
    floor = top * _LOG_FLOOR_RATIO
    bottom = float(vmin) if vmin is not None else max(
        float(flux_pair[flux_pair > 0].min()) if np.any(flux_pair > 0) else floor,
        floor,
    )
    if bottom >= top:
        bottom = top * _LOG_FLOOR_RATIO
    norm = LogNorm(vmin=bottom, vmax=top)

    err_grid = err.grids[g]
    err_vmax = max(float(err_grid.max()), _ERROR_FLOOR)

    fig, axes = plt.subplots(1, 3, figsize=(12.5, 4.0), constrained_layout=True)
    titles = (f"Reference, group {g}", f"Reduced model, group {g}",
              f"Relative error, group {g}")
    extent = None  # cell-index axes; physical extent is uniform anyway
    for ax, grid, title in zip(axes[:2], flux_pair, titles[:2]):
        im = ax.imshow(np.clip(grid, floor, None), origin="lower", norm=norm,
                       cmap="inferno", extent=extent)
        ax.set_title(title)
        ax.set_xlabel("x cell")
        ax.set_ylabel("y cell")
        fig.colorbar(im, ax=ax, shrink=0.85)
    im = axes[2].imshow(err_grid, origin="lower", vmin=0.0, vmax=err_vmax,
                        cmap="viridis", extent=extent)
    axes[2].set_title(titles[2])
    axes[2].set_xlabel("x cell")
    axes[2].set_ylabel("y cell")
    fig.colorbar(im, ax=axes[2], shrink=0.85)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return PanelStats(path=Path(path), group=g, flux_vmin=bottom, flux_vmax=top,
                      error_vmin=0.0, error_vmax=err_vmax)
