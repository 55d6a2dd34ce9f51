"""Render CSV artifacts into figures.

All renders are pure functions of the input CSV bytes and the style
options: fixed figure geometry, no timestamps, so re-rendering identical
inputs yields identical image bytes at a fixed dpi.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIELD_COLUMNS = ["px_mm", "pz_mm", "energy", "grad_x", "grad_y", "mu_min", "reachable", "converged"]
PATH_COLUMNS = ["pressure_mpa", "tip_x_mm", "tip_z_mm", "clamped"]
SWEEP_COLUMNS = ["x_mm", "z_mm", "theta_deg", "label", "energy_at_sep", "mu_min_max", "flip_angle_deg"]
SHAPE_COLUMNS = ["shape_id", "px_mm", "pz_mm", "node_index", "x_mm", "z_mm"]

KINDS = ("energy-field", "friction-field", "paths-overlay", "feasibility-scatter", "shapes-overlay")

MASK_GRAY = (0.75, 0.75, 0.75)


class SchemaError(ValueError):
    """Input CSV does not match the declared schema."""


@dataclass
class RenderJob:
    kind: str
    inputs: list
    output: Path
    dpi: int = 150
    cmap: str = "viridis"
    vmin: float | None = None
    vmax: float | None = None
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)


def _read_rows(path: Path, required: list[str]) -> list[dict]:
    if not Path(path).is_file():
        raise SchemaError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        have = reader.fieldnames or []
        missing = [c for c in required if c not in have]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _floats(rows, key):
    out = np.empty(len(rows))
    for i, r in enumerate(rows):
        text = r[key]
        if text == "":
            out[i] = np.nan
        elif text == "inf":
            out[i] = np.inf
        else:
            out[i] = float(text)
    return out


def _field_arrays(path: Path):
    """Reassemble the node-registered field grid from its CSV rows."""
    rows = _read_rows(path, FIELD_COLUMNS)
    px = _floats(rows, "px_mm")
    pz = _floats(rows, "pz_mm")
    xs = np.unique(px)
    zs = np.unique(pz)
    shape = (zs.size, xs.size)
    if len(rows) != shape[0] * shape[1]:
        raise SchemaError(f"{path}: rows do not form a complete grid")
    def grid_of(key):
        vals = _floats(rows, key)
        out = np.full(shape, np.nan)
        for x, z, v in zip(px, pz, vals):
            out[np.searchsorted(zs, z), np.searchsorted(xs, x)] = v
        return out
    return xs, zs, grid_of


def _heatmap(ax, xs, zs, values, mask, cmap_name, vmin, vmax):
    cmap = plt.get_cmap(cmap_name).copy()
    cmap.set_bad(MASK_GRAY)
    data = np.ma.masked_where(~mask | ~np.isfinite(values), values)
    dx = (xs[-1] - xs[0]) / max(xs.size - 1, 1)
    dz = (zs[-1] - zs[0]) / max(zs.size - 1, 1)
    extent = (xs[0] - dx / 2, xs[-1] + dx / 2, zs[0] - dz / 2, zs[-1] + dz / 2)
    image = ax.imshow(
        data, origin="lower", extent=extent, cmap=cmap, vmin=vmin, vmax=vmax,
        aspect="equal", interpolation="nearest",
    )
    ax.set_xlabel("horizontal displacement (mm)")
    ax.set_ylabel("vertical displacement (mm)")
    return image


def _render_field(job: RenderJob, column: str, label: str) -> None:
    xs, zs, grid_of = _field_arrays(job.inputs[0])
    reachable = grid_of("reachable") == 1.0
    values = grid_of(column)
    finite = values[np.isfinite(values) & reachable]
    vmax = job.vmax
    if vmax is None and column == "mu_min" and finite.size:
        # clip the near-taut blowup so the map stays readable
        vmax = float(np.quantile(finite, 0.98))
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    image = _heatmap(ax, xs, zs, values, reachable, job.cmap, job.vmin, vmax)
    fig.colorbar(image, ax=ax, label=label)
    _save(fig, job)


def _render_paths_overlay(job: RenderJob) -> None:
    if len(job.inputs) < 2:
        raise SchemaError("paths-overlay needs a field CSV followed by path CSVs")
    xs, zs, grid_of = _field_arrays(job.inputs[0])
    reachable = grid_of("reachable") == 1.0
    energy = grid_of("energy")
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    image = _heatmap(ax, xs, zs, energy, reachable, job.cmap, job.vmin, job.vmax)
    fig.colorbar(image, ax=ax, label="flexural energy")
    for path_csv in job.inputs[1:]:
        rows = _read_rows(path_csv, PATH_COLUMNS)
        tx = _floats(rows, "tip_x_mm")
        tz = _floats(rows, "tip_z_mm")
        ax.plot(tx, tz, color="red", linewidth=1.2)
        ax.plot(tx[0], tz[0], marker="o", color="red", markersize=4)
    _save(fig, job)


def _render_feasibility_scatter(job: RenderJob) -> None:
    rows = _read_rows(job.inputs[0], SWEEP_COLUMNS)
    wins = [r for r in rows if r["label"] == "Success"]
    fig = plt.figure(figsize=(6.4, 5.2))
    ax = fig.add_subplot(projection="3d")
    if wins:
        ax.scatter(
            [float(r["x_mm"]) for r in wins],
            [float(r["z_mm"]) for r in wins],
            [float(r["theta_deg"]) for r in wins],
            c="tab:blue", marker="o", s=14,
        )
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("z (mm)")
    ax.set_zlabel("theta (deg)")
    _save(fig, job)


def render_shapes_overlay(field_csv, shapes_csv, output, dpi: int = 150, cmap: str = "viridis") -> Path:
    """Minimum-energy shape curves drawn from the origin over the heatmap.

    The shape file must come from the same rod as the field: the shapes' arc
    length is checked against the field's reachable radius.
    """
    job = RenderJob("shapes-overlay", [field_csv, shapes_csv], output, dpi=dpi, cmap=cmap)
    xs, zs, grid_of = _field_arrays(job.inputs[0])
    reachable = grid_of("reachable") == 1.0
    energy = grid_of("energy")
    radii = np.hypot(*np.meshgrid(xs, zs))
    field_reach = float(np.max(radii[reachable])) if reachable.any() else 0.0

    rows = _read_rows(job.inputs[1], SHAPE_COLUMNS)
    shapes: dict[str, list] = {}
    for r in rows:
        shapes.setdefault(r["shape_id"], []).append(
            (int(r["node_index"]), float(r["x_mm"]), float(r["z_mm"]))
        )
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    image = _heatmap(ax, xs, zs, energy, reachable, job.cmap, None, None)
    fig.colorbar(image, ax=ax, label="flexural energy")
    for sid, nodes in sorted(shapes.items()):
        nodes.sort()
        pts = np.array([(x, z) for _, x, z in nodes])
        arc = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        if field_reach > 0 and abs(arc - field_reach) > 0.05 * field_reach:
            plt.close(fig)
            raise SchemaError(
                f"shape {sid}: arc length {arc:.3g} does not match the field's "
                f"reachable radius {field_reach:.3g}"
            )
        ax.plot(pts[:, 0], pts[:, 1], color="white", linewidth=1.0)
    _save(fig, job)
    return job.output


def render(job: RenderJob) -> Path:
    """Render one job to its output image; returns the output path."""
    if job.kind == "energy-field":
        _render_field(job, "energy", "flexural energy")
    elif job.kind == "friction-field":
        _render_field(job, "mu_min", "friction coefficient lower bound")
    elif job.kind == "paths-overlay":
        _render_paths_overlay(job)
    elif job.kind == "feasibility-scatter":
        _render_feasibility_scatter(job)
    elif job.kind == "shapes-overlay":
        if len(job.inputs) != 2:
            raise SchemaError("shapes-overlay needs exactly [field CSV, shapes CSV]")
        render_shapes_overlay(job.inputs[0], job.inputs[1], job.output,
                              dpi=job.dpi, cmap=job.cmap)
        return job.output
    else:  # pragma: no cover - guarded in RenderJob
        raise SchemaError(f"unknown kind {job.kind}")
    return job.output


def _save(fig, job: RenderJob) -> None:
    job.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.output, dpi=job.dpi)
    plt.close(fig)
