"""Figure rendering for the flexflip CSV artifacts.

Consumes only the CSV schemas emitted by the simulator CLI (field, path,
sweep, and shape files) and produces raster figures: energy and friction
heatmaps with the unreachable region in gray, fingertip-path overlays, the
3D feasibility scatter, and minimum-energy shape overlays.
"""

__version__ = "0.1.0"

from .render import (
    FIELD_COLUMNS,
    PATH_COLUMNS,
    SHAPE_COLUMNS,
    SWEEP_COLUMNS,
    RenderJob,
    SchemaError,
    render,
    render_shapes_overlay,
)

__all__ = [
    "FIELD_COLUMNS",
    "PATH_COLUMNS",
    "SHAPE_COLUMNS",
    "SWEEP_COLUMNS",
    "RenderJob",
    "SchemaError",
    "render",
    "render_shapes_overlay",
]
