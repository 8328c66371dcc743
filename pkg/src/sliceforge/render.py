"""Slice rasterization and the papercraft stability report."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .layout import PageLayout, slice_print_size
from .octree import Slice, slice_axes
from .volume import LabelVolume, TransferFunction

DEFAULT_PX_PER_MM = 4.0
TORQUE_TOLERANCE = 0.05


@dataclass(frozen=True, eq=False)
class SliceRaster:
    slice_id: int
    pixels: np.ndarray  # (rows, cols, 4) uint8, row 0 = top of the slice
    px_per_mm: float


def rasterize_slice(
    labels: LabelVolume,
    tf: TransferFunction,
    s: Slice,
    scale: float,
    px_per_mm: float = DEFAULT_PX_PER_MM,
    orientations: tuple[str, str] = ("x", "y"),
) -> SliceRaster:
    """Nearest-neighbor resampling of the label plane into an RGBA image.

    Alpha equals the transfer-function opacity of the sampled voxel, so
    background stays fully transparent on film.
    """
    normal, u_ax, v_ax = slice_axes(s.orientation, orientations)
    dims = labels.dims
    if not (0 <= s.plane_coord <= dims[normal]):
        raise ValidationError(f"slice plane {s.plane_coord} outside volume axis {normal}")
    # integer plane p is the face between voxel layers p-1 and p; sample the
    # layer on the + side, clamped at the top face
    layer = min(s.plane_coord, dims[normal] - 1)

    w_mm, h_mm = slice_print_size(s, labels.spacing, orientations)
    cols = max(1, math.ceil(w_mm * scale * px_per_mm))
    rows = max(1, math.ceil(h_mm * scale * px_per_mm))

    u0, u1 = s.u_range
    v0, v1 = s.v_range
    us = np.clip((u0 + (np.arange(cols) + 0.5) * (u1 - u0) / cols).astype(int), 0, dims[u_ax] - 1)
    # row 0 is the top of the printed slice = highest v
    vs = np.clip((v1 - (np.arange(rows) + 0.5) * (v1 - v0) / rows).astype(int), 0, dims[v_ax] - 1)

    index = [0, 0, 0]
    index[normal] = np.full((rows, cols), layer)
    index[u_ax] = np.broadcast_to(us[None, :], (rows, cols))
    index[v_ax] = np.broadcast_to(vs[:, None], (rows, cols))
    plane = labels.labels[tuple(index)]

    visible = tf.visible_bins
    lut = np.zeros((len(visible) + 1, 4), dtype=np.uint8)
    for k, b in enumerate(visible, start=1):
        lut[k] = [round(c * 255) for c in b.rgb] + [round(b.opacity * 255)]
    return SliceRaster(slice_id=s.id, pixels=lut[plane], px_per_mm=px_per_mm)


@dataclass(frozen=True)
class StabilityReport:
    net_torque: tuple[float, float]  # per horizontal axis, mm * mm^2 units
    torque_limit: tuple[float, float]
    min_slot_width_mm: float
    stopper_count: int
    balanced: bool
    slot_width_ok: bool

    def to_json(self) -> dict:
        return {
            "net_torque": list(self.net_torque),
            "torque_limit": list(self.torque_limit),
            "min_slot_width_mm": self.min_slot_width_mm,
            "stopper_count": self.stopper_count,
            "balanced": self.balanced,
            "slot_width_ok": self.slot_width_ok,
        }


def stability_check(
    slices: list[Slice],
    layout: PageLayout,
    dims: tuple[int, int, int],
    spacing: tuple[float, float, float],
    stopper_count: int,
    slot_width_mm: float = 1.0,
    orientations: tuple[str, str] = ("x", "y"),
    min_slot_mm: float = 1.0,
) -> StabilityReport:
    """Gravitational torque balance about the vertical center axis plus the
    printed slot-width check; report-only."""
    horizontal = [slice_axes(orientations[0], orientations)[0], slice_axes(orientations[1], orientations)[0]]
    torque = [0.0, 0.0]
    total_area = 0.0
    for s in slices:
        normal, u_ax, v_ax = slice_axes(s.orientation, orientations)
        w_mm, h_mm = slice_print_size(s, spacing, orientations)
        area = w_mm * h_mm
        total_area += area
        center = [0.0, 0.0, 0.0]
        center[normal] = s.plane_coord * spacing[normal]
        center[u_ax] = (s.u_range[0] + s.u_range[1]) / 2.0 * spacing[u_ax]
        center[v_ax] = (s.v_range[0] + s.v_range[1]) / 2.0 * spacing[v_ax]
        for t, axis in enumerate(horizontal):
            offset = center[axis] - dims[axis] * spacing[axis] / 2.0
            torque[t] += area * offset
    limits = tuple(
        TORQUE_TOLERANCE * total_area * dims[axis] * spacing[axis] / 2.0 for axis in horizontal
    )
    balanced = all(abs(t) <= lim for t, lim in zip(torque, limits))
    min_slot = slot_width_mm * layout.scale
    return StabilityReport(
        net_torque=(torque[0], torque[1]),
        torque_limit=limits,
        min_slot_width_mm=min_slot,
        stopper_count=stopper_count,
        balanced=balanced,
        slot_width_ok=min_slot >= min_slot_mm,
    )
