"""Triangle-mesh ingestion and conversion to a labeled volume.

Meshes are voxelized by parity counting of axis-aligned ray crossings at
voxel centers; non-watertight input is resolved by majority vote over the
three axis directions. Each mesh becomes one intensity value so nested
anatomy stays distinct downstream.
"""

from __future__ import annotations

import colorsys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IOFailure, ValidationError
from .volume import ScalarVolume, TransferBin, TransferFunction

# fraction of the bounding box added per side so the outermost voxel layer
# is guaranteed exterior; must exceed half a voxel at the minimum supported
# resolution (8 per axis)
_PAD_FRACTION = 0.08

# mesh world units are arbitrary; the padded bounds are normalized so the
# longest side prints at this physical size at scale 1
REFERENCE_EXTENT_MM = 100.0

_HUE_STEP = 0.618  # golden-ratio conjugate, truncated per palette convention
_PALETTE_S = 0.65
_PALETTE_V = 0.9


@dataclass(frozen=True, eq=False)
class Mesh:
    name: str
    vertices: np.ndarray  # (n, 3) float64, mm
    triangles: np.ndarray  # (m, 3) int

    def __post_init__(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError(f"mesh {self.name!r}: vertices must be (n, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValidationError(f"mesh {self.name!r}: triangles must be (m, 3)")
        if len(self.vertices) == 0 or len(self.triangles) == 0:
            raise ValidationError(f"mesh {self.name!r} is empty")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise ValidationError(f"mesh {self.name!r}: triangle index out of range")

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class MeshSet:
    meshes: tuple[Mesh, ...]

    def __post_init__(self):
        if not self.meshes:
            raise ValidationError("MeshSet is empty")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.min([m.vertices.min(axis=0) for m in self.meshes], axis=0)
        hi = np.max([m.vertices.max(axis=0) for m in self.meshes], axis=0)
        return lo, hi


def load_obj(path: str | Path, name: str | None = None) -> Mesh:
    """Parse the v/f subset of ASCII OBJ (triangulated faces only)."""
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"mesh file not found: {path}")
    vertices: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0] not in ("v", "f"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValidationError(f"{path}:{ln}: vertex needs 3 coordinates")
            vertices.append(tuple(float(c) for c in parts[1:4]))
        else:
            if len(parts) != 4:
                raise ValidationError(f"{path}:{ln}: only triangulated faces are supported")
            idx = []
            for tok in parts[1:4]:
                tok = tok.split("/")[0]
                i = int(tok)
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            triangles.append(tuple(idx))
    return Mesh(
        name=name or path.stem,
        vertices=np.asarray(vertices, dtype=np.float64),
        triangles=np.asarray(triangles, dtype=np.int64),
    )


def save_obj(mesh: Mesh, path: str | Path) -> None:
    lines = [f"# {mesh.name}"]
    lines += [f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}" for v in mesh.vertices]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def golden_palette(n: int) -> list[tuple[float, float, float]]:
    """Deterministic qualitative palette with guaranteed hue separation.

    Golden-ratio hue stepping; when n is large enough that the stepped hues
    violate the 1/(2n) minimum circular separation, the same hues are
    redistributed to even spacing while keeping their golden rank order.
    """
    hues = [(i * _HUE_STEP) % 1.0 for i in range(n)]
    if n > 1:
        hs = sorted(hues)
        gaps = [(hs[(i + 1) % n] - hs[i]) % 1.0 for i in range(n)]
        if min(gaps) < 1.0 / (2 * n):
            rank = {h: r for r, h in enumerate(hs)}
            hues = [rank[h] / n for h in hues]
    return [colorsys.hsv_to_rgb(h, _PALETTE_S, _PALETTE_V) for h in hues]


def _inside_by_parity(mesh: Mesh, centers: tuple[np.ndarray, np.ndarray, np.ndarray], axis: int) -> np.ndarray:
    """Boolean inside-grid for one mesh using rays along one axis.

    Rays pass through voxel centers; a voxel is inside when an odd number
    of triangle crossings lie below its center along the ray axis. Query
    points are jittered by a sub-nanovoxel irrational offset so rays cannot
    hit shared triangle edges exactly (grid-aligned meshes otherwise double
    count crossings on face diagonals).
    """
    u_axis, v_axis = [a for a in range(3) if a != axis]
    cu, cv, cr = centers[u_axis], centers[v_axis], centers[axis]
    n_u, n_v = len(cu), len(cv)
    cu = cu + (cu[1] - cu[0]) * 2.718281828e-7
    cv = cv + (cv[1] - cv[0]) * 3.141592653e-7

    tri = mesh.vertices[mesh.triangles]  # (m, 3, 3)
    crossings: dict[tuple[int, int], list[float]] = {}
    for a, b, c in tri:
        pu = np.array([a[u_axis], b[u_axis], c[u_axis]])
        pv = np.array([a[v_axis], b[v_axis], c[v_axis]])
        pr = np.array([a[axis], b[axis], c[axis]])
        area2 = (pu[1] - pu[0]) * (pv[2] - pv[0]) - (pu[2] - pu[0]) * (pv[1] - pv[0])
        if area2 == 0.0:
            continue  # parallel to the ray axis: no interior crossing possible
        iu0, iu1 = np.searchsorted(cu, pu.min()), np.searchsorted(cu, pu.max(), side="right")
        iv0, iv1 = np.searchsorted(cv, pv.min()), np.searchsorted(cv, pv.max(), side="right")
        if iu0 >= iu1 or iv0 >= iv1:
            continue
        gu, gv = np.meshgrid(cu[iu0:iu1], cv[iv0:iv1], indexing="ij")
        # barycentric coordinates in the projection plane
        w0 = ((pu[1] - gu) * (pv[2] - gv) - (pu[2] - gu) * (pv[1] - gv)) / area2
        w1 = ((pu[2] - gu) * (pv[0] - gv) - (pu[0] - gu) * (pv[2] - gv)) / area2
        w2 = 1.0 - w0 - w1
        hit = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        if not hit.any():
            continue
        r_hit = w0 * pr[0] + w1 * pr[1] + w2 * pr[2]
        for du, dv in zip(*np.nonzero(hit)):
            crossings.setdefault((iu0 + int(du), iv0 + int(dv)), []).append(float(r_hit[du, dv]))

    inside_uv = np.zeros((n_u, n_v, len(cr)), dtype=bool)
    for (iu, iv), xs in crossings.items():
        xs.sort()
        below = np.searchsorted(xs, cr)
        inside_uv[iu, iv] = (below % 2) == 1

    shape = [0, 0, 0]
    shape[u_axis], shape[v_axis], shape[axis] = n_u, n_v, len(cr)
    return np.moveaxis(inside_uv, (0, 1, 2), (u_axis, v_axis, axis))


def mesh_inside_grid(mesh: Mesh, centers: tuple[np.ndarray, np.ndarray, np.ndarray]) -> np.ndarray:
    """Majority vote of the three single-axis parity tests."""
    votes = sum(
        _inside_by_parity(mesh, centers, axis).astype(np.uint8) for axis in range(3)
    )
    return votes >= 2


def voxelize_meshes(meshes: MeshSet, resolution: tuple[int, int, int]) -> tuple[ScalarVolume, TransferFunction]:
    """Convert a mesh set to a labeled volume plus an automatic transfer function.

    Voxel intensity is 1 + the index of the innermost containing mesh
    (0 where no mesh contains the voxel center). The transfer function gets
    one bin per mesh; deeper-nested meshes receive higher opacity so inner
    structures stay visible through the assembled film stack. Coordinates
    are normalized so the longest padded side measures REFERENCE_EXTENT_MM.
    """
    if any(int(r) < 8 for r in resolution):
        raise ValidationError(f"resolution must be >= 8 per axis, got {resolution}")
    resolution = tuple(int(r) for r in resolution)
    for m in meshes.meshes:
        tri = m.vertices[m.triangles]
        areas = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
        flat = int((areas == 0.0).sum())
        if flat:
            warnings.warn(f"mesh {m.name!r}: skipped {flat} degenerate (zero-area) triangles")
    lo, hi = meshes.bounds()
    extent = hi - lo
    extent[extent == 0] = 1.0
    lo = lo - _PAD_FRACTION * extent
    hi = hi + _PAD_FRACTION * extent
    spacing = (hi - lo) / np.asarray(resolution, dtype=np.float64)
    centers = tuple(
        lo[a] + (np.arange(resolution[a]) + 0.5) * spacing[a] for a in range(3)
    )

    inside = [mesh_inside_grid(m, centers) for m in meshes.meshes]
    counts = [int(g.sum()) for g in inside]
    for m, c in zip(meshes.meshes, counts):
        if c == 0:
            warnings.warn(f"mesh {m.name!r} contains no voxel centers at this resolution")

    n = len(meshes.meshes)
    # nesting depth: how many other meshes (almost) completely contain this one
    depth = np.zeros(n, dtype=int)
    for i in range(n):
        if counts[i] == 0:
            continue
        for j in range(n):
            if i == j or counts[j] == 0:
                continue
            if int((inside[i] & inside[j]).sum()) >= 0.995 * counts[i] and counts[j] > counts[i]:
                depth[i] += 1

    volume_center = (lo + hi) / 2.0
    center_dist = np.array([np.linalg.norm(m.centroid - volume_center) for m in meshes.meshes])
    # innermost = deepest nesting, ties broken toward the volume center
    rank_order = sorted(range(n), key=lambda i: (depth[i], -center_dist[i], i))
    depth_rank = np.empty(n, dtype=int)
    for r, i in enumerate(rank_order):
        depth_rank[i] = r

    scalars = np.zeros(resolution, dtype=np.float32)
    best_rank = np.full(resolution, -1, dtype=np.int32)
    for i in range(n):
        take = inside[i] & (depth_rank[i] > best_rank)
        scalars[take] = np.float32(i + 1)
        best_rank[take] = depth_rank[i]

    palette = golden_palette(n)
    bins = tuple(
        TransferBin(
            lo=float(i + 1),
            hi=float(i + 2),
            rgb=palette[i],
            opacity=1.0 if n == 1 else 0.35 + 0.65 * depth_rank[i] / (n - 1),
        )
        for i in range(n)
    )
    norm = REFERENCE_EXTENT_MM / float(np.max(hi - lo))
    volume = ScalarVolume(
        dims=resolution,
        spacing=tuple(float(s) * norm for s in spacing),
        origin=tuple(float(c[0]) * norm for c in centers),
        scalars=scalars,
    )
    return volume, TransferFunction(bins)
