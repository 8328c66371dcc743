"""Paper placement: feature clustering, page partitioning, and packing.

Slices get a 4D feature (normalized center + assembly position), projected
to 2D by PCA and clustered by k-means with an elbow pick. Each cluster owns
one kd-tree leaf of the page area, sized by its share of slice area, and a
Maximal Rectangles / best-short-side-fit packer places the slices at the
largest global scale that still fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, ValidationError
from .octree import Slice, slice_axes
from .ordering import AssemblyPlan

PAGE_SIZES_MM = {"A4": (210.0, 297.0), "A3": (297.0, 420.0)}

DEFAULT_MARGIN_MM = 5.0
DEFAULT_GUTTER_MM = 4.0
ELBOW_IMPROVEMENT = 0.10
SCALE_TOLERANCE = 0.005
MIN_PRINT_SLOT_MM = 1.0
# packing may undershoot the recommended 1 mm printed slot (the stability
# report flags it); below half of it the print is considered unusable
LEGIBLE_SLOT_FRACTION = 0.5


@dataclass(frozen=True)
class FeatureVector:
    slice_id: int
    v: tuple[float, float, float, float]  # (x, y, z, d), each in [0, 1]


def build_vectors(
    slices: list[Slice],
    plan: AssemblyPlan,
    dims: tuple[int, int, int],
    orientations: tuple[str, str] = ("x", "y"),
) -> list[FeatureVector]:
    """Normalized slice centers plus normalized assembly position."""
    order = {sid: i for i, sid in enumerate(plan.slice_order)}
    missing = [s.id for s in slices if s.id not in order]
    if missing:
        raise ValidationError(f"slices {missing} missing from the assembly order")
    count = len(plan.slice_order)
    vectors = []
    for s in slices:
        normal, u_ax, v_ax = slice_axes(s.orientation, orientations)
        center = [0.0, 0.0, 0.0]
        center[normal] = s.plane_coord
        center[u_ax] = (s.u_range[0] + s.u_range[1]) / 2.0
        center[v_ax] = (s.v_range[0] + s.v_range[1]) / 2.0
        x, y, z = (center[i] / dims[i] for i in range(3))
        d = order[s.id] / (count - 1) if count > 1 else 0.0
        vectors.append(FeatureVector(slice_id=s.id, v=(x, y, z, d)))
    return vectors


@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray  # (4,)
    directions: np.ndarray  # (2, 4), orthonormal rows


def pca_2d(vectors: list[FeatureVector]) -> tuple[PcaBasis, np.ndarray]:
    """Project features onto the top-2 variance directions.

    Degenerate ranks are completed with canonical orthonormal directions so
    the basis is always usable; projections along completed directions are
    zero by construction.
    """
    data = np.array([fv.v for fv in vectors], dtype=np.float64)
    mean = data.mean(axis=0)
    centered = data - mean
    cov = (centered.T @ centered) / max(len(vectors), 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    tol = 1e-12 * max(float(eigvals[0]), 1.0)
    directions: list[np.ndarray] = []
    for i in range(2):
        if eigvals[i] > tol:
            d = eigvecs[:, i]
            # deterministic sign: biggest-magnitude component positive
            j = int(np.argmax(np.abs(d)))
            if d[j] < 0:
                d = -d
            directions.append(d)
    for e in np.eye(4):
        if len(directions) == 2:
            break
        d = e.copy()
        for u in directions:
            d -= (d @ u) * u
        norm = np.linalg.norm(d)
        if norm > 1e-9:
            directions.append(d / norm)
    basis = PcaBasis(mean=mean, directions=np.vstack(directions))
    return basis, centered @ basis.directions.T


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, 2)
    assignment: np.ndarray  # (n,) cluster index per point
    pca: PcaBasis
    wcss_curve: tuple[float, ...]  # wcss for k = 1..len(curve)


def _lloyd(points: np.ndarray, k: int, first_idx: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Deterministic k-means: farthest-point init from first_idx, then Lloyd."""
    n = len(points)
    chosen = [first_idx]
    d2 = np.sum((points - points[first_idx]) ** 2, axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d2))  # argmax takes the smallest index on ties
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    centroids = points[chosen].astype(np.float64)

    assignment = np.full(n, -1)
    for _ in range(100):
        dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_assignment = np.argmin(dists, axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(k):
            members = points[assignment == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    wcss = float(np.sum((points - centroids[assignment]) ** 2))
    return centroids, assignment, wcss


def kmeans_elbow(points: np.ndarray, k_max: int, seed: int = 0) -> tuple[int, np.ndarray, np.ndarray, tuple[float, ...]]:
    """Pick k by the elbow rule: smallest k whose WCSS improvement to k+1,
    relative to the total (k=1) WCSS, falls below the threshold."""
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    n = len(points)
    if n == 0:
        raise ValidationError("no points to cluster")
    rng = np.random.default_rng(seed)
    first_idx = int(rng.integers(n))
    upper = min(k_max, n)
    runs = [_lloyd(points, k, first_idx) for k in range(1, upper + 1)]
    curve = tuple(r[2] for r in runs)
    total = curve[0]
    best_k = upper
    for k in range(1, upper):
        improvement = (curve[k - 1] - curve[k]) / total if total > 0 else 0.0
        if improvement < ELBOW_IMPROVEMENT:
            best_k = k
            break
    centroids, assignment, _ = runs[best_k - 1]
    return best_k, centroids, assignment, curve


def cluster_slices(
    slices: list[Slice],
    plan: AssemblyPlan,
    dims: tuple[int, int, int],
    orientations: tuple[str, str] = ("x", "y"),
    k_max: int = 6,
    seed: int = 0,
) -> ClusterModel:
    vectors = build_vectors(slices, plan, dims, orientations)
    basis, projected = pca_2d(vectors)
    k, centroids, assignment, curve = kmeans_elbow(projected, k_max, seed)
    return ClusterModel(k=k, centroids=centroids, assignment=assignment, pca=basis, wcss_curve=curve)


Rect = tuple[float, float, float, float]  # x, y, w, h (mm)


@dataclass(frozen=True)
class Partition:
    page: int
    cluster: int
    rect: Rect


@dataclass(frozen=True)
class Placement:
    slice_id: int
    page: int
    x: float
    y: float
    rotated: bool
    w: float  # placed footprint, mm, rotation applied
    h: float


@dataclass(frozen=True)
class PageLayout:
    page_size: tuple[float, float]
    margin: float
    gutter: float
    sheets: int
    scale: float
    partitions: tuple[Partition, ...]
    placements: tuple[Placement, ...]
    cluster_of: dict[int, int]  # slice id -> cluster

    def to_json(self) -> dict:
        return {
            "page_size_mm": list(self.page_size),
            "margin_mm": self.margin,
            "gutter_mm": self.gutter,
            "sheets": self.sheets,
            "scale": self.scale,
            "partitions": [
                {"page": p.page, "cluster": p.cluster, "rect": list(p.rect)}
                for p in self.partitions
            ],
            "placements": [
                {
                    "slice": pl.slice_id,
                    "page": pl.page,
                    "x": pl.x,
                    "y": pl.y,
                    "rotated": pl.rotated,
                    "w": pl.w,
                    "h": pl.h,
                }
                for pl in self.placements
            ],
            "clusters": {str(sid): c for sid, c in sorted(self.cluster_of.items())},
        }


def partition_page(page_rect: Rect, weights: list[float]) -> list[Rect]:
    """kd-style split of a rectangle into len(weights) leaves whose areas
    are exactly proportional to the weights (cluster order preserved).

    Each node cuts across its longer side, which keeps small-share leaves
    as thick as a straight cut allows (strict axis alternation starves
    low-weight clusters into unpackable slivers on elongated parents).
    """
    total = sum(weights)
    if total <= 0:
        raise ValidationError("total slice area must be positive")

    def split(rect: Rect, ws: list[float]) -> list[Rect]:
        if len(ws) == 1:
            return [rect]
        # balanced contiguous split: prefix weight closest to half
        prefix, best_i, best_gap = 0.0, 1, math.inf
        acc = 0.0
        for i in range(1, len(ws)):
            acc += ws[i - 1]
            gap = abs(acc - (sum(ws) - acc))
            if gap < best_gap:
                best_gap, best_i, prefix = gap, i, acc
        frac = prefix / sum(ws)
        x, y, w, h = rect
        if w >= h:
            left = (x, y, w * frac, h)
            right = (x + w * frac, y, w * (1 - frac), h)
        else:
            left = (x, y, w, h * frac)
            right = (x, y + h * frac, w, h * (1 - frac))
        return split(left, ws[:best_i]) + split(right, ws[best_i:])

    return split(page_rect, list(weights))


class MaxRects:
    """Maximal Rectangles packer with best short side fit placement."""

    def __init__(self, width: float, height: float):
        self.free: list[Rect] = [(0.0, 0.0, width, height)]

    def insert(self, w: float, h: float, allow_rotation: bool = True) -> tuple[float, float, bool] | None:
        best = None  # (short_fit, long_fit, index, rotated)
        for i, (fx, fy, fw, fh) in enumerate(self.free):
            for rotated in ((False, True) if allow_rotation and w != h else (False,)):
                iw, ih = (h, w) if rotated else (w, h)
                if iw <= fw and ih <= fh:
                    short = min(fw - iw, fh - ih)
                    long_ = max(fw - iw, fh - ih)
                    cand = (short, long_, i, rotated)
                    if best is None or cand < best:
                        best = cand
        if best is None:
            return None
        _, _, idx, rotated = best
        fx, fy, _, _ = self.free[idx]
        iw, ih = (h, w) if rotated else (w, h)
        self._place((fx, fy, iw, ih))
        return fx, fy, rotated

    def _place(self, used: Rect) -> None:
        ux, uy, uw, uh = used
        new_free: list[Rect] = []
        for fx, fy, fw, fh in self.free:
            if ux >= fx + fw or ux + uw <= fx or uy >= fy + fh or uy + uh <= fy:
                new_free.append((fx, fy, fw, fh))
                continue
            # subtract: up to four maximal leftovers
            if ux > fx:
                new_free.append((fx, fy, ux - fx, fh))
            if ux + uw < fx + fw:
                new_free.append((ux + uw, fy, fx + fw - (ux + uw), fh))
            if uy > fy:
                new_free.append((fx, fy, fw, uy - fy))
            if uy + uh < fy + fh:
                new_free.append((fx, uy + uh, fw, fy + fh - (uy + uh)))
        self.free = _prune_contained(new_free)


def _prune_contained(rects: list[Rect]) -> list[Rect]:
    keep: list[Rect] = []
    for i, a in enumerate(rects):
        contained = False
        for j, b in enumerate(rects):
            if i == j:
                continue
            if (
                a[0] >= b[0]
                and a[1] >= b[1]
                and a[0] + a[2] <= b[0] + b[2]
                and a[1] + a[3] <= b[1] + b[3]
                and (a != b or i > j)
            ):
                contained = True
                break
        if not contained:
            keep.append(a)
    return keep


def slice_print_size(s: Slice, spacing: tuple[float, float, float], orientations: tuple[str, str]) -> tuple[float, float]:
    """Slice content size in mm at scale 1 (u width, v height)."""
    _, u_ax, v_ax = slice_axes(s.orientation, orientations)
    w = (s.u_range[1] - s.u_range[0]) * spacing[u_ax]
    h = (s.v_range[1] - s.v_range[0]) * spacing[v_ax]
    return w, h


def _assign_clusters_to_sheets(weights: list[float], sheets: int) -> list[int]:
    """Contiguous weight-balanced grouping of clusters onto sheets."""
    k = len(weights)
    used = min(sheets, k)
    target = sum(weights) / used if used else 0.0
    sheet_of = []
    sheet, acc = 0, 0.0
    for c in range(k):
        overflow = acc + weights[c] > target and acc > 0
        must_stay = (k - c) <= (used - 1 - sheet)  # never leave a sheet empty
        if overflow and sheet < used - 1 and not must_stay:
            sheet += 1
            acc = 0.0
        sheet_of.append(sheet)
        acc += weights[c]
    return sheet_of


def _try_pack(
    scale: float,
    order: list[Slice],
    sizes: dict[int, tuple[float, float]],
    cluster_of: dict[int, int],
    leaves: dict[int, tuple[int, Rect]],
    gutter: float,
) -> list[Placement] | None:
    # items carry half a gutter of padding per side; the padding (never the
    # content) may overhang the partition edge, so the packer bin is the
    # leaf grown by one gutter and content lands exactly inside the leaf
    packers = {c: MaxRects(rect[2] + gutter, rect[3] + gutter) for c, (_, rect) in leaves.items()}
    placements: list[Placement] = []
    for s in order:
        w0, h0 = sizes[s.id]
        w, h = w0 * scale + gutter, h0 * scale + gutter
        c = cluster_of[s.id]
        page, rect = leaves[c]
        pos = packers[c].insert(w, h)
        if pos is None:
            return None
        x, y, rotated = pos
        pw, ph = (h, w) if rotated else (w, h)
        placements.append(
            Placement(
                slice_id=s.id,
                page=page,
                x=rect[0] + x,
                y=rect[1] + y,
                rotated=rotated,
                w=pw - gutter,
                h=ph - gutter,
            )
        )
    return placements


def pack(
    slices: list[Slice],
    plan: AssemblyPlan,
    clusters: ClusterModel,
    spacing: tuple[float, float, float],
    orientations: tuple[str, str] = ("x", "y"),
    page: str | tuple[float, float] = "A4",
    sheets: int = 1,
    margin: float = DEFAULT_MARGIN_MM,
    gutter: float = DEFAULT_GUTTER_MM,
    slot_width_mm: float = 1.0,
) -> PageLayout:
    """Pack every slice at the largest feasible single global scale.

    The minimum acceptable scale keeps printed slots at least 1 mm wide;
    if even that does not fit, packing is infeasible and more sheets or a
    bigger page are needed.
    """
    if sheets < 1:
        raise ValidationError(f"sheets must be >= 1, got {sheets}")
    page_size = PAGE_SIZES_MM.get(page, page) if isinstance(page, str) else tuple(page)
    if isinstance(page_size, str):
        raise ValidationError(f"unknown page size {page!r}")
    page_w, page_h = (float(v) for v in page_size)
    if page_w - 2 * margin <= 0 or page_h - 2 * margin <= 0:
        raise ValidationError("margins leave no usable page area")

    order = sorted(slices, key=lambda s: plan.slice_order.index(s.id))
    sizes = {s.id: slice_print_size(s, spacing, orientations) for s in slices}
    cluster_of = {fvid: int(c) for fvid, c in zip((s.id for s in slices), clusters.assignment)}

    cluster_area = [0.0] * clusters.k
    for s in slices:
        w, h = sizes[s.id]
        cluster_area[cluster_of[s.id]] += w * h
    # clusters ordered by centroid first principal component for page order
    cluster_rank = sorted(range(clusters.k), key=lambda c: (float(clusters.centroids[c][0]), c))
    ranked_weights = [max(cluster_area[c], 1e-9) for c in cluster_rank]

    sheet_of_ranked = _assign_clusters_to_sheets(ranked_weights, sheets)
    usable: Rect = (margin, margin, page_w - 2 * margin, page_h - 2 * margin)
    leaves: dict[int, tuple[int, Rect]] = {}
    partitions: list[Partition] = []
    n_pages = max(sheet_of_ranked) + 1 if sheet_of_ranked else 1
    for pg in range(n_pages):
        members = [i for i, sh in enumerate(sheet_of_ranked) if sh == pg]
        rects = partition_page(usable, [ranked_weights[i] for i in members])
        for i, rect in zip(members, rects):
            cluster = cluster_rank[i]
            leaves[cluster] = (pg, rect)
            partitions.append(Partition(page=pg, cluster=cluster, rect=rect))

    def feasible(scale: float) -> list[Placement] | None:
        return _try_pack(scale, order, sizes, cluster_of, leaves, gutter)

    scale_min = LEGIBLE_SLOT_FRACTION * MIN_PRINT_SLOT_MM / slot_width_mm
    base = feasible(scale_min)
    if base is None:
        total_area = sum(
            (w * scale_min + gutter) * (h * scale_min + gutter) for w, h in sizes.values()
        )
        need = math.ceil(total_area / (usable[2] * usable[3]))
        raise InfeasibleError(
            "slices do not fit even at the minimum legible scale "
            f"(printed slot width below {MIN_PRINT_SLOT_MM} mm)",
            hint=f"try --sheets {max(need, sheets + 1)} or a larger page",
        )
    lo = scale_min
    hi = scale_min * 2
    for _ in range(64):
        if feasible(hi) is None:
            break
        lo = hi
        hi *= 2
    else:
        raise ValidationError("packing feasibility did not bound; check slice sizes")
    while hi - lo > SCALE_TOLERANCE * lo:
        mid = (lo + hi) / 2.0
        if feasible(mid) is None:
            hi = mid
        else:
            lo = mid
    placements = feasible(lo)
    assert placements is not None
    return PageLayout(
        page_size=(page_w, page_h),
        margin=margin,
        gutter=gutter,
        sheets=n_pages,
        scale=lo,
        partitions=tuple(partitions),
        placements=tuple(placements),
        cluster_of=cluster_of,
    )
