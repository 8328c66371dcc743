"""Pairwise slice intersections (hinges), slot classification, and the
precedence structure the assembly-order optimizer consumes.

Every hinge is the vertical segment where two perpendicular slices cross.
Up-down hinges split the segment into a top slot on the first plane family
and a bottom slot on the second; cut-throughs put a full window on the
taller slice and nothing on the shorter one, plus a stopper tab when the
contact line sits on the shorter slice's boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InfeasibleError, ValidationError
from .octree import OctreeNode, Slice


class HingeKind(str, Enum):
    UP_DOWN = "up_down"
    CUT_THROUGH = "cut_through"


class SlotKind(str, Enum):
    TOP = "top"
    BOTTOM = "bottom"
    WINDOW = "window"
    NONE = "none"


@dataclass(frozen=True)
class Hinge:
    """Crossing of slice_a (first plane family) and slice_b (second).

    u_a / u_b are the in-plane horizontal positions of the segment on each
    slice (voxel units); (v0, v1) is the segment's interval along the up
    axis. slot_a / slot_b say what gets cut on each slice.
    """

    id: int
    slice_a: int
    slice_b: int
    u_a: int
    u_b: int
    v0: int
    v1: int
    kind: HingeKind
    slot_a: SlotKind
    slot_b: SlotKind
    stopper_on: int | None = None

    def slices(self) -> tuple[int, int]:
        return (self.slice_a, self.slice_b)

    def slot_on(self, slice_id: int) -> SlotKind:
        if slice_id == self.slice_a:
            return self.slot_a
        if slice_id == self.slice_b:
            return self.slot_b
        raise ValidationError(f"hinge {self.id} does not touch slice {slice_id}")

    def u_on(self, slice_id: int) -> int:
        if slice_id == self.slice_a:
            return self.u_a
        if slice_id == self.slice_b:
            return self.u_b
        raise ValidationError(f"hinge {self.id} does not touch slice {slice_id}")

    @property
    def length(self) -> int:
        return self.v1 - self.v0


@dataclass(frozen=True)
class PrecedenceTriple:
    """Cut-through j must be stitched before up-down neighbors i and k."""

    i: int
    j: int
    k: int
    host_slice: int


def _classify(za: tuple[int, int], zb: tuple[int, int]) -> tuple[HingeKind, bool]:
    """Returns (kind, window_on_a). Intervals are the slices' v extents."""
    if za == zb:
        return HingeKind.UP_DOWN, False
    # containment (possibly sharing one end) or, defensively, any partial
    # overlap: the taller slice carries the window
    len_a, len_b = za[1] - za[0], zb[1] - zb[0]
    if len_a == len_b:
        return HingeKind.CUT_THROUGH, True  # staggered equal heights: pick a
    return HingeKind.CUT_THROUGH, len_a > len_b


def compute_hinges(slices: list[Slice], orientations: tuple[str, str] = ("x", "y")) -> list[Hinge]:
    """One hinge per perpendicular slice pair whose rectangles cross."""
    family_a = [s for s in slices if s.orientation == orientations[0]]
    family_b = [s for s in slices if s.orientation == orientations[1]]
    hinges: list[Hinge] = []
    for a in family_a:
        for b in family_b:
            # the crossing line sits at (a.plane, b.plane); u on a slice runs
            # along the other family's normal
            u_on_a, u_on_b = b.plane_coord, a.plane_coord
            if not (a.u_range[0] <= u_on_a <= a.u_range[1]):
                continue
            if not (b.u_range[0] <= u_on_b <= b.u_range[1]):
                continue
            v0 = max(a.v_range[0], b.v_range[0])
            v1 = min(a.v_range[1], b.v_range[1])
            if v1 - v0 <= 0:
                continue  # corner touch or disjoint heights
            kind, window_on_a = _classify(a.v_range, b.v_range)
            stopper = None
            if kind == HingeKind.UP_DOWN:
                slot_a, slot_b = SlotKind.TOP, SlotKind.BOTTOM
            else:
                slot_a = SlotKind.WINDOW if window_on_a else SlotKind.NONE
                slot_b = SlotKind.NONE if window_on_a else SlotKind.WINDOW
                small = b if window_on_a else a
                small_u = u_on_b if window_on_a else u_on_a
                if small_u == small.u_range[0] or small_u == small.u_range[1]:
                    stopper = small.id  # none slot on the boundary: needs a tab
            hinges.append(
                Hinge(
                    id=-1,
                    slice_a=a.id,
                    slice_b=b.id,
                    u_a=u_on_a,
                    u_b=u_on_b,
                    v0=v0,
                    v1=v1,
                    kind=kind,
                    slot_a=slot_a,
                    slot_b=slot_b,
                    stopper_on=stopper,
                )
            )
    hinges.sort(key=lambda h: (h.u_b, h.u_a, h.v0, h.v1))
    return [
        Hinge(
            id=i,
            slice_a=h.slice_a,
            slice_b=h.slice_b,
            u_a=h.u_a,
            u_b=h.u_b,
            v0=h.v0,
            v1=h.v1,
            kind=h.kind,
            slot_a=h.slot_a,
            slot_b=h.slot_b,
            stopper_on=h.stopper_on,
        )
        for i, h in enumerate(hinges)
    ]


def find_backbone(hinges: list[Hinge], slices: list[Slice], root: OctreeNode | int = 0) -> int:
    """The hinge joining the two root-node slices; stitched first for stability."""
    if not hinges:
        raise InfeasibleError("no hinges: the model cannot be stabilized")
    root_id = root.id if isinstance(root, OctreeNode) else int(root)
    by_id = {s.id: s for s in slices}
    candidates = [
        h
        for h in hinges
        if root_id in by_id[h.slice_a].source_nodes and root_id in by_id[h.slice_b].source_nodes
    ]
    if not candidates:
        raise InfeasibleError(
            "no hinge joins the two root slices: the model cannot be stabilized"
        )
    return min(
        candidates,
        key=lambda h: (-h.length, -(by_id[h.slice_a].area + by_id[h.slice_b].area), h.id),
    ).id


def hinges_on_slice(hinges: list[Hinge], slice_id: int) -> list[Hinge]:
    """Hinges touching a slice, sorted by in-plane position."""
    mine = [h for h in hinges if slice_id in h.slices()]
    mine.sort(key=lambda h: (h.u_on(slice_id), h.v0, h.id))
    return mine


def collect_triples(hinges: list[Hinge], slices: list[Slice]) -> list[PrecedenceTriple]:
    """For each none-slot between up-down hinges, record the ordering triple."""
    triples: list[PrecedenceTriple] = []
    for s in slices:
        mine = hinges_on_slice(hinges, s.id)
        for m, h in enumerate(mine):
            if h.slot_on(s.id) != SlotKind.NONE:
                continue
            left = next(
                (g for g in reversed(mine[:m]) if g.kind == HingeKind.UP_DOWN), None
            )
            right = next((g for g in mine[m + 1 :] if g.kind == HingeKind.UP_DOWN), None)
            if left is not None and right is not None:
                triples.append(
                    PrecedenceTriple(i=left.id, j=h.id, k=right.id, host_slice=s.id)
                )
    return triples


def hinges_to_json(hinges: list[Hinge]) -> list[dict]:
    return [
        {
            "id": h.id,
            "slice_a": h.slice_a,
            "slice_b": h.slice_b,
            "u_a": h.u_a,
            "u_b": h.u_b,
            "v0": h.v0,
            "v1": h.v1,
            "kind": h.kind.value,
            "slot_a": h.slot_a.value,
            "slot_b": h.slot_b.value,
            "stopper_on": h.stopper_on,
        }
        for h in hinges
    ]


def hinges_from_json(items: list[dict]) -> list[Hinge]:
    try:
        return [
            Hinge(
                id=int(d["id"]),
                slice_a=int(d["slice_a"]),
                slice_b=int(d["slice_b"]),
                u_a=int(d["u_a"]),
                u_b=int(d["u_b"]),
                v0=int(d["v0"]),
                v1=int(d["v1"]),
                kind=HingeKind(d["kind"]),
                slot_a=SlotKind(d["slot_a"]),
                slot_b=SlotKind(d["slot_b"]),
                stopper_on=None if d.get("stopper_on") is None else int(d["stopper_on"]),
            )
            for d in items
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"hinges artifact malformed: {exc}") from exc
