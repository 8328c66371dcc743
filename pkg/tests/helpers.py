"""Shared test utilities: file fixtures and independent oracles.

The oracles here deliberately re-derive behavior with different mechanics
than the package (mask painting instead of rectangle merging, explicit
permutation enumeration instead of branch and bound) so they stay
independent of the code paths they check.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import numpy as np

from sliceforge.octree import Slice
from sliceforge.volume import ScalarVolume, TransferFunction, save_volume


def write_volume_files(tmp: Path, volume: ScalarVolume, tf: TransferFunction, stem: str = "vol", dtype: str = "f32"):
    raw = tmp / f"{stem}.raw"
    header = tmp / f"{stem}.json"
    tf_path = tmp / f"{stem}_tf.json"
    save_volume(volume, raw, header, dtype=dtype)
    tf_path.write_text(json.dumps(tf.to_json()))
    return raw, header, tf_path


# --- independent slice-count oracle ----------------------------------------


def oracle_slice_count(labels: np.ndarray, max_level: int, orientations=("x", "y")) -> int:
    """Brute-force reimplementation of the subdivision predicate and slice
    counting: recursion over octants collecting raw plane rectangles, then
    mask-based connected-component unification per plane."""
    axis_of = {"x": 0, "y": 1, "z": 2}
    normals = [axis_of[o] for o in orientations]
    up = next(a for a in range(3) if a not in normals)
    planes: dict[tuple[int, int], list[tuple]] = {}

    def distinct(b):
        sub = labels[b[0][0]:b[0][1], b[1][0]:b[1][1], b[2][0]:b[2][1]]
        return {int(v) for v in np.unique(sub)} - {0}

    def visit(b, level):
        for normal in normals:
            lo, hi = b[normal]
            p = (lo + hi) // 2
            if p != lo and p != hi:
                u_ax = normals[1] if normal == normals[0] else normals[0]
                planes.setdefault((normal, p), []).append(
                    (b[u_ax][0], b[up][0], b[u_ax][1], b[up][1])
                )
        if (
            len(distinct(b)) >= 2
            and level < max_level
            and all(hi - lo >= 2 for lo, hi in b)
        ):
            mids = [(lo + hi) // 2 for lo, hi in b]
            for picks in itertools.product((0, 1), repeat=3):
                child = tuple(
                    (b[a][0], mids[a]) if picks[a] == 0 else (mids[a], b[a][1])
                    for a in range(3)
                )
                visit(child, level + 1)

    bounds = tuple((0, int(d)) for d in labels.shape)
    visit(bounds, 1)

    count = 0
    for (normal, _p), rects in planes.items():
        u_ax = normals[1] if normal == normals[0] else normals[0]
        mask_dims = (labels.shape[u_ax], labels.shape[up])
        current = list(rects)
        while True:
            mask = np.zeros(mask_dims, dtype=bool)
            for u0, v0, u1, v1 in current:
                mask[u0:u1, v0:v1] = True
            comps = _components(mask)
            boxes = []
            for comp in comps:
                us, vs = zip(*comp)
                boxes.append((min(us), min(vs), max(us) + 1, max(vs) + 1))
            if sorted(boxes) == sorted(set(current)):
                break
            current = boxes
        count += len(current)
    return count


def _components(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    """4-connected components by BFS (edge adjacency, not corners)."""
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for u in range(mask.shape[0]):
        for v in range(mask.shape[1]):
            if not mask[u, v] or seen[u, v]:
                continue
            queue = [(u, v)]
            seen[u, v] = True
            comp = []
            while queue:
                cu, cv = queue.pop()
                comp.append((cu, cv))
                for du, dv in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nu, nv = cu + du, cv + dv
                    if 0 <= nu < mask.shape[0] and 0 <= nv < mask.shape[1]:
                        if mask[nu, nv] and not seen[nu, nv]:
                            seen[nu, nv] = True
                            queue.append((nu, nv))
            comps.append(comp)
    return comps


# --- exhaustive order oracle ------------------------------------------------


def oracle_min_objective(hinge_ids, backbone, triples, w) -> tuple[float, tuple] | None:
    """Exhaustive minimum over all feasible permutations; None if infeasible."""
    others = [h for h in hinge_ids if h != backbone]
    best = None
    for perm in itertools.permutations(others):
        order = (backbone,) + perm
        pos = {h: i for i, h in enumerate(order)}
        if any(not (pos[t.j] < pos[t.i] and pos[t.j] < pos[t.k]) for t in triples):
            continue
        obj = sum(w[h] * pos[h] for h in order)
        key = (obj, order)
        if best is None or key < best:
            best = key
    return best


# --- synthetic slice models --------------------------------------------------


def synthetic_slices(specs) -> list[Slice]:
    """specs: (orientation, plane, extent, source_nodes) tuples."""
    return [
        Slice(id=i, orientation=o, plane_coord=p, extent=tuple(e), source_nodes=tuple(src))
        for i, (o, p, e, src) in enumerate(specs)
    ]


def stopper_model() -> list[Slice]:
    """Two full root slices plus a short hanging slice whose contact line is
    on its own boundary: yields one cut-through with a stopper."""
    return synthetic_slices(
        [
            ("x", 32, (0, 0, 64, 64), (0,)),
            ("y", 32, (0, 0, 64, 64), (0,)),
            ("y", 16, (32, 16, 64, 48), (3,)),
        ]
    )
