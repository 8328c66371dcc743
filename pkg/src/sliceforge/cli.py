"""Command-line interface.

`sliceforge build` runs the whole pipeline; `slice`, `hinge`, `order`,
`pack`, and `export` run single stages on JSON artifacts so intermediate
results can be inspected or golden-tested. Exit codes: 0 ok, 2 validation,
3 infeasible, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from . import pipeline
from .errors import SliceforgeError, ValidationError
from .hinges import hinges_from_json
from .layout import DEFAULT_GUTTER_MM, DEFAULT_MARGIN_MM, PAGE_SIZES_MM
from .octree import slices_from_json
from .ordering import EXACT_THRESHOLD, export_lp
from .pipeline import GridInfo
from .volume import quantize


def _parse_page(text: str) -> str | tuple[float, float]:
    if text in PAGE_SIZES_MM:
        return text
    try:
        w, h = text.lower().split("x")
        return (float(w), float(h))
    except ValueError:
        raise ValidationError(f"page must be A4, A3, or WxH in mm, got {text!r}")


def _parse_orientations(text: str) -> tuple[str, str]:
    parts = tuple(p.strip() for p in text.replace(",", " ").split())
    if len(parts) == 1 and len(parts[0]) == 2:
        parts = (parts[0][0], parts[0][1])
    if len(parts) != 2 or any(p not in ("x", "y", "z") for p in parts) or parts[0] == parts[1]:
        raise ValidationError(f"orientations must be two distinct axes from x,y,z, got {text!r}")
    return parts


@contextmanager
def _stage(name: str):
    """Tag pipeline errors with the stage they came from."""
    try:
        yield
    except SliceforgeError as exc:
        exc.stage = name
        raise


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="raw volume file")
    p.add_argument("--header", help="JSON sidecar header for --input")
    p.add_argument("--tf", help="transfer-function JSON, or 'auto' with meshes")
    p.add_argument("--meshes", nargs="+", help="OBJ files (one intensity per mesh)")
    p.add_argument("--resolution", type=int, default=128, help="voxelization grid per axis for meshes")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON config file; flags override its keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sliceforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run the full pipeline")
    _add_input_args(b)
    _add_common_args(b)
    b.add_argument("--level", type=int, default=3, help="highest octree level L")
    b.add_argument("--orientations", default="x,y", help="two slicing plane normals, e.g. x,y")
    b.add_argument("--page", default="A4", help="A4, A3, or WxH in mm")
    b.add_argument("--sheets", type=int, default=1)
    b.add_argument("--slot-width", dest="slot_width", type=float, default=1.0, help="slot width in model mm")
    b.add_argument("--dpi", type=float, default=4.0, help="raster density in px per mm")
    b.add_argument("--k-max", dest="k_max", type=int, default=6)
    b.add_argument("--margin", type=float, default=DEFAULT_MARGIN_MM)
    b.add_argument("--gutter", type=float, default=DEFAULT_GUTTER_MM)
    b.add_argument("--perforate", action="store_true")
    b.add_argument("--exact-threshold", dest="exact_threshold", type=int, default=EXACT_THRESHOLD)
    b.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("slice", help="octree partition + slice unification")
    _add_input_args(s)
    _add_common_args(s)
    s.add_argument("--level", type=int, default=3)
    s.add_argument("--orientations", default="x,y")
    s.add_argument("--out", required=True, help="slices artifact path")

    h = sub.add_parser("hinge", help="classify slice intersections")
    h.add_argument("--in", dest="inp", required=True, help="slices artifact")
    h.add_argument("--out", required=True, help="hinges artifact path")
    _add_common_args(h)

    o = sub.add_parser("order", help="solve the assembly order")
    o.add_argument("--in", dest="inp", required=True, help="hinges artifact")
    o.add_argument("--out", required=True, help="plan artifact path")
    o.add_argument("--exact-threshold", dest="exact_threshold", type=int, default=EXACT_THRESHOLD)
    o.add_argument("--lp", help="also export the big-M MILP in LP format")
    _add_common_args(o)

    k = sub.add_parser("pack", help="cluster, partition pages, and pack slices")
    k.add_argument("--in", dest="inp", required=True, help="hinges artifact")
    k.add_argument("--plan", required=True, help="plan artifact")
    k.add_argument("--out", required=True, help="layout artifact path")
    k.add_argument("--page", default="A4")
    k.add_argument("--sheets", type=int, default=1)
    k.add_argument("--slot-width", dest="slot_width", type=float, default=1.0)
    k.add_argument("--k-max", dest="k_max", type=int, default=6)
    k.add_argument("--margin", type=float, default=DEFAULT_MARGIN_MM)
    k.add_argument("--gutter", type=float, default=DEFAULT_GUTTER_MM)
    _add_common_args(k)

    e = sub.add_parser("export", help="emit print pages, instructions, manifest")
    e.add_argument("--in", dest="inp", required=True, help="layout artifact")
    e.add_argument("--hinges", required=True, help="hinges artifact")
    e.add_argument("--plan", required=True, help="plan artifact")
    _add_input_args(e)
    _add_common_args(e)
    e.add_argument("--dpi", type=float, default=4.0)
    e.add_argument("--perforate", action="store_true")
    e.add_argument("--out", required=True, help="output directory")
    return parser


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Config file supplies values only where the flag kept its default."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc}")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    defaults = {a.dest: a.default for a in sub_action.choices[args.command]._actions}
    for key, value in cfg.items():
        if not hasattr(args, key):
            raise ValidationError(f"unknown config key {key!r} for command {args.command!r}")
        if getattr(args, key) == defaults.get(key):
            setattr(args, key, value)


def _load_labels(args):
    with _stage("ingest"):
        volume, tf = pipeline.load_input(
            args.input, args.header, args.tf, args.meshes, args.resolution
        )
        return quantize(volume, tf), tf


def cmd_build(args) -> int:
    orientations = _parse_orientations(args.orientations)
    page = _parse_page(args.page)
    labels, tf = _load_labels(args)
    grid = GridInfo(labels.dims, labels.spacing, labels.origin, orientations)

    with _stage("octree"):
        root, slices = pipeline.stage_slice(labels, args.level, orientations)
    with _stage("hinge"):
        hinges = pipeline.stage_hinges(slices, orientations)
    with _stage("order"):
        plan, _report, _problem = pipeline.stage_order(hinges, slices, grid, args.exact_threshold)
    with _stage("pack"):
        _clusters, layout = pipeline.stage_pack(
            slices, plan, grid, page, args.sheets, args.slot_width,
            args.margin, args.gutter, args.k_max, args.seed,
        )
    with _stage("export"):
        manifest = pipeline.stage_export(
            args.out, labels, tf, slices, hinges, plan, layout, grid,
            slot_width_mm=args.slot_width, seed=args.seed,
            px_per_mm=args.dpi, perforate=args.perforate,
        )
    s = manifest["summary"]
    print(
        f"{s['slice_count']} slices, {s['hinge_count']} hinges, k={s['clusters']}, "
        f"scale={s['scale']:.3f}, pages={s['pages']}, balanced={s['balanced']}"
    )
    print(f"wrote {Path(args.out) / 'manifest.json'}")
    return 0


def cmd_slice(args) -> int:
    orientations = _parse_orientations(args.orientations)
    labels, _tf = _load_labels(args)
    grid = GridInfo(labels.dims, labels.spacing, labels.origin, orientations)
    with _stage("octree"):
        _root, slices = pipeline.stage_slice(labels, args.level, orientations)
    pipeline.write_artifact(
        args.out, {"grid": grid.to_json(), "slices": pipeline.slices_to_json(slices)}
    )
    print(f"{len(slices)} slices -> {args.out}")
    return 0


def cmd_hinge(args) -> int:
    art = pipeline.read_artifact(args.inp, ("grid", "slices"))
    grid = GridInfo.from_json(art["grid"])
    slices = slices_from_json(art["slices"])
    with _stage("hinge"):
        hinges = pipeline.stage_hinges(slices, grid.orientations)
    pipeline.write_artifact(
        args.out,
        {"grid": art["grid"], "slices": art["slices"], "hinges": pipeline.hinges_to_json(hinges)},
    )
    print(f"{len(hinges)} hinges -> {args.out}")
    return 0


def cmd_order(args) -> int:
    art = pipeline.read_artifact(args.inp, ("grid", "slices", "hinges"))
    grid = GridInfo.from_json(art["grid"])
    slices = slices_from_json(art["slices"])
    hinges = hinges_from_json(art["hinges"])
    with _stage("order"):
        plan, _report, problem = pipeline.stage_order(hinges, slices, grid, args.exact_threshold)
    pipeline.write_artifact(args.out, pipeline.plan_to_json(plan))
    if args.lp:
        Path(args.lp).write_text(export_lp(problem))
    print(f"plan ({'exact' if plan.exact else 'heuristic'}) -> {args.out}")
    return 0


def cmd_pack(args) -> int:
    page = _parse_page(args.page)
    art = pipeline.read_artifact(args.inp, ("grid", "slices"))
    grid = GridInfo.from_json(art["grid"])
    slices = slices_from_json(art["slices"])
    plan = pipeline.plan_from_json(
        pipeline.read_artifact(args.plan, ("hinge_order", "slice_order", "objective", "exact"))
    )
    with _stage("pack"):
        _clusters, layout = pipeline.stage_pack(
            slices, plan, grid, page, args.sheets, args.slot_width,
            args.margin, args.gutter, args.k_max, args.seed,
        )
    record = layout.to_json()
    record["slot_width_mm"] = args.slot_width
    record["seed"] = args.seed
    pipeline.write_artifact(args.out, record)
    print(f"scale {layout.scale:.3f} on {layout.sheets} page(s) -> {args.out}")
    return 0


def cmd_export(args) -> int:
    layout_art = pipeline.read_artifact(
        args.inp,
        ("page_size_mm", "margin_mm", "gutter_mm", "sheets", "scale",
         "partitions", "placements", "clusters", "slot_width_mm", "seed"),
    )
    layout, slot_width, seed = pipeline.layout_from_json(layout_art)
    hinge_art = pipeline.read_artifact(args.hinges, ("grid", "slices", "hinges"))
    grid = GridInfo.from_json(hinge_art["grid"])
    slices = slices_from_json(hinge_art["slices"])
    hinges = hinges_from_json(hinge_art["hinges"])
    plan = pipeline.plan_from_json(
        pipeline.read_artifact(args.plan, ("hinge_order", "slice_order", "objective", "exact"))
    )
    labels, tf = _load_labels(args)
    if labels.dims != grid.dims:
        raise ValidationError(
            f"volume dims {labels.dims} do not match the artifact grid {grid.dims}"
        )
    with _stage("export"):
        manifest = pipeline.stage_export(
            args.out, labels, tf, slices, hinges, plan, layout, grid,
            slot_width_mm=slot_width, seed=seed,
            px_per_mm=args.dpi, perforate=args.perforate,
        )
    print(f"wrote {len(manifest['pages'])} page(s) -> {args.out}")
    return 0


_COMMANDS = {
    "build": cmd_build,
    "slice": cmd_slice,
    "hinge": cmd_hinge,
    "order": cmd_order,
    "pack": cmd_pack,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, parser)
        return _COMMANDS[args.command](args)
    except SliceforgeError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        if exc.hint:
            print(f"hint: {exc.hint}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
