"""Batch command-line front-end.

Commands: synth, encode, reconstruct, eval, tile-plan, merge, info,
import-raw. Every command resolves its parameters as config-file values
overridden by CLI flags, and writes a provenance log (resolved config, input
and output checksums, library versions) next to its primary output so runs
can be reproduced and compared bit-for-bit. Provenance deliberately excludes
timestamps: re-running a command with identical inputs must produce
byte-identical files.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 validation failure
(malformed files, dimension mismatches, bad parameter values). Failures
print a single machine-parsable line to stderr:
``gradflow3d: error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import PipelineConfig
from .encode import encode, encode_foreground
from .evaluate import match_and_dice, reports_to_csv, summarize, summary_to_text
from .reconstruct import format_disposition_report, reconstruct_pipeline
from .synth import generate_phantom
from .tiling import extract_patch, merge_tiles, plan_tiles, read_manifest, write_manifest
from .volume import Volume, import_raw, read_volume, write_volume

EXIT_BAD_ARGS = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_provenance(path, command: str, cfg: PipelineConfig,
                      inputs: list, outputs: list) -> None:
    lines = [
        "# gradflow3d provenance",
        f"command = {command}",
        f"version.gradflow3d = {__version__}",
        f"version.numpy = {np.__version__}",
        f"version.scipy = {scipy.__version__}",
    ]
    for key, value in sorted(cfg.as_dict().items()):
        lines.append(f"config.{key} = {value}")
    for p in inputs:
        lines.append(f"input = {p} sha256:{_sha256(p)}")
    for p in outputs:
        lines.append(f"output = {p} sha256:{_sha256(p)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _finish(args, command: str, cfg: PipelineConfig, inputs: list, outputs: list) -> int:
    prov = args.provenance
    if prov is None and outputs:
        prov = str(outputs[0]) + ".prov.txt"
    if prov is not None:
        _write_provenance(prov, command, cfg, inputs, outputs)
    return 0


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    flags = {name: getattr(args, name) for name in PipelineConfig._PARSERS
             if hasattr(args, name)}
    return cfg.override(**flags)


def _triple(text: str) -> tuple[int, int, int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z, got {text!r}")
    return tuple(int(p) for p in parts)


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    labels, image = generate_phantom(cfg.phantom_spec())
    write_volume(args.out_labels, labels)
    write_volume(args.out_image, image)
    return _finish(args, "synth", cfg, [], [args.out_labels, args.out_image])


def cmd_encode(args) -> int:
    cfg = _load_config(args)
    labels = read_volume(args.labels)
    field = encode(labels, cfg.encoding_kind(), cfg.encode_params())
    fg = encode_foreground(labels)
    write_volume(args.out_field, field)
    write_volume(args.out_foreground, fg)
    return _finish(args, "encode", cfg, [args.labels],
                   [args.out_field, args.out_foreground])


def cmd_reconstruct(args) -> int:
    cfg = _load_config(args)
    if args.prediction:
        pred = read_volume(args.prediction)
        if pred.channels != 4:
            raise ValueError(f"{args.prediction}: combined prediction needs 4 channels "
                             f"(fg, gx, gy, gz), got {pred.channels}")
        fg = Volume(pred.data[0:1])
        field = Volume(pred.data[1:4])
        inputs = [args.prediction]
    else:
        if not (args.field and args.foreground):
            raise ValueError("reconstruct needs either --prediction or both --field and --foreground")
        field = read_volume(args.field)
        fg = read_volume(args.foreground)
        inputs = [args.field, args.foreground]
    labels, rows = reconstruct_pipeline(field, fg, cfg.reconstruction_params(),
                                        cfg.filter_params(), cfg.encode_params())
    write_volume(args.out, labels)
    report_path = args.report or str(args.out) + ".report.txt"
    Path(report_path).write_text(format_disposition_report(rows))
    return _finish(args, "reconstruct", cfg, inputs, [args.out, report_path])


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    gt = read_volume(args.gt)
    pred = read_volume(args.pred)
    reports = match_and_dice(gt, pred)
    if not reports:
        raise ValueError(f"{args.gt}: ground truth contains no instances to evaluate")
    summary = summarize(reports)
    Path(args.report).write_text(reports_to_csv(reports))
    Path(args.summary).write_text(summary_to_text(summary))
    return _finish(args, "eval", cfg, [args.gt, args.pred], [args.report, args.summary])


def cmd_tile_plan(args) -> int:
    cfg = _load_config(args)
    if args.volume:
        volume = read_volume(args.volume)
        dims = volume.dims
        inputs = [args.volume]
    elif args.dims:
        volume = None
        dims = args.dims
        inputs = []
    else:
        raise ValueError("tile-plan needs either --volume or --dims")
    grid = plan_tiles(dims, cfg.patch_dims, cfg.overlap)
    for w in grid.warnings:
        print(f"tile-plan warning: {w}", file=sys.stderr)

    outputs = []
    manifest_dir = Path(args.manifest).resolve().parent
    tile_paths = []
    for i, origin in enumerate(grid.origins):
        if volume is not None:
            if not args.tile_dir:
                raise ValueError("tile-plan with --volume needs --tile-dir for the patch files")
            tile_dir = Path(args.tile_dir)
            tile_dir.mkdir(parents=True, exist_ok=True)
            tile_file = tile_dir / f"tile_{i:04d}.gf3d"
            write_volume(tile_file, extract_patch(volume, origin, grid.patch_dims))
            rel = tile_file.resolve().relative_to(manifest_dir) \
                if tile_file.resolve().is_relative_to(manifest_dir) else tile_file.resolve()
            tile_paths.append([str(rel)])
            outputs.append(str(tile_file))
        else:
            tile_paths.append([f"tile_{i:04d}.gf3d"])
    write_manifest(args.manifest, grid, tile_paths)
    outputs.insert(0, args.manifest)
    return _finish(args, "tile-plan", cfg, inputs, outputs)


def cmd_merge(args) -> int:
    cfg = _load_config(args)
    grid, tile_paths = read_manifest(args.manifest)
    base = Path(args.manifest).resolve().parent
    resolved = []
    for paths in tile_paths:
        p = Path(paths[-1])
        resolved.append(p if p.is_absolute() else base / p)
    patches = [read_volume(p) for p in resolved]
    merged = merge_tiles(grid, patches)
    write_volume(args.out, merged)
    return _finish(args, "merge", cfg, [args.manifest, *map(str, resolved)], [args.out])


def cmd_info(args) -> int:
    cfg = _load_config(args)
    v = read_volume(args.path)
    nx, ny, nz = v.dims
    print(f"path = {args.path}")
    print(f"dims = {nx},{ny},{nz}")
    print(f"channels = {v.channels}")
    print(f"dtype = {v.dtype.name}")
    print(f"voxels = {nx * ny * nz}")
    if args.provenance:
        _write_provenance(args.provenance, "info", cfg, [args.path], [])
    return 0


def cmd_import_raw(args) -> int:
    cfg = _load_config(args)
    v = import_raw(args.raw, args.dims, args.channels, args.dtype)
    write_volume(args.out, v)
    return _finish(args, "import-raw", cfg, [args.raw], [args.out])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradflow3d",
        description="3D gradient-flow instance segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--threads", type=int, help="worker threads (0 = auto)")
        p.add_argument("--provenance", help="provenance log path "
                                            "(default: <first output>.prov.txt)")

    p = sub.add_parser("synth", help="generate a Voronoi phantom + pseudo image")
    common(p)
    p.add_argument("--dims", type=_triple)
    p.add_argument("--cells", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--min-seed-separation", dest="min_seed_separation", type=float)
    p.add_argument("--membrane-width", dest="membrane_width", type=int)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-image", required=True)
    p.set_defaults(run=cmd_synth)

    p = sub.add_parser("encode", help="encode labels into gradient + foreground maps")
    common(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--encoding", choices=["tanh", "heat"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-diff-factor", dest="n_diff_factor", type=float)
    p.add_argument("--use-log-heat", dest="use_log_heat",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--out-field", required=True)
    p.add_argument("--out-foreground", required=True)
    p.set_defaults(run=cmd_encode)

    p = sub.add_parser("reconstruct", help="labels from a field + foreground pair")
    common(p)
    p.add_argument("--field")
    p.add_argument("--foreground")
    p.add_argument("--prediction", help="combined 4-channel (fg, gx, gy, gz) volume")
    p.add_argument("--s-recon", dest="s_recon", type=int)
    p.add_argument("--n-recon", dest="n_recon", type=int)
    p.add_argument("--r-closing", dest="r_closing", type=int)
    p.add_argument("--fg-threshold", dest="fg_threshold", type=float)
    p.add_argument("--connectivity", type=int, choices=[6, 26])
    p.add_argument("--r-min", dest="r_min", type=float)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--p-overlap", dest="p_overlap", type=float)
    p.add_argument("--err-gradient", dest="err_gradient", type=float)
    p.add_argument("--encoding", choices=["tanh", "heat"],
                   help="encoding used to recompute instance flows for filtering")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="disposition table path (default: <out>.report.txt)")
    p.set_defaults(run=cmd_reconstruct)

    p = sub.add_parser("eval", help="per-instance Dice between two label volumes")
    common(p)
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True, help="per-instance CSV output")
    p.add_argument("--summary", required=True, help="summary statistics output")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("tile-plan", help="plan tiles; optionally extract patch files")
    common(p)
    p.add_argument("--volume", help="volume to tile (GF3D)")
    p.add_argument("--dims", type=_triple, help="plan for these dims without extracting")
    p.add_argument("--patch", dest="patch_dims", type=_triple)
    p.add_argument("--overlap", dest="overlap", type=_triple)
    p.add_argument("--tile-dir", help="directory for extracted patch files")
    p.add_argument("--manifest", required=True)
    p.set_defaults(run=cmd_tile_plan)

    p = sub.add_parser("merge", help="merge tiles listed in a manifest")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_merge)

    p = sub.add_parser("info", help="print GF3D header fields")
    common(p)
    p.add_argument("path")
    p.set_defaults(run=cmd_info)

    p = sub.add_parser("import-raw", help="wrap a raw little-endian array as GF3D")
    common(p)
    p.add_argument("--raw", required=True)
    p.add_argument("--dims", type=_triple, required=True)
    p.add_argument("--channels", type=int, required=True)
    p.add_argument("--dtype", choices=["float32", "uint8", "uint16", "uint32"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_import_raw)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except OSError as exc:
        print(f"gradflow3d: error[{EXIT_IO}]: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"gradflow3d: error[{EXIT_VALIDATION}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
