"""Overlapping tile decomposition and border-down-weighted merging.

Tiles are placed on a stride of (patch - overlap) per axis with the last tile
shifted inward so no padding is ever introduced. Merging averages overlapping
patches with a pyramid weight window that is 1 on the patch interior and
ramps down linearly within overlap/2 of each face, so borders contribute
little where a better-centered tile is available.

The tile manifest is a plain text file that lets an external predictor
process tiles out-of-process:

    # GF3D tile manifest
    volume_dims 96 96 96
    patch_dims 64 64 64
    overlap 16 16 16
    tile 0 0 0 0 tiles/t0000.gf3d [more paths ...]

Tile lines carry the tile index, the (ox oy oz) origin, and one or more file
paths (relative to the manifest); a predictor appends its output path to each
line, and merging consumes the last path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .volume import FormatError, Volume


@dataclass(frozen=True)
class TileGrid:
    volume_dims: tuple[int, int, int]
    patch_dims: tuple[int, int, int]
    overlap: tuple[int, int, int]
    origins: list[tuple[int, int, int]]
    warnings: list[str] = field(default_factory=list)


def _axis_origins(n: int, p: int, o: int) -> list[int]:
    if p >= n:
        return [0]
    origins = list(range(0, n - p + 1, p - o))
    if origins[-1] != n - p:
        origins.append(n - p)
    return origins


def plan_tiles(
    volume_dims: tuple[int, int, int],
    patch_dims: tuple[int, int, int] = (128, 128, 64),
    overlap: tuple[int, int, int] = (32, 32, 16),
) -> TileGrid:
    """Deterministic tile origins in z-major order covering the volume.

    Patches larger than the volume are clamped to it (with a warning);
    overlap must stay below the effective patch size on every axis.
    """
    warnings = []
    eff_patch = []
    eff_overlap = []
    for axis, (n, p, o) in enumerate(zip(volume_dims, patch_dims, overlap)):
        if min(n, p) < 1 or o < 0:
            raise ValueError(f"bad tiling geometry on axis {axis}: n={n} p={p} o={o}")
        if p > n:
            warnings.append(f"axis {axis}: patch {p} clamped to volume extent {n}")
            p = n
        if o >= p and n > p:
            raise ValueError(f"axis {axis}: overlap {o} must be < patch size {p}")
        if o >= p:
            warnings.append(f"axis {axis}: overlap {o} clamped to {p - 1}")
            o = p - 1
        eff_patch.append(p)
        eff_overlap.append(o)

    per_axis = [_axis_origins(n, p, o)
                for n, p, o in zip(volume_dims, eff_patch, eff_overlap)]
    origins = [(ox, oy, oz)
               for oz in per_axis[2]
               for oy in per_axis[1]
               for ox in per_axis[0]]
    return TileGrid(tuple(volume_dims), tuple(eff_patch), tuple(eff_overlap),
                    origins, warnings)


def _ramp(n: int, o: int) -> np.ndarray:
    idx = np.arange(n, dtype=np.float64)
    d = np.minimum(idx, n - 1 - idx)
    m = o / 2.0
    return np.minimum(1.0, (d + 1.0) / (m + 1.0))


def weight_window(patch_dims: tuple[int, int, int], overlap: tuple[int, int, int]) -> np.ndarray:
    """Separable pyramid window, shape (pz, py, px), strictly positive."""
    px, py, pz = patch_dims
    ox, oy, oz = overlap
    wx, wy, wz = _ramp(px, ox), _ramp(py, oy), _ramp(pz, oz)
    return wz[:, None, None] * wy[None, :, None] * wx[None, None, :]


def extract_patch(v: Volume, origin: tuple[int, int, int], patch_dims: tuple[int, int, int]) -> Volume:
    """Copy a sub-volume (all channels) starting at `origin`."""
    ox, oy, oz = origin
    px, py, pz = patch_dims
    nx, ny, nz = v.dims
    if not (0 <= ox and 0 <= oy and 0 <= oz and ox + px <= nx and oy + py <= ny and oz + pz <= nz):
        raise ValueError(f"patch {patch_dims} at origin {origin} exceeds volume dims {v.dims}")
    return Volume(v.data[:, oz:oz + pz, oy:oy + py, ox:ox + px].copy())


def insert_patch(v: Volume, patch: Volume, origin: tuple[int, int, int]) -> Volume:
    """Return a copy of `v` with `patch` written at `origin`."""
    ox, oy, oz = origin
    px, py, pz = patch.dims
    out = v.data.copy()
    out[:, oz:oz + pz, oy:oy + py, ox:ox + px] = patch.data
    return Volume(out)


def merge_tiles(grid: TileGrid, patches: list[Volume]) -> Volume:
    """Weighted average of overlapping patches: out = Σ wᵢvᵢ / Σ wᵢ.

    Accumulation runs in float64 in fixed origin order, so the result is
    independent of how patches were produced or scheduled.
    """
    if len(patches) != len(grid.origins):
        raise ValueError(f"expected {len(grid.origins)} patches, got {len(patches)}")
    channels = patches[0].channels
    px, py, pz = grid.patch_dims
    for i, p in enumerate(patches):
        if p.dims != grid.patch_dims:
            raise ValueError(f"patch {i} dims {p.dims} != grid patch dims {grid.patch_dims}")
        if p.channels != channels:
            raise ValueError(f"patch {i} has {p.channels} channels, expected {channels}")
        if p.dtype != np.float32:
            raise ValueError(f"patch {i} dtype {p.dtype}; merging expects float32 maps")

    nx, ny, nz = grid.volume_dims
    acc = np.zeros((channels, nz, ny, nx))
    den = np.zeros((nz, ny, nx))
    w = weight_window(grid.patch_dims, grid.overlap)
    for (ox, oy, oz), patch in zip(grid.origins, patches):
        sl = (slice(oz, oz + pz), slice(oy, oy + py), slice(ox, ox + px))
        acc[(slice(None),) + sl] += w * patch.data
        den[sl] += w
    return Volume((acc / den).astype(np.float32))


def write_manifest(path, grid: TileGrid, tile_paths: list[list[str]]) -> None:
    """Write the manifest; `tile_paths[i]` lists the path column(s) of tile i."""
    if len(tile_paths) != len(grid.origins):
        raise ValueError(f"expected {len(grid.origins)} tile path entries, got {len(tile_paths)}")
    lines = ["# GF3D tile manifest"]
    for key, vals in (("volume_dims", grid.volume_dims),
                      ("patch_dims", grid.patch_dims),
                      ("overlap", grid.overlap)):
        lines.append(f"{key} {vals[0]} {vals[1]} {vals[2]}")
    for i, ((ox, oy, oz), paths) in enumerate(zip(grid.origins, tile_paths)):
        for p in paths:
            if any(ch.isspace() for ch in p):
                raise ValueError(f"tile path may not contain whitespace: {p!r}")
        lines.append(f"tile {i} {ox} {oy} {oz} " + " ".join(paths))
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> tuple[TileGrid, list[list[str]]]:
    """Parse a manifest back into its grid and per-tile path lists."""
    header: dict[str, tuple[int, int, int]] = {}
    tiles: list[tuple[int, tuple[int, int, int], list[str]]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("volume_dims", "patch_dims", "overlap"):
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: {parts[0]} needs 3 values")
            header[parts[0]] = tuple(int(x) for x in parts[1:4])
        elif parts[0] == "tile":
            if len(parts) < 6:
                raise FormatError(f"{path}:{lineno}: tile line needs index, origin, and a path")
            tiles.append((int(parts[1]), tuple(int(x) for x in parts[2:5]), parts[5:]))
        else:
            raise FormatError(f"{path}:{lineno}: unknown manifest entry {parts[0]!r}")
    missing = {"volume_dims", "patch_dims", "overlap"} - set(header)
    if missing:
        raise FormatError(f"{path}: manifest missing {sorted(missing)}")
    tiles.sort(key=lambda t: t[0])
    if [t[0] for t in tiles] != list(range(len(tiles))):
        raise FormatError(f"{path}: tile indices must be 0..{len(tiles) - 1} without gaps")
    grid = TileGrid(header["volume_dims"], header["patch_dims"], header["overlap"],
                    [t[1] for t in tiles])
    expected = plan_tiles(grid.volume_dims, grid.patch_dims, grid.overlap)
    if expected.origins != grid.origins:
        raise FormatError(f"{path}: tile origins do not match the declared grid")
    return grid, [t[2] for t in tiles]
