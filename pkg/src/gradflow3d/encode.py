"""Gradient-map and foreground encodings of labeled cell volumes.

Two directional encodings are provided. The tanh variant assigns, along each
axis independently, ``tanh(alpha * (m - p) / h)`` where m is the midpoint and
h the half-width of the maximal same-label run through the voxel. The heat
variant simulates diffusion from a per-cell source voxel and differentiates
the (optionally log-compressed) heat field, normalizing each voxel's vector
to unit magnitude. Both point toward the cell center and are zero on
background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .volume import Volume, require_channels

_EPS = 1e-12


class EncodingKind(str, Enum):
    TANH = "tanh"
    HEAT = "heat"


@dataclass(frozen=True)
class EncodeParams:
    """Encoding constants.

    alpha: tanh steepness; 3.0 puts run endpoints at ~±0.995.
    n_diff_factor: heat iterations = ceil(factor * max cell bbox extent);
        2 lets the diffusion front cross the cell with margin.
    use_log_heat: differentiate log(1+H) instead of raw heat, which keeps
        far-from-source gradients from vanishing under normalization.
    """

    alpha: float = 3.0
    n_diff_factor: float = 2.0
    use_log_heat: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.n_diff_factor >= 1:
            raise ValueError(f"n_diff_factor must be >= 1, got {self.n_diff_factor}")


def encode_foreground(labels: Volume) -> Volume:
    """Binary foreground map: 1.0 where label > 0, else 0.0."""
    require_channels(labels, 1, "label volume")
    return Volume((labels.channel(0) > 0).astype(np.float32)[None])


def _tanh_along_last_axis(lab: np.ndarray, alpha: float) -> np.ndarray:
    """Per-run tanh profile along the last axis of a 3D label array."""
    n = lab.shape[-1]
    idx = np.arange(n)

    is_start = np.empty(lab.shape, bool)
    is_start[..., 0] = True
    np.not_equal(lab[..., 1:], lab[..., :-1], out=is_start[..., 1:])
    start = np.where(is_start, idx, 0)
    np.maximum.accumulate(start, axis=-1, out=start)

    is_end = np.empty(lab.shape, bool)
    is_end[..., -1] = True
    is_end[..., :-1] = is_start[..., 1:]
    end = np.where(is_end, idx, n - 1)
    end = np.flip(np.minimum.accumulate(np.flip(end, -1), axis=-1), -1)

    mid = 0.5 * (start + end)
    half = np.maximum(0.5 * (end - start), 1.0)
    g = np.tanh(alpha * (mid - idx) / half)
    g[lab == 0] = 0.0
    return g.astype(np.float32)


def encode_tanh(labels: Volume, params: EncodeParams = EncodeParams()) -> Volume:
    """Hyperbolic-tangent gradient field, one channel per axis (x, y, z)."""
    require_channels(labels, 1, "label volume")
    lab = labels.channel(0)
    out = np.empty((3,) + lab.shape, np.float32)
    # array axes are (z, y, x): channel 0 (x) differentiates array axis 2, etc.
    for channel, axis in ((0, 2), (1, 1), (2, 0)):
        moved = np.moveaxis(lab, axis, -1)
        out[channel] = np.moveaxis(_tanh_along_last_axis(moved, params.alpha), -1, axis)
    return Volume(out)


def _heat_cell(mask: np.ndarray, params: EncodeParams) -> np.ndarray:
    """Heat gradient (3, bz, by, bx) for one cell mask given as its tight bbox."""
    bz, by, bx = mask.shape
    zz, yy, xx = np.nonzero(mask)
    cz, cy, cx = zz.mean(), yy.mean(), xx.mean()
    # nearest in-mask voxel to the centroid; np.nonzero order breaks ties by
    # lowest (z, y, x), i.e. lowest linear index
    src = int(np.argmin((zz - cz) ** 2 + (yy - cy) ** 2 + (xx - cx) ** 2))
    src_idx = (zz[src], yy[src], xx[src])

    n_iter = max(1, math.ceil(params.n_diff_factor * max(mask.shape)))
    pad = np.zeros((bz + 2, by + 2, bx + 2))
    core = (slice(1, -1), slice(1, -1), slice(1, -1))
    heat = np.zeros(mask.shape)
    for _ in range(n_iter):
        heat[src_idx] += 1.0
        pad[core] = heat
        heat = (
            pad[1:-1, 1:-1, 1:-1]
            + pad[2:, 1:-1, 1:-1] + pad[:-2, 1:-1, 1:-1]
            + pad[1:-1, 2:, 1:-1] + pad[1:-1, :-2, 1:-1]
            + pad[1:-1, 1:-1, 2:] + pad[1:-1, 1:-1, :-2]
        )
        heat /= 7.0
        heat[~mask] = 0.0

    field = np.log1p(heat) if params.use_log_heat else heat

    fpad = np.zeros_like(pad)
    fpad[core] = field
    mpad = np.zeros(pad.shape, bool)
    mpad[core] = mask

    grad = np.empty((3, bz, by, bx))
    shifts = (
        ((0, 0, 1), (0, 0, -1)),  # x channel
        ((0, 1, 0), (0, -1, 0)),  # y channel
        ((1, 0, 0), (-1, 0, 0)),  # z channel
    )

    def sample(offset):
        dz, dy, dx = offset
        sl = (slice(1 + dz, fpad.shape[0] - 1 + dz),
              slice(1 + dy, fpad.shape[1] - 1 + dy),
              slice(1 + dx, fpad.shape[2] - 1 + dx))
        return np.where(mpad[sl], fpad[sl], field)

    for channel, (plus, minus) in enumerate(shifts):
        grad[channel] = sample(plus) - sample(minus)

    norm = np.sqrt((grad * grad).sum(axis=0))
    grad /= np.maximum(norm, _EPS)
    grad[:, ~mask] = 0.0
    return grad


def encode_heat(labels: Volume, params: EncodeParams = EncodeParams()) -> Volume:
    """Heat-diffusion gradient field (channels x, y, z), unit vectors per voxel.

    Per cell: inject one heat unit per iteration at the source voxel (in-mask
    voxel nearest the centroid), then replace every mask voxel by the mean of
    itself and its 6-neighborhood with out-of-mask neighbors contributing
    zero. The fixed /7 mean makes the boundary absorbing, so heat decays from
    the source outward and gradients point inward everywhere.
    """
    require_channels(labels, 1, "label volume")
    lab = labels.channel(0)
    out = np.zeros((3,) + lab.shape, np.float32)
    for k, box in enumerate(ndimage.find_objects(lab), start=1):
        if box is None:
            continue
        mask = lab[box] == k
        grad = _heat_cell(mask, params)
        region = out[(slice(None),) + box]
        region[:, mask] = grad[:, mask].astype(np.float32)
    return Volume(out)


def encode(labels: Volume, kind: EncodingKind, params: EncodeParams = EncodeParams()) -> Volume:
    if kind == EncodingKind.TANH:
        return encode_tanh(labels, params)
    if kind == EncodingKind.HEAT:
        return encode_heat(labels, params)
    raise ValueError(f"unknown encoding kind {kind!r}")
