"""Core 3D volume type and the GF3D binary exchange format.

Conventions used across the whole package:

* Spatial dims are named ``(nx, ny, nz)``; the x axis is fastest in memory.
* Array layout is ``[channel][z][y][x]``, i.e. a numpy array of shape
  ``(C, nz, ny, nx)``; the linear index of ``(x, y, z, c)`` is
  ``((c*nz + z)*ny + y)*nx + x``.
* Label volumes: C=1, uint16/uint32, 0 = background, k>0 = instance k.
* Gradient fields: C=3 float32, channels ordered (x, y, z), values in [-1, 1],
  zero on background.
* Foreground maps: C=1 float32 in [0, 1].
* Volumes are treated as immutable after construction; operations always
  allocate fresh output arrays.

GF3D file layout (little-endian, 20-byte header, no compression):

    magic     4 bytes  b"GF3D"
    version   u8       1
    dtype     u8       0=float32, 1=uint8, 2=uint16, 3=uint32
    channels  u8
    reserved  u8       0
    nx,ny,nz  u32 each

followed by the raw voxel data in [channel][z][y][x] order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"GF3D"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBIII")

DTYPE_BY_CODE = {
    0: np.dtype("<f4"),
    1: np.dtype("<u1"),
    2: np.dtype("<u2"),
    3: np.dtype("<u4"),
}
CODE_BY_DTYPE = {
    np.dtype(np.float32): 0,
    np.dtype(np.uint8): 1,
    np.dtype(np.uint16): 2,
    np.dtype(np.uint32): 3,
}


class FormatError(ValueError):
    """Raised for malformed GF3D files or unsupported metadata."""


@dataclass(frozen=True)
class Volume:
    """Dense multi-channel 3D volume, shape (C, nz, ny, nx)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data)
        if arr.ndim != 4:
            raise ValueError(f"volume data must be 4D (C, nz, ny, nx), got shape {arr.shape}")
        if any(s < 1 for s in arr.shape):
            raise ValueError(f"all volume dims and channel count must be >= 1, got {arr.shape}")
        if arr.dtype.newbyteorder("=") not in CODE_BY_DTYPE:
            raise ValueError(f"unsupported dtype {arr.dtype}; use float32/uint8/uint16/uint32")
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("="))
        object.__setattr__(self, "data", arr)

    @classmethod
    def single(cls, channel: np.ndarray) -> "Volume":
        """Wrap a single (nz, ny, nx) array as a one-channel volume."""
        return cls(np.asarray(channel)[None])

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        c, nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def channel(self, c: int) -> np.ndarray:
        return self.data[c]


def require_same_dims(*volumes: Volume) -> None:
    dims = {v.dims for v in volumes}
    if len(dims) > 1:
        raise ValueError(f"volumes must share dims, got {sorted(dims)}")


def require_channels(v: Volume, channels: int, what: str) -> None:
    if v.channels != channels:
        raise ValueError(f"{what} must have {channels} channel(s), got {v.channels}")


def label_dtype_for(max_label: int) -> np.dtype:
    return np.dtype(np.uint16) if max_label <= np.iinfo(np.uint16).max else np.dtype(np.uint32)


def write_volume(path, v: Volume) -> None:
    """Write a volume to `path` in the GF3D format (bit-exact round trip)."""
    code = CODE_BY_DTYPE[v.dtype.newbyteorder("=")]
    nx, ny, nz = v.dims
    header = _HEADER.pack(MAGIC, VERSION, code, v.channels, 0, nx, ny, nz)
    payload = np.ascontiguousarray(v.data, dtype=DTYPE_BY_CODE[code]).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_volume(path) -> Volume:
    """Read a GF3D file, validating magic, version, dtype and payload size."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise FormatError(f"{path}: not a GF3D file (bad magic)")
    magic, version, code, channels, _reserved, nx, ny, nz = _HEADER.unpack(raw[: _HEADER.size])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GF3D version {version}")
    if code not in DTYPE_BY_CODE:
        raise FormatError(f"{path}: unsupported dtype code {code}")
    if channels < 1 or min(nx, ny, nz) < 1:
        raise FormatError(f"{path}: invalid header (channels={channels}, dims=({nx},{ny},{nz}))")
    dtype = DTYPE_BY_CODE[code]
    expected = channels * nx * ny * nz * dtype.itemsize
    actual = len(raw) - _HEADER.size
    if actual != expected:
        raise FormatError(f"{path}: size mismatch, expected {expected} data bytes, found {actual}")
    arr = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).reshape(channels, nz, ny, nx)
    return Volume(arr.astype(dtype.newbyteorder("="), copy=False))


def import_raw(path, dims: tuple[int, int, int], channels: int, dtype) -> Volume:
    """Wrap a headerless little-endian raw array file as a Volume.

    `dtype` may be a GF3D dtype code or anything np.dtype accepts. The file
    is assumed to hold [channel][z][y][x]-ordered scalars.
    """
    if isinstance(dtype, int):
        if dtype not in DTYPE_BY_CODE:
            raise FormatError(f"unsupported dtype code {dtype}")
        dt = DTYPE_BY_CODE[dtype]
    else:
        dt = np.dtype(dtype)
        if dt.newbyteorder("=") not in CODE_BY_DTYPE:
            raise FormatError(f"unsupported dtype {dt}")
        dt = dt.newbyteorder("<")
    nx, ny, nz = dims
    with open(path, "rb") as f:
        raw = f.read()
    expected = channels * nx * ny * nz * dt.itemsize
    if len(raw) != expected:
        raise FormatError(
            f"{path}: size mismatch, expected {expected} bytes for "
            f"dims=({nx},{ny},{nz}) C={channels} {dt}, found {len(raw)}"
        )
    arr = np.frombuffer(raw, dtype=dt).reshape(channels, nz, ny, nx)
    return Volume(arr.astype(dt.newbyteorder("="), copy=False))
