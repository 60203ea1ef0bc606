"""Brute-force reference implementations used as independent oracles.

Everything in here is written with plain Python loops and kept free of any
import from the package under test, so that test expectations derived from
these functions cannot share bugs with the production code.
"""

import math


def tanh_profile(run_len, alpha):
    """Per-voxel tanh gradient values for a single run of `run_len` voxels."""
    lo, hi = 0, run_len - 1
    m = (lo + hi) / 2.0
    h = max((hi - lo) / 2.0, 1.0)
    return [math.tanh(alpha * (m - p) / h) for p in range(run_len)]


def trace_1d(profile, starts, step, n_iter):
    """Scalar flow tracing along one axis.

    `profile` gives the gradient at integer positions; sampling uses
    round-half-up, positions are clamped to [0, len-1].
    """
    n = len(profile)
    finals = []
    for p in starts:
        x = float(p)
        for _ in range(n_iter):
            xi = int(math.floor(x + 0.5))
            x = min(max(x + profile[xi] * step, 0.0), float(n - 1))
        finals.append(x)
    return finals


def heat_gradient_1d(run_len, n_iter, use_log=True):
    """Brute-force heat simulation on a 1D run, source at the middle voxel.

    Mirrors the diffusion rule: inject one unit at the source, then replace
    every voxel by the mean of itself and its in-mask neighbors; finally
    take central differences of log(1+H) with out-of-mask samples replaced
    by the center value, and normalize each voxel to unit magnitude.
    """
    src = (run_len - 1) // 2
    heat = [0.0] * run_len
    for _ in range(n_iter):
        heat[src] += 1.0
        new = []
        for i in range(run_len):
            vals = [heat[i]]
            if i - 1 >= 0:
                vals.append(heat[i - 1])
            if i + 1 < run_len:
                vals.append(heat[i + 1])
            new.append(sum(vals) / len(vals))
        heat = new
    f = [math.log1p(h) if use_log else h for h in heat]
    grads = []
    for i in range(run_len):
        plus = f[i + 1] if i + 1 < run_len else f[i]
        minus = f[i - 1] if i - 1 >= 0 else f[i]
        r = plus - minus
        norm = max(abs(r), 1e-12)
        grads.append(r / norm if norm > 1e-12 else 0.0)
    return grads


def heat_gradient_3d(mask, n_iter, use_log=True):
    """Loop-based heat gradient on a 3D boolean mask (z, y, x order).

    Source is the in-mask voxel nearest the mask centroid, ties broken by
    lowest (z, y, x). Returns (gx, gy, gz) dicts keyed by (z, y, x).
    """
    voxels = [(z, y, x)
              for z in range(len(mask))
              for y in range(len(mask[0]))
              for x in range(len(mask[0][0]))
              if mask[z][y][x]]
    cz = sum(v[0] for v in voxels) / len(voxels)
    cy = sum(v[1] for v in voxels) / len(voxels)
    cx = sum(v[2] for v in voxels) / len(voxels)
    src = min(voxels,
              key=lambda v: ((v[0] - cz) ** 2 + (v[1] - cy) ** 2 + (v[2] - cx) ** 2, v))
    heat = {v: 0.0 for v in voxels}
    neighbors = {}
    for v in voxels:
        z, y, x = v
        nbs = []
        for dz, dy, dx in ((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                           (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            q = (z + dz, y + dy, x + dx)
            if q in heat:
                nbs.append(q)
        neighbors[v] = nbs
    for _ in range(n_iter):
        heat[src] += 1.0
        new = {}
        for v in voxels:
            vals = [heat[v]] + [heat[q] for q in neighbors[v]]
            new[v] = sum(vals) / len(vals)
        heat = new
    f = {v: (math.log1p(h) if use_log else h) for v, h in heat.items()}
    gx, gy, gz = {}, {}, {}
    for v in voxels:
        z, y, x = v
        r = []
        for axis_offsets in (((0, 0, 1), (0, 0, -1)),
                             ((0, 1, 0), (0, -1, 0)),
                             ((1, 0, 0), (-1, 0, 0))):
            (pz, py, px), (mz, my, mx) = axis_offsets
            plus = f.get((z + pz, y + py, x + px), f[v])
            minus = f.get((z + mz, y + my, x + mx), f[v])
            r.append(plus - minus)
        norm = math.sqrt(sum(c * c for c in r))
        scale = 1.0 / max(norm, 1e-12)
        gx[v], gy[v], gz[v] = r[0] * scale, r[1] * scale, r[2] * scale
    return gx, gy, gz, src


def tile_origins_1d(n, p, o):
    """Stride p-o origins with a final shift-in tile, brute-force checked."""
    p = min(p, n)
    origins = list(range(0, n - p + 1, p - o))
    if origins[-1] != n - p:
        origins.append(n - p)
    return origins


def covers(n, p, origins):
    hit = [False] * n
    for a in origins:
        for i in range(a, a + p):
            hit[i] = True
    return all(hit)


def dice(a_voxels, b_voxels):
    inter = len(a_voxels & b_voxels)
    return 2.0 * inter / (len(a_voxels) + len(b_voxels))
