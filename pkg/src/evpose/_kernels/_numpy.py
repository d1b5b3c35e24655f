"""Pure NumPy kernels, bit-identical to the compiled extension.

Bit-identity contract with ``_core``: every floating-point value must come
from the same sequence of IEEE double operations. Comments of the form
``canonical: <expr>`` pin that sequence; do not refactor them, and keep the
extension compiled without FMA contraction.
"""

from __future__ import annotations

import numpy as np


def simulate_pair_kernel(log0, log1, t0_us, t1_us, ref, last_t, cp, cn, refractory_us):
    """Emit threshold-crossing events for one linear log-intensity segment.

    ``ref`` (float64) and ``last_t`` (int64, -1 for never-fired) are updated
    in place. Returns unsorted (x, y, t, p) arrays; the caller owns ordering.
    Pixels whose log intensity did not change emit nothing.
    """
    d = log1 - log0
    moved = d != 0.0
    up = moved & (log1 > ref)
    dn = moved & (log1 < ref)
    n = np.zeros(ref.shape, dtype=np.int64)
    # canonical: n = floor((l1 - r) / cp)  [up],  floor((r - l1) / cn)  [dn]
    n[up] = np.floor((log1[up] - ref[up]) / cp).astype(np.int64)
    n[dn] = np.floor((ref[dn] - log1[dn]) / cn).astype(np.int64)

    py, px = np.nonzero(n)
    if py.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), np.zeros(0, dtype=np.int8)

    act_n = n[py, px]
    act_ref = ref[py, px]
    act_l0 = log0[py, px]
    act_d = d[py, px]
    act_sign = np.where(log1[py, px] > act_ref, 1.0, -1.0)
    act_c = np.where(act_sign > 0.0, cp, cn)
    act_last = last_t[py, px]
    act_p = np.where(act_sign > 0.0, 1, -1).astype(np.int8)

    t0f = np.float64(t0_us)
    dtf = np.float64(t1_us - t0_us)

    out_x, out_y, out_t, out_p = [], [], [], []
    for k in range(1, int(act_n.max()) + 1):
        idx = np.nonzero(act_n >= k)[0]
        kf = np.float64(k)
        # canonical: level = r + kf * cp  [up],  r - kf * cn  [dn]
        level = act_ref[idx] + act_sign[idx] * (kf * act_c[idx])
        # canonical: tc = t0 + (level - l0) / (l1 - l0) * (t1 - t0)
        tc = t0f + (level - act_l0[idx]) / act_d[idx] * dtf
        tci = np.floor(tc + 0.5).astype(np.int64)
        keep = (act_last[idx] == -1) | (tci - act_last[idx] >= refractory_us)
        kept = idx[keep]
        act_last[kept] = tci[keep]
        out_x.append(px[kept])
        out_y.append(py[kept])
        out_t.append(tci[keep])
        out_p.append(act_p[kept])

    last_t[py, px] = act_last
    nf = act_n.astype(np.float64)
    # canonical: ref = r + nf * cp  [up],  r - nf * cn  [dn]
    ref[py, px] = act_ref + act_sign * (nf * act_c)

    return (
        np.concatenate(out_x),
        np.concatenate(out_y),
        np.concatenate(out_t),
        np.concatenate(out_p),
    )


def accumulate_count(xs, ys, ps, width, height, mode):
    """Scatter events into per-pixel counts.

    mode 0: unsigned count, one channel. mode 1: signed sum of polarities,
    one channel. mode 2: positive counts then negative counts, two channels.
    All cell values are exact small integers, so summation order is free.
    """
    flat = ys * np.int64(width) + xs
    size = height * width
    if mode == 0:
        planes = [np.bincount(flat, minlength=size)]
    elif mode == 1:
        planes = [np.bincount(flat, weights=ps.astype(np.float64), minlength=size)]
    elif mode == 2:
        planes = [
            np.bincount(flat[ps > 0], minlength=size),
            np.bincount(flat[ps < 0], minlength=size),
        ]
    else:
        raise ValueError(f"bad count mode {mode}")
    return np.stack([p.astype(np.float64).reshape(height, width) for p in planes])


def accumulate_voxel(xs, ys, ts, ps, t0_us, tn_us, width, height, bins, mode):
    """Scatter events into a temporal voxel grid with a two-tap tent kernel.

    Event k at normalized time t* contributes (1 - f) to bin floor(t*) and f
    to the next bin, f = t* - floor(t*); the two taps always sum to exactly
    one unit of the event's weight. Returns (channels, bins, height, width).
    Accumulation order is fixed: all lower taps in event order, then all
    upper taps in event order.
    """
    channels = 2 if mode == 2 else 1
    grid = np.zeros((channels, bins, height, width), dtype=np.float64)
    if xs.shape[0] == 0:
        return grid

    # canonical: scale = (B - 1) / (tN - t0), 0 when the window has no span
    denom = np.float64(tn_us - t0_us)
    scale = np.float64(bins - 1) / denom if denom != 0.0 else np.float64(0.0)
    bmax = np.float64(bins - 1)
    # canonical: tstar = (t - t0) * scale, clamped to [0, B - 1]
    tstar = (ts - t0_us).astype(np.float64) * scale
    tstar = np.minimum(np.maximum(tstar, 0.0), bmax)
    b = np.floor(tstar).astype(np.int64)
    b = np.minimum(b, bins - 2)
    # canonical: f = tstar - b; taps (1 - f) and f
    f = tstar - b.astype(np.float64)
    if mode == 1:
        wf = ps.astype(np.float64)
        chan = np.zeros(xs.shape[0], dtype=np.int64)
    else:
        wf = np.ones(xs.shape[0], dtype=np.float64)
        chan = (ps < 0).astype(np.int64) if mode == 2 else np.zeros(xs.shape[0], dtype=np.int64)
    if mode not in (0, 1, 2):
        raise ValueError(f"bad count mode {mode}")
    # canonical: w_lo = wf * (1 - f), then w_hi = wf * f, two passes
    np.add.at(grid, (chan, b, ys, xs), wf * (1.0 - f))
    np.add.at(grid, (chan, b + 1, ys, xs), wf * f)
    return grid
