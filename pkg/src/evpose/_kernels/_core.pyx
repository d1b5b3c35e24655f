# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernels.

Every floating-point expression here must match ``_numpy`` operation for
operation (the ``canonical:`` comments there are the contract), and the
extension is built with FMA contraction disabled, so both backends produce
bit-identical output. Event emission order may differ between backends;
callers canonicalize with a full sort.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def simulate_pair_kernel(
    cnp.float64_t[:, ::1] log0 not None,
    cnp.float64_t[:, ::1] log1 not None,
    long long t0_us,
    long long t1_us,
    cnp.float64_t[:, ::1] ref not None,
    cnp.int64_t[:, ::1] last_t not None,
    double cp,
    double cn,
    long long refractory_us,
):
    cdef Py_ssize_t h = ref.shape[0]
    cdef Py_ssize_t w = ref.shape[1]
    cdef Py_ssize_t y, x, m
    cdef double l0, l1, r, d, c, kf, nf, level, tc
    cdef double t0f = <double>t0_us
    cdef double dtf = <double>(t1_us - t0_us)
    cdef long long n, k, tci, last, total
    cdef int pol

    counts_arr = np.zeros((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] counts = counts_arr
    total = 0
    for y in range(h):
        for x in range(w):
            l1 = log1[y, x]
            if l1 == log0[y, x]:
                continue
            r = ref[y, x]
            if l1 > r:
                n = <long long>floor((l1 - r) / cp)
            elif l1 < r:
                n = <long long>floor((r - l1) / cn)
            else:
                n = 0
            counts[y, x] = n
            total += n

    out_x = np.empty(total, dtype=np.int64)
    out_y = np.empty(total, dtype=np.int64)
    out_t = np.empty(total, dtype=np.int64)
    out_p = np.empty(total, dtype=np.int8)
    cdef cnp.int64_t[::1] ox = out_x
    cdef cnp.int64_t[::1] oy = out_y
    cdef cnp.int64_t[::1] ot = out_t
    cdef cnp.int8_t[::1] op = out_p

    m = 0
    for y in range(h):
        for x in range(w):
            n = counts[y, x]
            if n == 0:
                continue
            l0 = log0[y, x]
            l1 = log1[y, x]
            r = ref[y, x]
            d = l1 - l0
            if l1 > r:
                pol = 1
                c = cp
            else:
                pol = -1
                c = cn
            last = last_t[y, x]
            for k in range(1, n + 1):
                kf = <double>k
                if pol == 1:
                    level = r + kf * c
                else:
                    level = r - kf * c
                tc = t0f + (level - l0) / d * dtf
                tci = <long long>floor(tc + 0.5)
                if last == -1 or tci - last >= refractory_us:
                    ox[m] = x
                    oy[m] = y
                    ot[m] = tci
                    op[m] = pol
                    m += 1
                    last = tci
            last_t[y, x] = last
            nf = <double>n
            if pol == 1:
                ref[y, x] = r + nf * c
            else:
                ref[y, x] = r - nf * c

    return out_x[:m], out_y[:m], out_t[:m], out_p[:m]


def accumulate_count(
    cnp.int64_t[::1] xs not None,
    cnp.int64_t[::1] ys not None,
    cnp.int8_t[::1] ps not None,
    Py_ssize_t width,
    Py_ssize_t height,
    int mode,
):
    if mode not in (0, 1, 2):
        raise ValueError(f"bad count mode {mode}")
    cdef Py_ssize_t channels = 2 if mode == 2 else 1
    frame_arr = np.zeros((channels, height, width), dtype=np.float64)
    cdef cnp.float64_t[:, :, ::1] frame = frame_arr
    cdef Py_ssize_t i, ch
    cdef Py_ssize_t n = xs.shape[0]
    for i in range(n):
        if mode == 0:
            frame[0, ys[i], xs[i]] += 1.0
        elif mode == 1:
            frame[0, ys[i], xs[i]] += <double>ps[i]
        else:
            ch = 0 if ps[i] > 0 else 1
            frame[ch, ys[i], xs[i]] += 1.0
    return frame_arr


def accumulate_voxel(
    cnp.int64_t[::1] xs not None,
    cnp.int64_t[::1] ys not None,
    cnp.int64_t[::1] ts not None,
    cnp.int8_t[::1] ps not None,
    long long t0_us,
    long long tn_us,
    Py_ssize_t width,
    Py_ssize_t height,
    Py_ssize_t bins,
    int mode,
):
    if mode not in (0, 1, 2):
        raise ValueError(f"bad count mode {mode}")
    cdef Py_ssize_t channels = 2 if mode == 2 else 1
    grid_arr = np.zeros((channels, bins, height, width), dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    if n == 0:
        return grid_arr
    cdef cnp.float64_t[:, :, :, ::1] grid = grid_arr

    cdef double denom = <double>(tn_us - t0_us)
    cdef double scale = (<double>(bins - 1)) / denom if denom != 0.0 else 0.0
    cdef double bmax = <double>(bins - 1)

    blo_arr = np.empty(n, dtype=np.int64)
    chan_arr = np.empty(n, dtype=np.int64)
    wlo_arr = np.empty(n, dtype=np.float64)
    whi_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] blo = blo_arr
    cdef cnp.int64_t[::1] chan = chan_arr
    cdef cnp.float64_t[::1] wlo = wlo_arr
    cdef cnp.float64_t[::1] whi = whi_arr

    cdef Py_ssize_t i
    cdef double tf, tstar, f, wf
    cdef long long b
    for i in range(n):
        tf = <double>(ts[i] - t0_us)
        tstar = tf * scale
        if tstar < 0.0:
            tstar = 0.0
        if tstar > bmax:
            tstar = bmax
        b = <long long>floor(tstar)
        if b > bins - 2:
            b = bins - 2
        f = tstar - <double>b
        if mode == 1:
            wf = <double>ps[i]
        else:
            wf = 1.0
        blo[i] = b
        chan[i] = 1 if (mode == 2 and ps[i] < 0) else 0
        wlo[i] = wf * (1.0 - f)
        whi[i] = wf * f

    # all lower taps in event order, then all upper taps, matching _numpy
    for i in range(n):
        grid[chan[i], blo[i], ys[i], xs[i]] += wlo[i]
    for i in range(n):
        grid[chan[i], blo[i] + 1, ys[i], xs[i]] += whi[i]
    return grid_arr
