"""Variable-window aggregation along grid axes.

Cone integrals and non-tangential suprema need, for every node x_i, the sum
or max of a field over the nodes y with |y - x_i| < r.  Windows are
monotone in i on a sorted grid; sums use prefix sums, maxima use a sparse
table (doubling max) so the whole axis is answered with vectorized gathers.
"""

from __future__ import annotations

import numpy as np


def window_bounds(nodes: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Half-open index ranges [lo_i, hi_i) of {j : |y_j - x_i| < radius}.

    Every window contains its own center (radius > 0).
    """
    lo = np.searchsorted(nodes, nodes - radius, side="right")
    hi = np.searchsorted(nodes, nodes + radius, side="left")
    return lo, hi


def windowed_sum(values: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int) -> np.ndarray:
    """Sum of ``values`` over [lo_i, hi_i) windows along ``axis``."""
    v = np.moveaxis(values, axis, -1)
    cs = np.concatenate([np.zeros(v.shape[:-1] + (1,)), np.cumsum(v, axis=-1)], axis=-1)
    out = cs[..., hi] - cs[..., lo]
    return np.moveaxis(out, -1, axis)


def _sparse_table(v: np.ndarray):
    """Doubling-max tables along the last axis; T[k][..., i] = max v[..., i:i+2^k]."""
    n = v.shape[-1]
    tables = [v]
    k = 1
    while (1 << k) <= n:
        prev = tables[-1]
        half = 1 << (k - 1)
        tables.append(np.maximum(prev[..., : n - (1 << k) + 1], prev[..., half : n - half + 1]))
        k += 1
    return tables


def windowed_max(values: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int) -> np.ndarray:
    """Max of ``values`` over [lo_i, hi_i) windows along ``axis`` (windows nonempty)."""
    v = np.moveaxis(values, axis, -1)
    tables = _sparse_table(v)
    length = hi - lo
    k = np.zeros(len(lo), dtype=int)
    nz = length > 0
    k[nz] = np.floor(np.log2(length[nz])).astype(int)
    # gather per-window: tables[k_i][..., lo_i] and tables[k_i][..., hi_i - 2^k_i]
    out = np.empty(v.shape[:-1] + (len(lo),))
    for ki in np.unique(k):
        sel = k == ki
        tab = tables[ki]
        a = tab[..., lo[sel]]
        b = tab[..., hi[sel] - (1 << int(ki))]
        out[..., sel] = np.maximum(a, b)
    return np.moveaxis(out, -1, axis)


def windowed_max_argmax(
    values: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int
) -> tuple[np.ndarray, np.ndarray]:
    """Windowed max plus the index attaining it (first occurrence not guaranteed)."""
    v = np.moveaxis(values, axis, -1)
    n = v.shape[-1]
    val_tab = [v]
    idx_tab = [np.broadcast_to(np.arange(n), v.shape).copy()]
    k = 1
    while (1 << k) <= n:
        prev_v, prev_i = val_tab[-1], idx_tab[-1]
        half = 1 << (k - 1)
        a = prev_v[..., : n - (1 << k) + 1]
        b = prev_v[..., half : n - half + 1]
        ia = prev_i[..., : n - (1 << k) + 1]
        ib = prev_i[..., half : n - half + 1]
        take_b = b > a
        val_tab.append(np.where(take_b, b, a))
        idx_tab.append(np.where(take_b, ib, ia))
        k += 1
    length = hi - lo
    ks = np.zeros(len(lo), dtype=int)
    nz = length > 0
    ks[nz] = np.floor(np.log2(length[nz])).astype(int)
    out_v = np.empty(v.shape[:-1] + (len(lo),))
    out_i = np.empty(v.shape[:-1] + (len(lo),), dtype=int)
    for ki in np.unique(ks):
        sel = ks == ki
        tv, ti = val_tab[ki], idx_tab[ki]
        a_v, a_i = tv[..., lo[sel]], ti[..., lo[sel]]
        off = hi[sel] - (1 << int(ki))
        b_v, b_i = tv[..., off], ti[..., off]
        take_b = b_v > a_v
        out_v[..., sel] = np.where(take_b, b_v, a_v)
        out_i[..., sel] = np.where(take_b, b_i, a_i)
    return np.moveaxis(out_v, -1, axis), np.moveaxis(out_i, -1, axis)
