"""Numpy implementation of the dead-time kernels.

A sorted arrival stream is split into clusters at gaps of at least tau;
the first arrival of each cluster is always kept. Inside a cluster the
kept events follow the chain i -> first arrival at or after t_i + tau,
which is advanced for all clusters at once.
"""
import numpy as np


def deadtime_filter(times, tau, last):
    times = np.ascontiguousarray(times, dtype=float)
    n = times.size
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask, last
    if tau <= 0:
        keep = times >= last + tau
        mask[:] = keep
        return mask, float(times[keep][-1]) if keep.any() else last
    prev = np.empty(n)
    prev[0] = last
    prev[1:] = np.maximum(times[:-1], last)
    anchor = times >= prev + tau
    starts = np.flatnonzero(anchor)
    ends = np.append(starts[1:], n)
    # arrivals before the first anchor are blocked by ``last`` until last + tau
    head_end = starts[0] if starts.size else n
    head = int(np.searchsorted(times[:head_end], last + tau, side="left"))
    if head < head_end:
        starts = np.insert(starts, 0, head)
        ends = np.insert(ends, 0, head_end)
    nxt = np.searchsorted(times, times + tau, side="left")
    # when t + tau rounds back to t the next candidate is still i + 1
    nxt = np.maximum(nxt, np.arange(1, n + 1))
    cur, end = starts, ends
    while cur.size:
        mask[cur] = True
        cur = nxt[cur]
        live = cur < end
        cur, end = cur[live], end[live]
    kept = np.flatnonzero(mask)
    return mask, float(times[kept[-1]]) if kept.size else last


def deadtime_bin(times, tau, last, t0, width, counts):
    mask, last = deadtime_filter(times, tau, last)
    k = np.floor((np.asarray(times)[mask] - t0) / width).astype(np.int64)
    k = k[(k >= 0) & (k < counts.size)]
    counts += np.bincount(k, minlength=counts.size).astype(counts.dtype)
    return last
