# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dead-time kernels; see _kernels_py for the reference version."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def deadtime_filter(const double[::1] times, double tau, double last):
    """Non-paralyzable dead-time filter over sorted arrival times.

    Returns (mask, last_accepted). An arrival is kept when it comes at
    least tau after the previously kept one; ``last`` carries that time
    across calls.
    """
    cdef Py_ssize_t i, n = times.shape[0]
    mask = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] m = mask
    cdef double t
    for i in range(n):
        t = times[i]
        if t >= last + tau:
            m[i] = 1
            last = t
    return mask.view(np.bool_), last


def deadtime_bin(const double[::1] times, double tau, double last,
                 double t0, double width, cnp.int64_t[::1] counts):
    """Filter and histogram in one pass; kept events outside the bins are dropped.

    ``counts`` is incremented in place. Returns the updated last-kept time.
    """
    cdef Py_ssize_t i, k, n = times.shape[0], nbins = counts.shape[0]
    cdef double t
    for i in range(n):
        t = times[i]
        if t >= last + tau:
            last = t
            if t < t0:
                continue
            k = <Py_ssize_t>((t - t0) / width)
            if k < nbins:
                counts[k] += 1
    return last
