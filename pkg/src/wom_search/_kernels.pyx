# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulator kernels.  Semantics match ``_kernels_py`` exactly."""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int8_t, int64_t, uint8_t

cnp.import_array()


def sample_friends(const double[:, ::1] u):
    """k distinct friends per consumer, self excluded (Floyd's algorithm).

    ``u`` holds one uniform per (consumer, draw); ``n`` is its row count.
    """
    cdef Py_ssize_t n = u.shape[0], k = u.shape[1]
    cdef Py_ssize_t i, idx, m
    cdef int64_t pool = n - 1, j, t
    cdef bint dup
    out = np.empty((n, k), dtype=np.int64)
    cdef int64_t[:, ::1] sel = out
    if k > pool:
        raise ValueError("k must be smaller than the population")
    with nogil:
        for i in range(n):
            for idx in range(k):
                j = pool - k + idx
                t = <int64_t>(u[i, idx] * (j + 1))
                if t > j:
                    t = j
                dup = False
                for m in range(idx):
                    if sel[i, m] == t:
                        dup = True
                        break
                if dup:
                    t = j
                sel[i, idx] = t
            for idx in range(k):
                if sel[i, idx] >= i:
                    sel[i, idx] += 1
    return out


def friend_quote_mask(const int8_t[::1] searched, const int64_t[:, ::1] friends):
    """Bit mask of firms (bit 0: firm A, bit 1: firm B) quoted by friends.

    ``searched[j]`` is the firm consumer ``j`` searched, or -1.
    """
    cdef Py_ssize_t n = friends.shape[0], k = friends.shape[1]
    cdef Py_ssize_t i, idx
    cdef int8_t s
    cdef uint8_t acc
    out = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] mask = out
    with nogil:
        for i in range(n):
            acc = 0
            for idx in range(k):
                s = searched[friends[i, idx]]
                if s >= 0:
                    acc |= <uint8_t>(1 << s)
                    if acc == 3:
                        break
            mask[i] = acc
    return out
