# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matching and local-search kernels. Semantics mirror _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef int64_t _raw_one(const uint64_t[:, ::1] values, const uint64_t[:, ::1] masks,
                      const uint64_t[::1] query, int64_t specified) noexcept nogil:
    cdef Py_ssize_t z, w
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t n_words = values.shape[1]
    cdef int64_t agree = 0
    for z in range(n):
        for w in range(n_words):
            agree += __builtin_popcountll(~(values[z, w] ^ query[w]) & masks[z, w])
    return 2 * agree - specified


def total_specified(const uint64_t[:, ::1] masks):
    cdef Py_ssize_t z, w
    cdef int64_t total = 0
    with nogil:
        for z in range(masks.shape[0]):
            for w in range(masks.shape[1]):
                total += __builtin_popcountll(masks[z, w])
    return total


def packed_raw(const uint64_t[:, ::1] values, const uint64_t[:, ::1] masks,
               const uint64_t[::1] query):
    """Sum over entries of (agreements - disagreements) on specified bits."""
    cdef int64_t specified = total_specified(masks)
    cdef int64_t raw
    with nogil:
        raw = _raw_one(values, masks, query, specified)
    return raw


def packed_raw_many(const uint64_t[:, ::1] values, const uint64_t[:, ::1] masks,
                    const uint64_t[:, ::1] queries):
    cdef int64_t specified = total_specified(masks)
    cdef Py_ssize_t i
    out = np.empty(queries.shape[0], dtype=np.int64)
    cdef int64_t[::1] out_view = out
    with nogil:
        for i in range(queries.shape[0]):
            out_view[i] = _raw_one(values, masks, queries[i], specified)
    return out


def local_search(const int64_t[:, ::1] pos, const uint8_t[:, ::1] val,
                 uint8_t[::1] start, Py_ssize_t max_iters, Py_ssize_t max_sideways):
    """Steepest descent on the matched-entry count from ``start``.

    Returns (candidate, final count, moves made, count trace).
    """
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t k = pos.shape[1]
    cdef Py_ssize_t m = start.shape[0]
    cdef Py_ssize_t z, c, j, best, it, sideways = 0, last = -1, moves = 0
    cdef int64_t count = 0, best_delta

    y_arr = np.array(start, dtype=np.uint8, copy=True)
    cdef uint8_t[::1] y = y_arr
    agree_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] agree = agree_arr
    delta_arr = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] delta = delta_arr
    trace_arr = np.zeros(max_iters + 1, dtype=np.int64)
    cdef int64_t[::1] trace = trace_arr

    # incidence lists: position -> (entry, slot)
    counts_arr = np.zeros(m + 1, dtype=np.int64)
    cdef int64_t[::1] ptr = counts_arr
    for z in range(n):
        for c in range(k):
            ptr[pos[z, c] + 1] += 1
    for j in range(m):
        ptr[j + 1] += ptr[j]
    fill_arr = np.array(counts_arr[:m], dtype=np.int64, copy=True)
    cdef int64_t[::1] fill = fill_arr
    inc_entry_arr = np.empty(n * k, dtype=np.int64)
    inc_slot_arr = np.empty(n * k, dtype=np.int64)
    cdef int64_t[::1] inc_entry = inc_entry_arr
    cdef int64_t[::1] inc_slot = inc_slot_arr
    cdef Py_ssize_t p
    for z in range(n):
        for c in range(k):
            j = pos[z, c]
            inc_entry[fill[j]] = z
            inc_slot[fill[j]] = c
            fill[j] += 1

    with nogil:
        for z in range(n):
            for c in range(k):
                if y[pos[z, c]] == val[z, c]:
                    agree[z] += 1
            if agree[z] == k:
                count += 1
        trace[0] = count
        for it in range(max_iters):
            if count == 0:
                break
            for j in range(m):
                delta[j] = 0
            for z in range(n):
                if agree[z] == k:
                    for c in range(k):
                        delta[pos[z, c]] -= 1
                elif agree[z] == k - 1:
                    for c in range(k):
                        if y[pos[z, c]] != val[z, c]:
                            delta[pos[z, c]] += 1
                            break
            best = -1
            best_delta = 0
            for j in range(m):
                if delta[j] < best_delta:
                    best_delta = delta[j]
                    best = j
            if best < 0:
                if sideways >= max_sideways:
                    break
                for j in range(m):
                    if delta[j] == 0 and j != last:
                        best = j
                        break
                if best < 0:
                    break
                sideways += 1
            else:
                sideways = 0
            y[best] ^= 1
            for p in range(ptr[best], ptr[best + 1]):
                z = inc_entry[p]
                c = inc_slot[p]
                if y[best] == val[z, c]:
                    agree[z] += 1
                    if agree[z] == k:
                        count += 1
                else:
                    if agree[z] == k:
                        count -= 1
                    agree[z] -= 1
            last = best
            moves += 1
            trace[moves] = count
    return y_arr, int(count), int(moves), trace_arr[:moves + 1].copy()
