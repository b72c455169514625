# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled layer kernels.

Same contract as ``_kernels_py`` with array containers: MISP layers are
``uint64`` bitmask vectors (``n <= 64``), MCP layers are ``int64`` matrices
with one sigma row per node.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

cdef enum:
    EXACT = 0
    RELAXED = 1
    RESTRICTED = 2

MAX_MISP_N = 64


ctypedef struct MNode:
    uint64_t state
    int64_t value


cdef int _by_state(const void* a, const void* b) noexcept nogil:
    cdef const MNode* x = <const MNode*> a
    cdef const MNode* y = <const MNode*> b
    if x.state < y.state:
        return -1
    if x.state > y.state:
        return 1
    if x.value > y.value:
        return -1
    if x.value < y.value:
        return 1
    return 0


cdef int _by_rank(const void* a, const void* b) noexcept nogil:
    cdef const MNode* x = <const MNode*> a
    cdef const MNode* y = <const MNode*> b
    if x.value > y.value:
        return -1
    if x.value < y.value:
        return 1
    if x.state < y.state:
        return -1
    if x.state > y.state:
        return 1
    return 0


def misp_root(int n):
    cdef uint64_t full = (<uint64_t> 1 << n) - 1 if n < 64 else <uint64_t> 0xFFFFFFFFFFFFFFFF
    return np.array([full], dtype=np.uint64), np.zeros(1, dtype=np.int64)


def misp_expand(const uint64_t[::1] states, const int64_t[::1] values, int v, uint64_t nbr, int mode, int width):
    cdef Py_ssize_t m = states.shape[0], i, k, cnt = 0
    cdef uint64_t bit = (<uint64_t> 1) << v
    cdef uint64_t drop = bit | nbr
    cdef uint64_t s, union_
    cdef int64_t best
    cdef MNode* buf = <MNode*> malloc(2 * m * sizeof(MNode) + 1)
    if buf == NULL:
        raise MemoryError()
    try:
        for i in range(m):
            s = states[i]
            buf[cnt].state = s & ~bit
            buf[cnt].value = values[i]
            cnt += 1
            if s & bit:
                buf[cnt].state = s & ~drop
                buf[cnt].value = values[i] + 1
                cnt += 1
        qsort(buf, cnt, sizeof(MNode), _by_state)
        k = 0
        for i in range(cnt):
            if k == 0 or buf[i].state != buf[k - 1].state:
                buf[k] = buf[i]
                k += 1
        cnt = k
        if mode != EXACT and cnt > width:
            qsort(buf, cnt, sizeof(MNode), _by_rank)
            if mode == RELAXED:
                union_ = 0
                best = buf[width - 1].value
                for i in range(width - 1, cnt):
                    union_ |= buf[i].state
                buf[width - 1].state = union_
                buf[width - 1].value = best
            cnt = width
        out_s = np.empty(cnt, dtype=np.uint64)
        out_v = np.empty(cnt, dtype=np.int64)
        _fill_misp(buf, cnt, out_s, out_v)
        return out_s, out_v
    finally:
        free(buf)


cdef void _fill_misp(MNode* buf, Py_ssize_t cnt, uint64_t[::1] out_s, int64_t[::1] out_v):
    cdef Py_ssize_t i
    for i in range(cnt):
        out_s[i] = buf[i].state
        out_v[i] = buf[i].value


def misp_counts(const uint64_t[::1] states, int n):
    cdef Py_ssize_t i, j
    cdef uint64_t s
    counts = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] c = counts
    for i in range(states.shape[0]):
        s = states[i]
        j = 0
        while s:
            if s & 1:
                c[j] += 1
            s >>= 1
            j += 1
    return [int(x) for x in counts]


# qsort has no context argument; the row comparators read these globals.
cdef int64_t* _rows = NULL
cdef int64_t* _vals = NULL
cdef Py_ssize_t _ncol = 0


cdef int _rowcmp(Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef int64_t* ra = _rows + a * _ncol
    cdef int64_t* rb = _rows + b * _ncol
    cdef Py_ssize_t k
    for k in range(_ncol):
        if ra[k] < rb[k]:
            return -1
        if ra[k] > rb[k]:
            return 1
    return 0


cdef int _idx_by_state(const void* a, const void* b) noexcept nogil:
    cdef Py_ssize_t x = (<const Py_ssize_t*> a)[0]
    cdef Py_ssize_t y = (<const Py_ssize_t*> b)[0]
    cdef int c = _rowcmp(x, y)
    if c:
        return c
    if _vals[x] > _vals[y]:
        return -1
    if _vals[x] < _vals[y]:
        return 1
    return 0


cdef int _idx_by_rank(const void* a, const void* b) noexcept nogil:
    cdef Py_ssize_t x = (<const Py_ssize_t*> a)[0]
    cdef Py_ssize_t y = (<const Py_ssize_t*> b)[0]
    if _vals[x] > _vals[y]:
        return -1
    if _vals[x] < _vals[y]:
        return 1
    return _rowcmp(x, y)


def mcp_root(int n):
    return np.zeros((1, n), dtype=np.int64), np.zeros(1, dtype=np.int64)


def mcp_expand(const int64_t[:, ::1] states, const int64_t[::1] values, int v,
               const int64_t[::1] wrow, int64_t placed_weight, bint first, int mode, int width):
    global _rows, _vals, _ncol
    cdef Py_ssize_t m = states.shape[0], n = states.shape[1]
    cdef Py_ssize_t i, j, k, r, cnt = 0
    cdef int64_t sv, lo, hi, x, absm, best, cand
    cdef int64_t[::1] merged
    ch_np = np.empty((2 * m, n), dtype=np.int64)
    cv_np = np.empty(2 * m, dtype=np.int64)
    cdef int64_t[:, ::1] ch = ch_np
    cdef int64_t[::1] cv = cv_np
    for i in range(m):
        sv = states[i, v]
        if not first:
            for k in range(n):
                ch[cnt, k] = states[i, k] + wrow[k]
            ch[cnt, v] = 0
            cv[cnt] = values[i] + placed_weight - sv
            cnt += 1
        for k in range(n):
            ch[cnt, k] = states[i, k] - wrow[k]
        ch[cnt, v] = 0
        cv[cnt] = values[i] + placed_weight + sv
        cnt += 1

    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc((cnt + 1) * sizeof(Py_ssize_t))
    if idx == NULL:
        raise MemoryError()
    try:
        for i in range(cnt):
            idx[i] = i
        _rows = &ch[0, 0]
        _vals = &cv[0]
        _ncol = n
        qsort(idx, cnt, sizeof(Py_ssize_t), _idx_by_state)
        k = 0
        for i in range(cnt):
            if k == 0 or _rowcmp(idx[i], idx[k - 1]) != 0:
                idx[k] = idx[i]
                k += 1
        cnt = k
        if mode != EXACT and cnt > width:
            qsort(idx, cnt, sizeof(Py_ssize_t), _idx_by_rank)
            if mode == RESTRICTED:
                cnt = width
            else:
                merged_np = np.empty(n, dtype=np.int64)
                merged = merged_np
                absm = 0
                for j in range(n):
                    lo = ch[idx[width - 1], j]
                    hi = lo
                    for i in range(width, cnt):
                        x = ch[idx[i], j]
                        if x < lo:
                            lo = x
                        elif x > hi:
                            hi = x
                    if lo >= 0:
                        x = lo
                    elif hi <= 0:
                        x = hi
                    else:
                        x = 0
                    merged[j] = x
                    absm += x if x >= 0 else -x
                best = 0
                for i in range(width - 1, cnt):
                    r = idx[i]
                    cand = cv[r] - absm
                    for j in range(n):
                        x = ch[r, j]
                        cand += x if x >= 0 else -x
                    if i == width - 1 or cand > best:
                        best = cand
                out_s = np.empty((width, n), dtype=np.int64)
                out_v = np.empty(width, dtype=np.int64)
                for i in range(width - 1):
                    out_s[i] = ch_np[idx[i]]
                    out_v[i] = cv_np[idx[i]]
                out_s[width - 1] = merged_np
                out_v[width - 1] = best
                return out_s, out_v
        out_s = np.empty((cnt, n), dtype=np.int64)
        out_v = np.empty(cnt, dtype=np.int64)
        for i in range(cnt):
            out_s[i] = ch_np[idx[i]]
            out_v[i] = cv_np[idx[i]]
        return out_s, out_v
    finally:
        _rows = NULL
        _vals = NULL
        free(idx)
