# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"


cdef Py_ssize_t _pow3(int n):
    cdef Py_ssize_t r = 1
    cdef int i
    for i in range(n):
        r *= 3
    return r


def subcube_flags(values, domain, int n):
    cdef const unsigned char[::1] vals = np.ascontiguousarray(values, dtype=np.uint8)
    cdef const unsigned char[::1] dom = np.ascontiguousarray(domain, dtype=np.uint8)
    cdef Py_ssize_t size = _pow3(n)
    out_arr = np.empty(size, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t s, t, idx, p3, p2
    cdef int i, dgt
    for s in range(size):
        t = s
        idx = 0
        p3 = 1
        p2 = 1
        dgt = -1
        for i in range(n):
            dgt = t % 3
            if dgt == 2:
                break
            if dgt == 1:
                idx += p2
            t //= 3
            p3 *= 3
            p2 *= 2
        if dgt == 2:
            out[s] = out[s - 2 * p3] | out[s - p3]
        else:
            out[s] = (1 << vals[idx]) if dom[idx] else 0
    return out_arr


def dt_depth_table(flags, int n):
    cdef const unsigned char[::1] fl = np.ascontiguousarray(flags, dtype=np.uint8)
    cdef Py_ssize_t size = _pow3(n)
    depth_arr = np.zeros(size, dtype=np.int16)
    cdef short[::1] depth = depth_arr
    cdef Py_ssize_t s, t, p3
    cdef int i, best, cand, a, b
    for s in range(size):
        if fl[s] != 3:
            continue
        t = s
        p3 = 1
        best = 32767
        for i in range(n):
            if t % 3 == 2:
                a = depth[s - 2 * p3]
                b = depth[s - p3]
                cand = 1 + (a if a > b else b)
                if cand < best:
                    best = cand
            t //= 3
            p3 *= 3
        depth[s] = best if best != 32767 else 0
    return depth_arr


def cert_table(flags, int n):
    cdef const unsigned char[::1] fl = np.ascontiguousarray(flags, dtype=np.uint8)
    cdef Py_ssize_t size = _pow3(n)
    best_arr = np.empty(size, dtype=np.int16)
    cdef short[::1] best = best_arr
    cdef Py_ssize_t s, t, p3
    cdef int i, dgt, fixed, cur, par
    for s in range(size - 1, -1, -1):
        t = s
        p3 = 1
        fixed = 0
        for i in range(n):
            if t % 3 != 2:
                fixed += 1
            t //= 3
        cur = fixed if (fl[s] == 1 or fl[s] == 2) else n + 1
        t = s
        for i in range(n):
            dgt = t % 3
            if dgt != 2:
                par = best[s + (2 - dgt) * p3]
                if par < cur:
                    cur = par
            t //= 3
            p3 *= 3
        best[s] = cur
    return best_arr


def minimal_certificates(flags, int n, int value, int max_width):
    cdef const unsigned char[::1] fl = np.ascontiguousarray(flags, dtype=np.uint8)
    cdef Py_ssize_t size = _pow3(n)
    cdef unsigned char target = 1 << value
    out = []
    cdef Py_ssize_t s, t, p3
    cdef int i, dgt, width
    cdef bint minimal
    for s in range(size):
        if fl[s] != target:
            continue
        t = s
        p3 = 1
        width = 0
        minimal = True
        for i in range(n):
            dgt = t % 3
            if dgt != 2:
                width += 1
                if fl[s + (2 - dgt) * p3] == target:
                    minimal = False
                    break
            t //= 3
            p3 *= 3
        if minimal and width <= max_width:
            out.append(s)
    return np.asarray(out, dtype=np.int64)


cdef int _pack(long long avail, long long *blocks, int *start, int *stop, int nb, signed char *memo):
    if avail == 0:
        return 0
    if memo[avail] >= 0:
        return memo[avail]
    cdef int low = 0
    while not (avail >> low) & 1:
        low += 1
    cdef int res = _pack(avail & ~(1LL << low), blocks, start, stop, nb, memo)
    cdef int j, cand
    for j in range(start[low], stop[low]):
        if blocks[j] & ~avail == 0:
            cand = 1 + _pack(avail & ~blocks[j], blocks, start, stop, nb, memo)
            if cand > res:
                res = cand
    memo[avail] = res
    return res


def max_packing(masks, int n):
    ms = sorted(set(int(m) for m in masks if m), key=lambda m: ((m & -m).bit_length(), m))
    if not ms:
        return 0
    if n > 24:
        raise ValueError("packing limited to 24 positions")
    cdef int nb = len(ms)
    cdef long long *blocks = <long long *> malloc(nb * sizeof(long long))
    cdef int *start = <int *> malloc((n + 1) * sizeof(int))
    cdef int *stop = <int *> malloc((n + 1) * sizeof(int))
    cdef signed char *memo = <signed char *> malloc((1 << n) * sizeof(signed char))
    cdef int i, j, low
    try:
        for i in range(n + 1):
            start[i] = 0
            stop[i] = 0
        for j in range(nb):
            blocks[j] = ms[j]
        j = 0
        for i in range(n):
            start[i] = j
            while j < nb and ((ms[j] & -ms[j]).bit_length() - 1) == i:
                j += 1
            stop[i] = j
        for i in range(1 << n):
            memo[i] = -1
        return _pack((1LL << n) - 1, blocks, start, stop, nb, memo)
    finally:
        free(blocks)
        free(start)
        free(stop)
        free(memo)


def min_hitting_set(masks, int n):
    ms_list = [int(m) for m in masks]
    if not ms_list:
        return 0
    if any(m == 0 for m in ms_list):
        raise ValueError("empty set cannot be hit")
    cdef int nm = len(ms_list)
    cdef long long *ms = <long long *> malloc(nm * sizeof(long long))
    cdef int size, j
    cdef long long t, c, r, limit
    cdef bint ok
    try:
        for j in range(nm):
            ms[j] = ms_list[j]
        limit = 1LL << n
        for size in range(n + 1):
            # Gosper's hack walks all n-bit words of the given popcount.
            t = (1LL << size) - 1
            while t < limit:
                ok = True
                for j in range(nm):
                    if ms[j] & t == 0:
                        ok = False
                        break
                if ok:
                    return size
                if t == 0:
                    break
                c = t & -t
                r = t + c
                t = (((r ^ t) >> 2) // c) | r
        raise AssertionError("unreachable: full set hits every nonempty mask")
    finally:
        free(ms)
