# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; same results."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline bint lit_true(signed char a, int lit) nogil:
    return a != -1 and ((a == 1) == (lit > 0))


cdef int _propagate(const int[::1] lits, const long long[::1] offsets, int m,
                    int n_vars, signed char[::1] assign, int[::1] trail,
                    int* trail_len, unsigned char[::1] pol) nogil:
    cdef int c, p, lit, v, nun, last
    cdef bint sat, changed
    cdef signed char a
    while True:
        changed = False
        for c in range(m):
            nun = 0
            last = 0
            sat = False
            for p in range(offsets[c], offsets[c + 1]):
                lit = lits[p]
                a = assign[lit if lit > 0 else -lit]
                if a == -1:
                    nun += 1
                    last = lit
                elif (a == 1) == (lit > 0):
                    sat = True
                    break
            if sat:
                continue
            if nun == 0:
                return 0
            if nun == 1:
                v = last if last > 0 else -last
                assign[v] = 1 if last > 0 else 0
                trail[trail_len[0]] = v
                trail_len[0] += 1
                changed = True
        if changed:
            continue
        for v in range(n_vars + 1):
            pol[v] = 0
        for c in range(m):
            sat = False
            for p in range(offsets[c], offsets[c + 1]):
                lit = lits[p]
                if lit_true(assign[lit if lit > 0 else -lit], lit):
                    sat = True
                    break
            if sat:
                continue
            for p in range(offsets[c], offsets[c + 1]):
                lit = lits[p]
                v = lit if lit > 0 else -lit
                if assign[v] == -1:
                    pol[v] |= 1 if lit > 0 else 2
        for v in range(1, n_vars + 1):
            if pol[v] == 1 or pol[v] == 2:
                assign[v] = 1 if pol[v] == 1 else 0
                trail[trail_len[0]] = v
                trail_len[0] += 1
                changed = True
        if not changed:
            return 1


cdef int _first_open(const int[::1] lits, const long long[::1] offsets, int m,
                     signed char[::1] assign) nogil:
    cdef int c, p, lit, lit_open
    cdef bint sat
    cdef signed char a
    for c in range(m):
        lit_open = 0
        sat = False
        for p in range(offsets[c], offsets[c + 1]):
            lit = lits[p]
            a = assign[lit if lit > 0 else -lit]
            if a == -1:
                if lit_open == 0:
                    lit_open = lit
            elif (a == 1) == (lit > 0):
                sat = True
                break
        if not sat:
            return lit_open
    return 0


def dpll_flat(lits_in, offsets_in, int n_vars, long long budget):
    cdef const int[::1] lits = np.ascontiguousarray(lits_in, dtype=np.int32)
    cdef const long long[::1] offsets = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef int m = offsets.shape[0] - 1
    assign_arr = np.full(n_vars + 1, -1, dtype=np.int8)
    cdef signed char[::1] assign = assign_arr
    cdef int[::1] trail = np.zeros(n_vars + 1, dtype=np.int32)
    cdef unsigned char[::1] pol = np.zeros(n_vars + 1, dtype=np.uint8)
    cdef int[::1] f_pos = np.zeros(n_vars + 1, dtype=np.int32)
    cdef int[::1] f_var = np.zeros(n_vars + 1, dtype=np.int32)
    cdef signed char[::1] f_val = np.zeros(n_vars + 1, dtype=np.int8)
    cdef signed char[::1] f_flip = np.zeros(n_vars + 1, dtype=np.int8)
    cdef int depth = 0
    cdef int trail_len = 0
    cdef long long decisions = 0
    cdef int lit, var, v, pos
    cdef signed char val
    cdef bint resumed
    with nogil:
        while True:
            if not _propagate(lits, offsets, m, n_vars, assign, trail, &trail_len, pol):
                resumed = False
                while depth > 0:
                    depth -= 1
                    pos = f_pos[depth]
                    while trail_len > pos:
                        trail_len -= 1
                        assign[trail[trail_len]] = -1
                    if not f_flip[depth]:
                        var = f_var[depth]
                        val = 1 - f_val[depth]
                        assign[var] = val
                        trail[trail_len] = var
                        trail_len += 1
                        f_val[depth] = val
                        f_flip[depth] = 1
                        depth += 1
                        resumed = True
                        break
                if not resumed:
                    with gil:
                        return 0, np.zeros(n_vars + 1, dtype=np.int8), decisions
                continue
            lit = _first_open(lits, offsets, m, assign)
            if lit == 0:
                with gil:
                    out = np.maximum(assign_arr, 0).astype(np.int8)
                    return 1, out, decisions
            decisions += 1
            if decisions > budget:
                with gil:
                    return -1, np.zeros(n_vars + 1, dtype=np.int8), decisions
            var = lit if lit > 0 else -lit
            val = 1 if lit > 0 else 0
            f_pos[depth] = trail_len
            f_var[depth] = var
            f_val[depth] = val
            f_flip[depth] = 0
            depth += 1
            assign[var] = val
            trail[trail_len] = var
            trail_len += 1


def segment_mean(indptr_in, indices_in, h_in, Py_ssize_t n_out):
    cdef const long long[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int64)
    cdef const long long[::1] indices = np.ascontiguousarray(indices_in, dtype=np.int64)
    cdef const double[:, ::1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef Py_ssize_t f = h.shape[1]
    out_arr = np.zeros((n_out, f), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, col
    cdef long long deg
    with nogil:
        for i in range(n_out):
            deg = indptr[i + 1] - indptr[i]
            if deg == 0:
                continue
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                for col in range(f):
                    out[i, col] += h[j, col]
            for col in range(f):
                out[i, col] /= deg
    return out_arr


def segment_mean_backward(indptr_in, indices_in, grad_in, Py_ssize_t n_src):
    cdef const long long[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int64)
    cdef const long long[::1] indices = np.ascontiguousarray(indices_in, dtype=np.int64)
    cdef const double[:, ::1] g = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef Py_ssize_t n_out = indptr.shape[0] - 1
    cdef Py_ssize_t f = g.shape[1]
    grad_arr = np.zeros((n_src, f), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double[::1] scaled = np.zeros(f, dtype=np.float64)
    cdef Py_ssize_t i, j, p, col
    cdef long long deg
    with nogil:
        for i in range(n_out):
            deg = indptr[i + 1] - indptr[i]
            if deg == 0:
                continue
            for col in range(f):
                scaled[col] = g[i, col] / deg
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                for col in range(f):
                    grad[j, col] += scaled[col]
    return grad_arr
