# cython: language_level=3
"""Compiled versions of the kernels in ``_pykernels`` (same signatures)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log2, log, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


def _check(values, mu):
    values = np.ascontiguousarray(values, dtype=np.float64)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if values.ndim != 2 or mu.ndim != 2 or values.shape[0] != mu.shape[0]:
        raise ValueError("expected values (B, 2**n) and mu (B, n)")
    if values.shape[1] != 1 << mu.shape[1]:
        raise ValueError("row length must be 2**n")
    return values, mu


cdef inline void _forward(double* v, const double* mu, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t N = (<Py_ssize_t>1) << n
    cdef Py_ssize_t i, h, base, t
    cdef double p, q, s, a, b
    for i in range(n):
        h = (<Py_ssize_t>1) << i
        p = (1.0 + mu[i]) * 0.5
        q = (1.0 - mu[i]) * 0.5
        s = sqrt(1.0 - mu[i] * mu[i])
        base = 0
        while base < N:
            for t in range(base, base + h):
                a = v[t]
                b = v[t + h]
                v[t] = p * a + q * b
                v[t + h] = s * (a - b) * 0.5
            base += 2 * h


cdef inline void _inverse(double* v, const double* mu, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t N = (<Py_ssize_t>1) << n
    cdef Py_ssize_t i, h, base, t
    cdef double p, q, s, m, d
    for i in range(n):
        h = (<Py_ssize_t>1) << i
        p = (1.0 + mu[i]) * 0.5
        q = (1.0 - mu[i]) * 0.5
        s = sqrt(1.0 - mu[i] * mu[i])
        base = 0
        while base < N:
            for t in range(base, base + h):
                m = v[t]
                d = 2.0 * v[t + h] / s
                v[t] = m + q * d
                v[t + h] = m - p * d
            base += 2 * h


def transform_batch(values, mu):
    v_arr, mu_arr = _check(values, mu)
    v_arr = v_arr.copy()
    cdef double[:, ::1] v = v_arr
    cdef const double[:, ::1] m = mu_arr
    cdef Py_ssize_t B = m.shape[0], n = m.shape[1], r
    if B == 0:
        return v_arr
    with nogil:
        for r in range(B):
            _forward(&v[r, 0], &m[r, 0] if n > 0 else NULL, n)
    return v_arr


def inverse_batch(coeffs, mu):
    v_arr, mu_arr = _check(coeffs, mu)
    v_arr = v_arr.copy()
    cdef double[:, ::1] v = v_arr
    cdef const double[:, ::1] m = mu_arr
    cdef Py_ssize_t B = m.shape[0], n = m.shape[1], r
    if B == 0:
        return v_arr
    with nogil:
        for r in range(B):
            _inverse(&v[r, 0], &m[r, 0] if n > 0 else NULL, n)
    return v_arr


cdef inline void _weights(double* w, const double* mu, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t N = (<Py_ssize_t>1) << n
    cdef Py_ssize_t a, i
    cdef double x
    for a in range(N):
        x = 1.0
        for i in range(n):
            if (a >> i) & 1:
                x *= (1.0 - mu[i]) * 0.5
            else:
                x *= (1.0 + mu[i]) * 0.5
        w[a] = x


def weights_batch(mu):
    mu_arr = np.ascontiguousarray(mu, dtype=np.float64)
    cdef const double[:, ::1] m = mu_arr
    cdef Py_ssize_t B = m.shape[0], n = m.shape[1], r
    out = np.empty((B, 1 << n))
    cdef double[:, ::1] w = out
    with nogil:
        for r in range(B):
            _weights(&w[r, 0], &m[r, 0] if n > 0 else NULL, n)
    return out


def sweep_batch(values, mu, double zero_tol):
    v_arr, mu_arr = _check(values, mu)
    cdef const double[:, ::1] f = v_arr
    cdef const double[:, ::1] m = mu_arr
    cdef Py_ssize_t B = m.shape[0], n = m.shape[1]
    cdef Py_ssize_t N = (<Py_ssize_t>1) << n
    mean_a = np.zeros(B)
    var_a = np.zeros(B)
    inf_a = np.zeros(B)
    h_a = np.zeros(B)
    dvar_a = np.zeros((B, n))
    exc_a = np.full(B, -np.inf)
    emask_a = np.full(B, -1, dtype=np.int64)
    ej_a = np.full(B, -1, dtype=np.int64)
    cdef double[::1] o_mean = mean_a, o_var = var_a, o_inf = inf_a, o_h = h_a, o_exc = exc_a
    cdef double[:, ::1] o_dvar = dvar_a
    cdef cnp.int64_t[::1] o_mask = emask_a, o_j = ej_a

    cdef double* c = <double*> malloc(N * sizeof(double))
    cdef double* w = <double*> malloc(N * sizeof(double))
    cdef double* L = <double*> malloc(N * sizeof(double))
    cdef double* term = <double*> malloc(N * sizeof(double))
    cdef int* pc = <int*> malloc(N * sizeof(int))
    if c == NULL or w == NULL or L == NULL or term == NULL or pc == NULL:
        free(c); free(w); free(L); free(term); free(pc)
        raise MemoryError()

    cdef Py_ssize_t r, a, i, j, S, bit
    cdef double sq, sv, inf, h, e1, e2, d, ww, sig2, scale, val, best
    cdef cnp.int64_t bmask, bj
    scale = (4.0 ** n) / log(2.0)
    pc[0] = 0
    for a in range(1, N):
        pc[a] = pc[a >> 1] + (a & 1)

    try:
        with nogil:
            for r in range(B):
                for a in range(N):
                    c[a] = f[r, a]
                _forward(c, &m[r, 0] if n > 0 else NULL, n)
                _weights(w, &m[r, 0] if n > 0 else NULL, n)
                L[0] = 0.0
                for S in range(1, N):
                    bit = 0
                    while not ((S >> bit) & 1):
                        bit += 1
                    L[S] = L[S & (S - 1)] + log2(1.0 - m[r, bit] * m[r, bit])
                o_mean[r] = c[0]
                sv = 0.0
                inf = 0.0
                h = 0.0
                term[0] = 0.0
                for S in range(1, N):
                    sq = c[S] * c[S]
                    sv += sq
                    inf += pc[S] * sq
                    if c[S] != 0.0:
                        term[S] = sq * (L[S] - log2(sq))
                    else:
                        term[S] = 0.0
                    h += term[S]
                o_var[r] = sv
                o_inf[r] = inf
                o_h[r] = h
                for j in range(n):
                    e1 = 0.0
                    e2 = 0.0
                    for a in range(N):
                        if (a >> j) & 1:
                            continue
                        d = (f[r, a] - f[r, a | (1 << j)]) * 0.5
                        ww = w[a] + w[a | (1 << j)]
                        e1 += ww * d
                        e2 += ww * d * d
                    sig2 = 1.0 - m[r, j] * m[r, j]
                    val = sig2 * (e2 - e1 * e1)
                    o_dvar[r, j] = val if val > 0.0 else 0.0
                best = -INFINITY
                bmask = -1
                bj = -1
                for j in range(n):
                    for S in range(1, N):
                        if not ((S >> j) & 1):
                            continue
                        if not (c[S] > zero_tol or c[S] < -zero_tol):
                            continue
                        val = term[S] - scale * o_dvar[r, j]
                        if val > best:
                            best = val
                            bmask = S
                            bj = j
                o_exc[r] = best
                o_mask[r] = bmask
                o_j[r] = bj
    finally:
        free(c); free(w); free(L); free(term); free(pc)

    return {
        "mean": mean_a, "var": var_a, "inf": inf_a, "h_ge1": h_a, "dvar": dvar_a,
        "term_excess": exc_a, "term_mask": emask_a, "term_j": ej_a,
    }
