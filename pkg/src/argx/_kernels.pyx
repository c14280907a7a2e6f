# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel.

Must stay operation-for-operation in sync with _kernels_py.py so both
backends produce bit-identical strengths.

Kind codes: 0 = df-quad, 1 = quad, 2 = reb, 3 = qem.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, NAN

BACKEND_NAME = "cython"

KIND_DFQUAD = 0
KIND_QUAD = 1
KIND_REB = 2
KIND_QEM = 3


cdef double _node_strength(int kind, double tau, double* vals, int n_att, int n_sup) noexcept nogil:
    cdef double va = 0.0
    cdef double vs = 0.0
    cdef double pa, ps, energy, h, v
    cdef int k
    if kind == 0:  # df-quad
        for k in range(n_att):
            v = vals[k]
            va = va + v - va * v
        for k in range(n_att, n_att + n_sup):
            v = vals[k]
            vs = vs + v - vs * v
        if va >= vs:
            return tau - tau * (va - vs)
        return tau + (1.0 - tau) * (vs - va)
    elif kind == 1:  # quad
        if n_att == 0 and n_sup == 0:
            return tau
        if n_sup == 0:
            pa = tau
            for k in range(n_att):
                pa = pa - pa * vals[k]
            return pa
        if n_att == 0:
            ps = tau
            for k in range(n_att, n_att + n_sup):
                ps = ps + (1.0 - ps) * vals[k]
            return ps
        pa = tau
        for k in range(n_att):
            pa = pa - pa * vals[k]
        ps = tau
        for k in range(n_att, n_att + n_sup):
            ps = ps + (1.0 - ps) * vals[k]
        return (pa + ps) / 2.0
    elif kind == 2:  # reb
        energy = 0.0
        for k in range(n_att, n_att + n_sup):
            energy += vals[k]
        for k in range(n_att):
            energy -= vals[k]
        return 1.0 - (1.0 - tau * tau) / (1.0 + tau * exp(energy))
    else:  # qem
        energy = 0.0
        for k in range(n_att, n_att + n_sup):
            energy += vals[k]
        for k in range(n_att):
            energy -= vals[k]
        if energy >= 0.0:
            h = (energy * energy) / (1.0 + energy * energy)
            return tau + (1.0 - tau) * h
        h = (energy * energy) / (1.0 + energy * energy)
        return tau - tau * h


def eval_all(
    cnp.ndarray[cnp.float64_t, ndim=1] tau,
    cnp.ndarray[cnp.int32_t, ndim=1] att_indptr,
    cnp.ndarray[cnp.int32_t, ndim=1] att_indices,
    cnp.ndarray[cnp.int32_t, ndim=1] sup_indptr,
    cnp.ndarray[cnp.int32_t, ndim=1] sup_indices,
    cnp.ndarray[cnp.int32_t, ndim=1] order,
    int kind,
):
    """Strengths for every node, in node-index order."""
    cdef Py_ssize_t n = tau.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.zeros(n, dtype=np.float64)
    cdef double[::1] sv = s
    cdef double[::1] tv = tau
    cdef int[::1] ap = att_indptr
    cdef int[::1] ai = att_indices
    cdef int[::1] sp = sup_indptr
    cdef int[::1] si = sup_indices
    cdef int[::1] od = order
    # Scratch buffer sized for the largest in-neighbourhood.
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] buf = scratch
    cdef Py_ssize_t oi
    cdef int i, j, n_att, n_sup, pos
    with nogil:
        for oi in range(od.shape[0]):
            i = od[oi]
            pos = 0
            for j in range(ap[i], ap[i + 1]):
                buf[pos] = sv[ai[j]]
                pos += 1
            n_att = pos
            for j in range(sp[i], sp[i + 1]):
                buf[pos] = sv[si[j]]
                pos += 1
            n_sup = pos - n_att
            sv[i] = _node_strength(kind, tv[i], &buf[0], n_att, n_sup)
    return s


def eval_masked(
    cnp.ndarray[cnp.float64_t, ndim=1] tau,
    cnp.ndarray[cnp.int32_t, ndim=1] att_indptr,
    cnp.ndarray[cnp.int32_t, ndim=1] att_indices,
    cnp.ndarray[cnp.int32_t, ndim=1] sup_indptr,
    cnp.ndarray[cnp.int32_t, ndim=1] sup_indices,
    cnp.ndarray[cnp.int32_t, ndim=1] order,
    cnp.ndarray[cnp.uint8_t, ndim=1] mask,
    int kind,
):
    """Strengths over the subgraph induced by mask; excluded nodes get NaN."""
    cdef Py_ssize_t n = tau.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] sv = s
    cdef double[::1] tv = tau
    cdef int[::1] ap = att_indptr
    cdef int[::1] ai = att_indices
    cdef int[::1] sp = sup_indptr
    cdef int[::1] si = sup_indices
    cdef int[::1] od = order
    cdef unsigned char[::1] mv = mask
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] buf = scratch
    cdef Py_ssize_t oi
    cdef int i, j, jj, n_att, n_sup, pos
    with nogil:
        for oi in range(n):
            ov[oi] = NAN
        for oi in range(od.shape[0]):
            i = od[oi]
            if not mv[i]:
                continue
            pos = 0
            for j in range(ap[i], ap[i + 1]):
                jj = ai[j]
                if mv[jj]:
                    buf[pos] = sv[jj]
                    pos += 1
            n_att = pos
            for j in range(sp[i], sp[i + 1]):
                jj = si[j]
                if mv[jj]:
                    buf[pos] = sv[jj]
                    pos += 1
            n_sup = pos - n_att
            sv[i] = _node_strength(kind, tv[i], &buf[0], n_att, n_sup)
            ov[i] = sv[i]
    return out
