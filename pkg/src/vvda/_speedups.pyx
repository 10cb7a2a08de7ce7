# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-element assembly kernels (hot path of each time step).

Mirrors vvda._kernels_np; selected at import by vvda.kernels.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def weighted_mass_local(double[:, ::1] wq, double[:, ::1] phi):
    cdef Py_ssize_t nt = wq.shape[0]
    cdef Py_ssize_t nq = wq.shape[1]
    cdef Py_ssize_t nloc = phi.shape[1]
    cdef Py_ssize_t pair = nloc * nloc
    out_arr = np.zeros((nt, nloc, nloc))
    cdef double[::1] out = out_arr.reshape(-1)
    # precompute the rank-one basis products per quadrature point
    outer_arr = np.empty((nq, pair))
    cdef double[:, ::1] outer = outer_arr
    cdef Py_ssize_t t, q, a, b, k
    cdef double w
    for q in range(nq):
        k = 0
        for a in range(nloc):
            for b in range(nloc):
                outer[q, k] = phi[q, a] * phi[q, b]
                k += 1
    for t in range(nt):
        for q in range(nq):
            w = wq[t, q]
            for k in range(pair):
                out[t * pair + k] += w * outer[q, k]
    return out_arr


def convection_local(double[:, ::1] wdet, double[:, ::1] vx, double[:, ::1] vy,
                     double[:, ::1] phi, double[:, :, :, ::1] gphys):
    cdef Py_ssize_t nt = wdet.shape[0]
    cdef Py_ssize_t nq = wdet.shape[1]
    cdef Py_ssize_t nloc = phi.shape[1]
    out_arr = np.zeros((nt, nloc, nloc))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] s = np.empty(nloc)
    cdef Py_ssize_t t, q, a, b
    cdef double w, ux, uy, wa
    for t in range(nt):
        for q in range(nq):
            w = wdet[t, q]
            ux = vx[t, q]
            uy = vy[t, q]
            for b in range(nloc):
                s[b] = ux * gphys[t, q, b, 0] + uy * gphys[t, q, b, 1]
            for a in range(nloc):
                wa = w * phi[q, a]
                for b in range(nloc):
                    out[t, a, b] += wa * s[b]
    return out_arr


def scatter_add(double[::1] data, long long[::1] index, double[::1] values):
    cdef Py_ssize_t n = index.shape[0]
    cdef Py_ssize_t k
    for k in range(n):
        data[index[k]] += values[k]
