# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled recurrence kernels.

Drop-in replacement for fedwatt.model._kernels_np; see that module for the
cell equations and the cache layout.  Hidden-to-hidden projections run
through BLAS dgemm and the gate math runs in fused loops over preallocated
buffers, avoiding both the per-step dispatch and the temporary arrays of the
numpy fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline double _sigmoid(double a) noexcept nogil:
    return 1.0 / (1.0 + exp(-a))


cdef void _project(const double* u_ptr, int rows, int hidden, int nb,
                   const double* src, double* out) noexcept nogil:
    # out (nb x rows, row-major) = src (nb x hidden, row-major) @ U^T
    # with U laid out (rows x hidden) row-major at u_ptr
    cdef double one = 1.0, zero = 0.0
    dgemm(b"T", b"N", &rows, &nb, &hidden, &one, <double*> u_ptr, &hidden,
          <double*> src, &hidden, &zero, out, &rows)


cdef void _backproject(const double* u_ptr, int rows, int hidden, int nb,
                       const double* gact, double* out, double beta) noexcept nogil:
    # out (nb x hidden) = gact (nb x rows) @ U + beta * out
    cdef double one = 1.0
    dgemm(b"N", b"N", &hidden, &nb, &rows, &one, <double*> u_ptr, &hidden,
          <double*> gact, &rows, &beta, out, &hidden)


cdef void _accumulate_outer(const double* gact, int rows, const double* hmat,
                            int hidden, int nb, double* out) noexcept nogil:
    # out (rows x hidden) += gact (nb x rows)^T @ hmat (nb x hidden)
    cdef double one = 1.0
    dgemm(b"N", b"T", &hidden, &rows, &nb, &one, <double*> hmat, &hidden,
          <double*> gact, &rows, &one, out, &hidden)


def gru_forward(double[:, ::1] wx, double[:, :, ::1] u, double[:, ::1] b,
                double[:, ::1] x):
    cdef int n = <int> x.shape[0], length = <int> x.shape[1]
    cdef int hidden = <int> wx.shape[1], two_h = 2 * hidden
    cdef cnp.ndarray h_arr = np.zeros((n, hidden))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] pzr = np.empty((n, two_h))
    cdef double[:, ::1] pc = np.empty((n, hidden))
    cdef double[:, ::1] rh = np.empty((n, hidden))
    cdef int t, i, j
    cdef double xv, z, r, c
    with nogil:
        for t in range(length):
            _project(&u[0, 0, 0], two_h, hidden, n, &h[0, 0], &pzr[0, 0])
            for i in range(n):
                xv = x[i, t]
                for j in range(hidden):
                    r = _sigmoid(xv * wx[1, j] + b[1, j] + pzr[i, hidden + j])
                    rh[i, j] = r * h[i, j]
            _project(&u[2, 0, 0], hidden, hidden, n, &rh[0, 0], &pc[0, 0])
            for i in range(n):
                xv = x[i, t]
                for j in range(hidden):
                    z = _sigmoid(xv * wx[0, j] + b[0, j] + pzr[i, j])
                    c = tanh(xv * wx[2, j] + b[2, j] + pc[i, j])
                    h[i, j] = (1.0 - z) * c + z * h[i, j]
    return h_arr


def gru_forward_cached(double[:, ::1] wx, double[:, :, ::1] u, double[:, ::1] b,
                       double[:, ::1] x):
    cdef int n = <int> x.shape[0], length = <int> x.shape[1]
    cdef int hidden = <int> wx.shape[1], two_h = 2 * hidden
    cdef cnp.ndarray h_arr = np.zeros((n, hidden))
    cdef cnp.ndarray zs_arr = np.empty((length, n, hidden))
    cdef cnp.ndarray rs_arr = np.empty((length, n, hidden))
    cdef cnp.ndarray cs_arr = np.empty((length, n, hidden))
    cdef cnp.ndarray hs_arr = np.empty((length, n, hidden))
    cdef double[:, ::1] h = h_arr
    cdef double[:, :, ::1] zs = zs_arr
    cdef double[:, :, ::1] rs = rs_arr
    cdef double[:, :, ::1] cs = cs_arr
    cdef double[:, :, ::1] hs = hs_arr
    cdef double[:, ::1] pzr = np.empty((n, two_h))
    cdef double[:, ::1] pc = np.empty((n, hidden))
    cdef double[:, ::1] rh = np.empty((n, hidden))
    cdef int t, i, j
    cdef double xv, z, r, c
    with nogil:
        for t in range(length):
            _project(&u[0, 0, 0], two_h, hidden, n, &h[0, 0], &pzr[0, 0])
            for i in range(n):
                xv = x[i, t]
                for j in range(hidden):
                    hs[t, i, j] = h[i, j]
                    z = _sigmoid(xv * wx[0, j] + b[0, j] + pzr[i, j])
                    r = _sigmoid(xv * wx[1, j] + b[1, j] + pzr[i, hidden + j])
                    zs[t, i, j] = z
                    rs[t, i, j] = r
                    rh[i, j] = r * h[i, j]
            _project(&u[2, 0, 0], hidden, hidden, n, &rh[0, 0], &pc[0, 0])
            for i in range(n):
                xv = x[i, t]
                for j in range(hidden):
                    c = tanh(xv * wx[2, j] + b[2, j] + pc[i, j])
                    cs[t, i, j] = c
                    h[i, j] = (1.0 - zs[t, i, j]) * c + zs[t, i, j] * hs[t, i, j]
    return h_arr, (zs_arr, rs_arr, cs_arr, hs_arr)


def gru_backward(double[:, ::1] wx, double[:, :, ::1] u, double[:, ::1] x,
                 cache, double[:, ::1] g_hlast):
    zs_arr, rs_arr, cs_arr, hs_arr = cache
    cdef double[:, :, ::1] zs = zs_arr
    cdef double[:, :, ::1] rs = rs_arr
    cdef double[:, :, ::1] cs = cs_arr
    cdef double[:, :, ::1] hs = hs_arr
    cdef int n = <int> x.shape[0], length = <int> x.shape[1]
    cdef int hidden = <int> wx.shape[1], two_h = 2 * hidden
    cdef cnp.ndarray g_wx_arr = np.zeros((3, hidden))
    cdef cnp.ndarray g_u_arr = np.zeros((3, hidden, hidden))
    cdef cnp.ndarray g_b_arr = np.zeros((3, hidden))
    cdef cnp.ndarray gh_arr = np.array(g_hlast)
    cdef double[:, ::1] g_wx = g_wx_arr
    cdef double[:, :, ::1] g_u = g_u_arr
    cdef double[:, ::1] g_b = g_b_arr
    cdef double[:, ::1] gh = gh_arr
    cdef double[:, ::1] gac = np.empty((n, hidden))
    cdef double[:, ::1] gazr = np.empty((n, two_h))
    cdef double[:, ::1] grh = np.empty((n, hidden))
    cdef double[:, ::1] ghn = np.empty((n, hidden))
    cdef double[:, ::1] rhp = np.empty((n, hidden))
    cdef int t, i, j
    cdef double xv, ghv, zv, cv, hp, rv, ga
    with nogil:
        for t in range(length - 1, -1, -1):
            for i in range(n):
                for j in range(hidden):
                    ghv = gh[i, j]
                    zv = zs[t, i, j]
                    cv = cs[t, i, j]
                    hp = hs[t, i, j]
                    gac[i, j] = ghv * (1.0 - zv) * (1.0 - cv * cv)
                    gazr[i, j] = ghv * (hp - cv) * zv * (1.0 - zv)
                    ghn[i, j] = ghv * zv
                    rhp[i, j] = rs[t, i, j] * hp
            _backproject(&u[2, 0, 0], hidden, hidden, n, &gac[0, 0], &grh[0, 0], 0.0)
            for i in range(n):
                for j in range(hidden):
                    rv = rs[t, i, j]
                    gazr[i, hidden + j] = grh[i, j] * hs[t, i, j] * rv * (1.0 - rv)
                    ghn[i, j] = ghn[i, j] + grh[i, j] * rv
            _accumulate_outer(&gac[0, 0], hidden, &rhp[0, 0], hidden, n,
                              &g_u[2, 0, 0])
            _accumulate_outer(&gazr[0, 0], two_h, &hs[t, 0, 0], hidden, n,
                              &g_u[0, 0, 0])
            for i in range(n):
                xv = x[i, t]
                for j in range(hidden):
                    ga = gac[i, j]
                    g_wx[2, j] = g_wx[2, j] + ga * xv
                    g_b[2, j] = g_b[2, j] + ga
                    ga = gazr[i, j]
                    g_wx[0, j] = g_wx[0, j] + ga * xv
                    g_b[0, j] = g_b[0, j] + ga
                    ga = gazr[i, hidden + j]
                    g_wx[1, j] = g_wx[1, j] + ga * xv
                    g_b[1, j] = g_b[1, j] + ga
                    gh[i, j] = ghn[i, j]
            _backproject(&u[0, 0, 0], two_h, hidden, n, &gazr[0, 0], &gh[0, 0], 1.0)
    return g_wx_arr, g_u_arr, g_b_arr
