# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled direct convolution kernels (stride 1, "same" zero padding).

Plain C loops; the innermost loop always runs along the contiguous last
axis so the compiler can vectorize the multiply-accumulate.  Summation
order is fixed, so results are deterministic (single-threaded on
purpose).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv2d_forward(double[:, :, :, ::1] x, double[:, :, :, ::1] w, double[::1] b):
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    out_arr = np.empty((nb, co, h, wd), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, o, c, di, dj, i, j, ii, j0, j1, off
    cdef double wv, bv
    with nogil:
        for n in range(nb):
            for o in range(co):
                bv = b[o]
                for i in range(h):
                    for j in range(wd):
                        out[n, o, i, j] = bv
                for c in range(ci):
                    for di in range(kh):
                        for dj in range(kw):
                            wv = w[o, c, di, dj]
                            off = dj - pw
                            j0 = -off if off < 0 else 0
                            j1 = wd - off if off > 0 else wd
                            for i in range(h):
                                ii = i + di - ph
                                if ii < 0 or ii >= h:
                                    continue
                                for j in range(j0, j1):
                                    out[n, o, i, j] += wv * x[n, c, ii, j + off]
    return out_arr


def conv2d_backward(double[:, :, :, ::1] dout, double[:, :, :, ::1] x, double[:, :, :, ::1] w):
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    dx_arr = np.zeros((nb, ci, h, wd), dtype=np.float64)
    dw_arr = np.zeros((co, ci, kh, kw), dtype=np.float64)
    db_arr = np.zeros(co, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t n, o, c, di, dj, i, j, ii, j0, j1, off
    cdef double wv, acc, g
    with nogil:
        for n in range(nb):
            for o in range(co):
                acc = 0.0
                for i in range(h):
                    for j in range(wd):
                        acc += dout[n, o, i, j]
                db[o] += acc
                for c in range(ci):
                    for di in range(kh):
                        for dj in range(kw):
                            wv = w[o, c, di, dj]
                            off = dj - pw
                            j0 = -off if off < 0 else 0
                            j1 = wd - off if off > 0 else wd
                            acc = 0.0
                            for i in range(h):
                                ii = i + di - ph
                                if ii < 0 or ii >= h:
                                    continue
                                for j in range(j0, j1):
                                    g = dout[n, o, i, j]
                                    dx[n, c, ii, j + off] += wv * g
                                    acc += g * x[n, c, ii, j + off]
                            dw[o, c, di, dj] += acc
    return dx_arr, dw_arr, db_arr


def conv1d_forward(double[:, :, ::1] x, double[:, :, ::1] w, double[::1] b):
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], ln = x.shape[2]
    cdef Py_ssize_t co = w.shape[0], kw = w.shape[2]
    cdef Py_ssize_t pw = kw // 2
    out_arr = np.empty((nb, co, ln), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t n, o, c, dj, j, j0, j1, off
    cdef double wv, bv
    with nogil:
        for n in range(nb):
            for o in range(co):
                bv = b[o]
                for j in range(ln):
                    out[n, o, j] = bv
                for c in range(ci):
                    for dj in range(kw):
                        wv = w[o, c, dj]
                        off = dj - pw
                        j0 = -off if off < 0 else 0
                        j1 = ln - off if off > 0 else ln
                        for j in range(j0, j1):
                            out[n, o, j] += wv * x[n, c, j + off]
    return out_arr


def conv1d_backward(double[:, :, ::1] dout, double[:, :, ::1] x, double[:, :, ::1] w):
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], ln = x.shape[2]
    cdef Py_ssize_t co = w.shape[0], kw = w.shape[2]
    cdef Py_ssize_t pw = kw // 2
    dx_arr = np.zeros((nb, ci, ln), dtype=np.float64)
    dw_arr = np.zeros((co, ci, kw), dtype=np.float64)
    db_arr = np.zeros(co, dtype=np.float64)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t n, o, c, dj, j, j0, j1, off
    cdef double wv, acc, g
    with nogil:
        for n in range(nb):
            for o in range(co):
                acc = 0.0
                for j in range(ln):
                    acc += dout[n, o, j]
                db[o] += acc
                for c in range(ci):
                    for dj in range(kw):
                        wv = w[o, c, dj]
                        off = dj - pw
                        j0 = -off if off < 0 else 0
                        j1 = ln - off if off > 0 else ln
                        acc = 0.0
                        for j in range(j0, j1):
                            g = dout[n, o, j]
                            dx[n, c, j + off] += wv * g
                            acc += g * x[n, c, j + off]
                        dw[o, c, dj] += acc
    return dx_arr, dw_arr, db_arr
