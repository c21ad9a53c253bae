# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled row-wise kernels for layer normalization and softmax.

Drop-in replacements for :mod:`metavit.vit._kernels_py`; one pass per row
and no temporaries, which is what matters for the short token sequences
the ViT works on.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def layernorm_forward(double[:, ::1] x, double[::1] gamma, double[::1] beta, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    y_arr = np.empty((n, d))
    xhat_arr = np.empty((n, d))
    rstd_arr = np.empty(n)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[::1] rstd = rstd_arr
    cdef double mean, var, r, c
    with nogil:
        for i in range(n):
            mean = 0.0
            for j in range(d):
                mean += x[i, j]
            mean /= d
            var = 0.0
            for j in range(d):
                c = x[i, j] - mean
                var += c * c
            var /= d
            r = 1.0 / sqrt(var + eps)
            rstd[i] = r
            for j in range(d):
                c = (x[i, j] - mean) * r
                xhat[i, j] = c
                y[i, j] = c * gamma[j] + beta[j]
    return y_arr, xhat_arr, rstd_arr


def layernorm_backward(double[:, ::1] dy, double[:, ::1] xhat, double[::1] rstd, double[::1] gamma):
    cdef Py_ssize_t n = dy.shape[0], d = dy.shape[1], i, j
    dx_arr = np.empty((n, d))
    dgamma_arr = np.zeros(d)
    dbeta_arr = np.zeros(d)
    cdef double[:, ::1] dx = dx_arr
    cdef double[::1] dgamma = dgamma_arr
    cdef double[::1] dbeta = dbeta_arr
    cdef double m1, m2, g
    with nogil:
        for i in range(n):
            m1 = 0.0
            m2 = 0.0
            for j in range(d):
                dgamma[j] += dy[i, j] * xhat[i, j]
                dbeta[j] += dy[i, j]
                g = dy[i, j] * gamma[j]
                m1 += g
                m2 += g * xhat[i, j]
            m1 /= d
            m2 /= d
            for j in range(d):
                dx[i, j] = (dy[i, j] * gamma[j] - m1 - xhat[i, j] * m2) * rstd[i]
    return dx_arr, dgamma_arr, dbeta_arr


def softmax_rows(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    y_arr = np.empty((n, d))
    cdef double[:, ::1] y = y_arr
    cdef double m, s
    with nogil:
        for i in range(n):
            m = x[i, 0]
            for j in range(1, d):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(d):
                y[i, j] = exp(x[i, j] - m)
                s += y[i, j]
            for j in range(d):
                y[i, j] /= s
    return y_arr


def softmax_rows_backward(double[:, ::1] dy, double[:, ::1] y):
    cdef Py_ssize_t n = dy.shape[0], d = dy.shape[1], i, j
    dx_arr = np.empty((n, d))
    cdef double[:, ::1] dx = dx_arr
    cdef double s
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(d):
                s += dy[i, j] * y[i, j]
            for j in range(d):
                dx[i, j] = y[i, j] * (dy[i, j] - s)
    return dx_arr


def adam_update(double[::1] params, double[::1] grads, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double bias1, double bias2, double eps):
    cdef Py_ssize_t n = params.shape[0], i
    cdef double g
    with nogil:
        for i in range(n):
            g = grads[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g)
            params[i] -= lr * (m[i] / bias1) / (sqrt(v[i] / bias2) + eps)
