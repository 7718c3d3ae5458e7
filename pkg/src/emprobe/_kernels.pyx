# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot solver kernels.

Same contract as ``emprobe._kernels_py``; see that module for the
definitions. The win over numpy comes from single-pass loops without
temporaries, which matters for the thousands of small fits a nested
cross-validation sweep performs; for large problems numpy's BLAS routes
win, so ``emprobe._backend`` only sends small problems here.
"""

from libc.math cimport exp, log1p

import numpy as np

NAME = "compiled"


cdef inline double _softplus_neg(double z) nogil:
    # log(1 + exp(-z)) without overflow
    if z >= 0.0:
        return log1p(exp(-z))
    return -z + log1p(exp(z))


cdef inline double _sigmoid_neg(double z) nogil:
    # sigma(-z) = 1 / (1 + exp(z))
    cdef double e
    if z >= 0.0:
        e = exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(z))


def logistic_value(const double[::1] z):
    """Sum of per-sample losses given agreement margins z_i = s_i * m_i."""
    cdef Py_ssize_t i, n = z.shape[0]
    cdef double total = 0.0
    with nogil:
        for i in range(n):
            total += _softplus_neg(z[i])
    return total


def logistic_loss_grad(const double[:, ::1] X, const double[::1] s,
                       const double[::1] w, double b, double C):
    """Objective and gradient; also returns the Hessian weights dvec."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    grad_arr = np.zeros(d + 1)
    dvec_arr = np.empty(n)
    cdef double[::1] grad = grad_arr
    cdef double[::1] dvec = dvec_arr
    cdef double J = 0.0, wsq = 0.0
    cdef double m, z, sn, cr
    cdef Py_ssize_t i, j

    with nogil:
        for i in range(n):
            m = b
            for j in range(d):
                m += X[i, j] * w[j]
            z = s[i] * m
            J += _softplus_neg(z)
            sn = _sigmoid_neg(z)
            cr = C * (-s[i] * sn)      # C * (p - y)
            dvec[i] = (1.0 - sn) * sn  # p * (1 - p)
            for j in range(d):
                grad[j] += cr * X[i, j]
            grad[d] += cr
        for j in range(d):
            grad[j] += w[j]
            wsq += w[j] * w[j]
    return C * J + 0.5 * wsq, grad_arr, dvec_arr


def logistic_hessian(const double[:, ::1] X, const double[::1] dvec, double C):
    """Dense Hessian over (w, b) given the per-sample weights dvec."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    hess_arr = np.zeros((d + 1, d + 1))
    cdef double[:, ::1] hess = hess_arr
    cdef double cd, xj
    cdef Py_ssize_t i, j, k

    with nogil:
        for i in range(n):
            cd = C * dvec[i]
            for j in range(d):
                xj = cd * X[i, j]
                # upper triangle of the data term, mirrored below
                for k in range(j, d):
                    hess[j, k] += xj * X[i, k]
                hess[j, d] += xj
            hess[d, d] += cd
        for j in range(d):
            hess[j, j] += 1.0
            hess[d, j] = hess[j, d]
            for k in range(j + 1, d):
                hess[k, j] = hess[j, k]
    return hess_arr


def logistic_terms(const double[:, ::1] X, const double[::1] s,
                   const double[::1] w, double b, double C):
    """Fused objective, gradient and dense Hessian over (w, b)."""
    J, grad, dvec = logistic_loss_grad(X, s, w, b, C)
    return J, grad, logistic_hessian(X, dvec, C)
