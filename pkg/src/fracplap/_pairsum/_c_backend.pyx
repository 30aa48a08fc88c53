# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-sum kernels; semantics identical to py_backend."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow


cdef inline double _phi(double t, double p) nogil:
    if t == 0.0:
        return 0.0
    if p == 2.0:
        return t
    return pow(fabs(t), p - 2.0) * t


cdef inline double _pospart(double t) nogil:
    return t if t > 0.0 else 0.0


def seminorm_pp(const double[::1] u, const double[:, ::1] W, const double[::1] kappa, double p):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, tail = 0.0, d
    with nogil:
        if p == 2.0:
            for i in range(n):
                for j in range(i + 1, n):
                    d = u[i] - u[j]
                    acc += W[i, j] * d * d
                tail += kappa[i] * u[i] * u[i]
        else:
            for i in range(n):
                for j in range(i + 1, n):
                    d = u[i] - u[j]
                    if d != 0.0:
                        acc += W[i, j] * pow(fabs(d), p)
                if u[i] != 0.0:
                    tail += kappa[i] * pow(fabs(u[i]), p)
    return 2.0 * acc + 2.0 * tail


def seminorm_grad(const double[::1] u, const double[:, ::1] W, const double[::1] kappa, double p):
    cdef Py_ssize_t n = u.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] g = out
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if j != i:
                    acc += W[i, j] * _phi(u[i] - u[j], p)
            g[i] = 2.0 * p * (acc + kappa[i] * _phi(u[i], p))
    return out


def pairing_pp(const double[::1] u, const double[::1] xi, const double[:, ::1] W, const double[::1] kappa, double p):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, tail = 0.0
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc += W[i, j] * _phi(u[i] - u[j], p) * (xi[i] - xi[j])
            tail += kappa[i] * _phi(u[i], p) * xi[i]
    return p * (2.0 * acc + 2.0 * tail)


def halfpair_pos_grad(const double[::1] u, const double[:, ::1] W, const double[::1] kappa, double p):
    cdef Py_ssize_t n = u.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] g = out
    cdef Py_ssize_t i, j
    cdef double a, b, d, fac, acc, theta
    with nogil:
        for i in range(n):
            a = u[i]
            theta = 1.0 if a > 0.0 else 0.0
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                b = u[j]
                d = a - b
                if d == 0.0:
                    continue
                fac = 1.0 if p == 2.0 else pow(fabs(d), p - 2.0)
                acc += W[i, j] * fac * ((p - 1.0) * (_pospart(a) - _pospart(b)) + d * theta)
            if a != 0.0:
                fac = 1.0 if p == 2.0 else pow(fabs(a), p - 2.0)
                acc += kappa[i] * fac * ((p - 1.0) * _pospart(a) + a * theta)
            g[i] = 2.0 * acc
    return out
