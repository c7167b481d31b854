# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled covariant kinetic kernels (see _numpy.py for the reference)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def kinetic_energy(cnp.complex128_t[:, ::1] u,
                   cnp.complex128_t[:, ::1] px,
                   cnp.complex128_t[:, ::1] py,
                   double[:, ::1] wx,
                   double[:, ::1] wy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double e = 0.0
    cdef double complex v
    for i in range(nx - 1):
        for j in range(ny):
            v = px[i, j] * u[i + 1, j] - u[i, j]
            e += wx[i, j] * (v.real * v.real + v.imag * v.imag)
    for i in range(nx):
        for j in range(ny - 1):
            v = py[i, j] * u[i, j + 1] - u[i, j]
            e += wy[i, j] * (v.real * v.real + v.imag * v.imag)
    return e


def bilinear_interp(double[:, ::1] v, double[::1] fx, double[::1] fy):
    """Bilinear interpolation at fractional grid indices (fx, fy).

    The caller guarantees 0 <= fx <= nx-1 and 0 <= fy <= ny-1 with a strict
    margin below the upper index, so i+1 and j+1 stay in range.
    """
    cdef Py_ssize_t n = fx.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double tx, ty
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for k in range(n):
        i = <Py_ssize_t> fx[k]
        j = <Py_ssize_t> fy[k]
        tx = fx[k] - i
        ty = fy[k] - j
        out[k] = ((1.0 - tx) * (1.0 - ty) * v[i, j]
                  + tx * (1.0 - ty) * v[i + 1, j]
                  + (1.0 - tx) * ty * v[i, j + 1]
                  + tx * ty * v[i + 1, j + 1])
    return out_arr


def kinetic_energy_grad(cnp.complex128_t[:, ::1] u,
                        cnp.complex128_t[:, ::1] px,
                        cnp.complex128_t[:, ::1] py,
                        double[:, ::1] wx,
                        double[:, ::1] wy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double e = 0.0
    cdef double complex v, wv
    grad_arr = np.zeros((nx, ny), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] grad = grad_arr
    for i in range(nx - 1):
        for j in range(ny):
            v = px[i, j] * u[i + 1, j] - u[i, j]
            e += wx[i, j] * (v.real * v.real + v.imag * v.imag)
            wv = wx[i, j] * v
            grad[i, j] -= wv
            grad[i + 1, j] += wv * px[i, j].conjugate()
    for i in range(nx):
        for j in range(ny - 1):
            v = py[i, j] * u[i, j + 1] - u[i, j]
            e += wy[i, j] * (v.real * v.real + v.imag * v.imag)
            wv = wy[i, j] * v
            grad[i, j] -= wv
            grad[i, j + 1] += wv * py[i, j].conjugate()
    return e, grad_arr
