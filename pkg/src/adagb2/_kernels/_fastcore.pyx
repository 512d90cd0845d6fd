# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-iteration kernels.

Semantics are identical (bit for bit) to ``adagb2._kernels.pure``: the
clamp nesting and the order of floating-point operations are the same.
"""

from libc.math cimport fabs, fmax, fmin, sqrt

BACKEND = "compiled"


def project_box(double[::1] y, double[::1] lower, double[::1] upper,
                double[::1] out):
    cdef Py_ssize_t i, n = y.shape[0]
    for i in range(n):
        out[i] = fmax(lower[i], fmin(y[i], upper[i]))


def project_box_cap_trust(double[::1] y, double[::1] lower, double[::1] upper,
                          double[::1] center, double[::1] radii,
                          double[::1] out):
    cdef Py_ssize_t i, n = y.shape[0]
    for i in range(n):
        out[i] = fmax(lower[i],
                      fmax(center[i] - radii[i],
                           fmin(fmin(y[i], center[i] + radii[i]), upper[i])))


def first_order(double[::1] x, double[::1] g,
                double[::1] lower, double[::1] upper, double[::1] w_prev,
                double[::1] d_out, double[::1] w_out,
                double[::1] delta_out, double[::1] sl_out):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double yi, di, wi, deltai
    for i in range(n):
        yi = x[i] - g[i]
        di = fmax(lower[i], fmin(yi, upper[i])) - x[i]
        wi = sqrt(w_prev[i] * w_prev[i] + di * di)
        deltai = fabs(di) / wi
        d_out[i] = di
        w_out[i] = wi
        delta_out[i] = deltai
        sl_out[i] = fmax(lower[i],
                         fmax(x[i] - deltai,
                              fmin(fmin(yi, x[i] + deltai), upper[i]))) - x[i]
