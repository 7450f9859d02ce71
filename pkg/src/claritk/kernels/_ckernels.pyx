# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot numeric loops.

Mirrors ``_pykernels`` exactly; see that module for the semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, INFINITY

cnp.import_array()

BACKEND = "c"


def remove_outliers(values, long n, double z):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = x.copy()
    cdef long size = x.shape[0]
    cdef long m = size // n
    cdef long b, i, start, blen
    cdef double s, ss, mu, sd, d
    for b in range(m + 1):
        start = b * n
        blen = n if b < m else size - m * n
        if blen < 2:
            continue
        s = 0.0
        for i in range(start, start + blen):
            s += x[i]
        mu = s / blen
        ss = 0.0
        for i in range(start, start + blen):
            d = x[i] - mu
            ss += d * d
        sd = (ss / (blen - 1)) ** 0.5
        for i in range(start, start + blen):
            if fabs(x[i] - mu) > z * sd:
                out[i] = mu
    return out


def moving_average(values, long n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef long size = x.shape[0]
    cdef long half = (n - 1) // 2
    if half == 0 or size == 0:
        return x.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(size)
    cdef long i, j, lo, hi
    cdef double s
    for i in range(size):
        lo = i - half
        if lo < 0:
            lo = 0
        hi = i + half
        if hi > size - 1:
            hi = size - 1
        s = 0.0
        for j in range(lo, hi + 1):
            s += x[j]
        out[i] = s / (hi - lo + 1)
    return out


def tenlayer_integrate(x0, v_up, v_dn, x_f, long feed_idx, double dt, double h,
                       long is_takacs, double v0, double r_h, double r_p, double x_t,
                       long n_steps, long save_stride):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vu_arr = np.ascontiguousarray(v_up, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xf_arr = np.ascontiguousarray(x_f, dtype=np.float64)
    cdef double vdn = v_dn
    cdef long n_saves = n_steps // save_stride + (1 if n_steps % save_stride else 0)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] saved = np.empty((n_saves, 10))
    cdef double[10] g
    cdef double[10] dx
    cdef double[9] j_flux
    cdef long step, j, k = 0
    cdef double vu, feed, vs, m, last_dxdt_max = INFINITY
    for step in range(n_steps):
        vu = vu_arr[step]
        feed = (vu + vdn) * xf_arr[step]
        for j in range(10):
            if is_takacs:
                vs = v0 * (exp(-r_h * x[j]) - exp(-r_p * x[j]))
                if vs < 0.0:
                    vs = 0.0
            else:
                vs = v0 * exp(-r_h * x[j])
            g[j] = x[j] * vs
        for j in range(9):
            if x[j + 1] > x_t:
                j_flux[j] = g[j] if g[j] < g[j + 1] else g[j + 1]
            else:
                j_flux[j] = g[j]
        for j in range(10):
            m = 0.0
            if j <= feed_idx:
                m -= vu * x[j]
            if j >= feed_idx:
                m -= vdn * x[j]
            if j < feed_idx:
                m += vu * x[j + 1]
            if j > feed_idx:
                m += vdn * x[j - 1]
            if j == feed_idx:
                m += feed
            if j < 9:
                m -= j_flux[j]
            if j > 0:
                m += j_flux[j - 1]
            dx[j] = m / h
        for j in range(10):
            x[j] += dt * dx[j]
            if x[j] < 0.0:
                x[j] = 0.0
        if step == n_steps - 1:
            last_dxdt_max = 0.0
            for j in range(10):
                if fabs(dx[j]) > last_dxdt_max:
                    last_dxdt_max = fabs(dx[j])
        if (step + 1) % save_stride == 0 or step == n_steps - 1:
            for j in range(10):
                saved[k, j] = x[j]
            k += 1
    return np.asarray(saved[:k]), last_dxdt_max
